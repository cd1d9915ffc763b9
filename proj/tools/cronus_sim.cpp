// Command-line driver: single runs, policy sweeps, cost-model calibration,
// split inspection, and trace synthesis.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cronus/balancer.hpp"
#include "cronus/costmodel.hpp"
#include "cronus/engine.hpp"
#include "cronus/metrics.hpp"
#include "cronus/model.hpp"
#include "cronus/trace.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct TraceArgs {
    std::string trace_path;
    int synth_n = 0;
    double mean_in = 1014.0;
    double mean_out = 247.0;
    std::string arrival = "all-at-zero";
    double interval_ms = 10.0;
    long long seed = 1;
};

void add_trace_flags(CLI::App* cmd, TraceArgs& a) {
    cmd->add_option("--trace", a.trace_path, "trace file (id arrival_ms input_len output_len per line)");
    cmd->add_option("--synth-n", a.synth_n, "synthesize a trace with this many requests instead of --trace");
    cmd->add_option("--synth-mean-in", a.mean_in, "mean input length for synthesis");
    cmd->add_option("--synth-mean-out", a.mean_out, "mean output length for synthesis");
    cmd->add_option("--arrival", a.arrival, "arrival process: all-at-zero | fixed-interval")
        ->check(CLI::IsMember({"all-at-zero", "fixed-interval"}));
    cmd->add_option("--interval-ms", a.interval_ms, "inter-arrival gap for fixed-interval");
    cmd->add_option("--synth-seed", a.seed, "RNG seed for synthesis");
}

cronus::Trace resolve_trace(const TraceArgs& a) {
    if (!a.trace_path.empty()) return cronus::load_trace(a.trace_path);
    if (a.synth_n < 1)
        throw std::runtime_error("either --trace or --synth-n is required");
    auto mode = a.arrival == "fixed-interval" ? cronus::ArrivalMode::FixedInterval
                                              : cronus::ArrivalMode::AllAtZero;
    return cronus::synth_trace(a.synth_n, a.mean_in, a.mean_out, mode, a.interval_ms,
                               a.seed);
}

// --config accepts a path, or a bare name resolved in $CRONUS_CONFIG_DIR.
cronus::ClusterConfig resolve_config(const std::string& arg) {
    std::ifstream probe(arg);
    if (probe) return cronus::load_config(arg);
    if (const char* dir = std::getenv("CRONUS_CONFIG_DIR")) {
        std::string p = std::string(dir) + "/" + arg;
        std::ifstream probe2(p);
        if (!probe2) {
            p += ".cfg";
            std::ifstream probe3(p);
            if (probe3) return cronus::load_config(p);
        } else {
            return cronus::load_config(p);
        }
    }
    throw std::runtime_error("cannot open config file: " + arg);
}

int cmd_run(const std::string& config_arg, const std::string& policy,
            const TraceArgs& targs, const std::string& csv_path,
            const std::string& json_path, const std::string& events_path,
            bool utilization, bool strict) {
    cronus::ClusterConfig cfg;
    cronus::Trace trace;
    try {
        cfg = resolve_config(config_arg);
        if (!policy.empty() && !cronus::parse_policy(policy, cfg.policy)) {
            std::cerr << "unknown policy '" << policy << "'\n";
            return kExitValidation;
        }
        auto errs = cronus::validate_config(cfg);
        if (!errs.empty()) {
            for (const auto& e : errs) std::cerr << "config error: " << e << "\n";
            return kExitValidation;
        }
        trace = resolve_trace(targs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    cronus::RunOptions opts;
    opts.compute_utilization = utilization;
    std::ofstream events;
    if (!events_path.empty()) {
        events.open(events_path);
        if (!events) {
            std::cerr << "error: cannot write " << events_path << "\n";
            return kExitValidation;
        }
        opts.event_log = &events;
    }
    cronus::RunReport rep;
    try {
        rep = cronus::run(cfg, trace, opts);
    } catch (const std::exception& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return kExitRuntime;
    }
    cronus::write_report_table(rep, std::cout);
    if (!csv_path.empty()) {
        std::ofstream f(csv_path);
        f << cronus::csv_header() << "\n" << cronus::csv_row(rep) << "\n";
    }
    if (!json_path.empty()) {
        std::ofstream f(json_path);
        f << cronus::report_to_json(rep, true) << "\n";
    }
    if (strict && (!rep.violations.empty() || !rep.failed_ids.empty())) {
        std::cerr << "strict mode: " << rep.violations.size() << " violations, "
                  << rep.failed_ids.size() << " failed requests\n";
        return kExitRuntime;
    }
    return 0;
}

int cmd_compare(const std::string& config_arg, const std::string& policies_csv,
                const TraceArgs& targs, const std::string& csv_path, bool strict) {
    cronus::ClusterConfig base;
    cronus::Trace trace;
    std::vector<cronus::Policy> policies;
    try {
        base = resolve_config(config_arg);
        std::istringstream is(policies_csv);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            cronus::Policy p;
            if (!cronus::parse_policy(tok, p))
                throw std::runtime_error("unknown policy '" + tok + "'");
            policies.push_back(p);
        }
        if (policies.empty()) throw std::runtime_error("empty --policies list");
        trace = resolve_trace(targs);  // one instantiation shared by every row
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    std::ostringstream out;
    out << cronus::csv_header() << "\n";
    bool any_failed = false;
    for (cronus::Policy p : policies) {
        cronus::ClusterConfig cfg = base;
        cfg.policy = p;
        cronus::RunOptions opts;
        opts.compute_utilization = true;
        try {
            cronus::RunReport rep = cronus::run(cfg, trace, opts);
            out << cronus::csv_row(rep) << "\n";
            if (!rep.violations.empty() || !rep.failed_ids.empty()) any_failed = true;
        } catch (const std::exception& e) {
            std::string msg = e.what();
            for (char& c : msg)
                if (c == ',' || c == '\n') c = ';';
            out << cronus::policy_name(p) << ",FAILED," << msg << "\n";
            any_failed = true;
        }
    }
    if (csv_path.empty()) {
        std::cout << out.str();
    } else {
        std::ofstream f(csv_path);
        if (!f) {
            std::cerr << "error: cannot write " << csv_path << "\n";
            return kExitValidation;
        }
        f << out.str();
    }
    if (strict && any_failed) return kExitRuntime;
    return 0;
}

int cmd_calibrate(const std::string& samples_path, const std::string& kind) {
    std::ifstream f(samples_path);
    if (!f) {
        std::cerr << "error: cannot open samples file: " << samples_path << "\n";
        return kExitValidation;
    }
    std::vector<cronus::PrefillSample> ps;
    std::vector<cronus::ChunkedSample> cs;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream is(line);
        std::string first;
        if (!(is >> first) || first[0] == '#') continue;
        std::istringstream row(line);
        if (kind == "prefill") {
            cronus::PrefillSample s;
            if (!(row >> s.len >> s.time_ms)) {
                std::cerr << samples_path << ":" << lineno << ": expected 'len time_ms'\n";
                return kExitValidation;
            }
            ps.push_back(s);
        } else {
            cronus::ChunkedSample s;
            if (!(row >> s.prefill_ctx >> s.decode_ctx_sum >> s.time_ms)) {
                std::cerr << samples_path << ":" << lineno
                          << ": expected 'prefill_ctx decode_ctx_sum time_ms'\n";
                return kExitValidation;
            }
            cs.push_back(s);
        }
    }
    try {
        char buf[64];
        auto num = [&](double v) {
            std::snprintf(buf, sizeof(buf), "%.12g", v);
            return std::string(buf);
        };
        if (kind == "prefill") {
            cronus::FitReport r = cronus::fit_prefill(ps);
            std::cout << "# fit: r2=" << num(r.r2) << " mape=" << num(r.mape) << "\n";
            std::cout << "prefill_k = " << num(r.coefficients[0]) << "\n";
            std::cout << "prefill_b = " << num(r.coefficients[1]) << "\n";
        } else {
            cronus::FitReport r = cronus::fit_chunked(cs);
            std::cout << "# fit: r2=" << num(r.r2) << " mape=" << num(r.mape) << "\n";
            std::cout << "chunked_k_ctxp = " << num(r.coefficients[0]) << "\n";
            std::cout << "chunked_k_ctxd = " << num(r.coefficients[1]) << "\n";
            std::cout << "chunked_b = " << num(r.coefficients[2]) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "calibration error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}

int cmd_split(const std::string& config_arg, int input_len, int n_decode,
              long long decode_ctx_sum, long long free_kv_blocks) {
    try {
        cronus::ClusterConfig cfg = resolve_config(config_arg);
        auto errs = cronus::validate_config(cfg);
        if (!errs.empty()) {
            for (const auto& e : errs) std::cerr << "config error: " << e << "\n";
            return kExitValidation;
        }
        cronus::CpiStats st;
        st.n_decode = n_decode;
        st.decode_ctx_sum = decode_ctx_sum;
        st.free_kv_blocks =
            free_kv_blocks >= 0 ? free_kv_blocks : cfg.high_gpu.kv_blocks_capacity;
        st.max_batched_tokens = cfg.max_batched_tokens_high;
        cronus::SplitDecision d =
            cronus::choose_split(cfg.low_gpu, cfg.high_gpu, st, input_len);
        std::cout << "partial_len = " << d.partial_len << "\n";
        std::cout << "predicted_t_prefill_ms = " << d.predicted_t_prefill << "\n";
        std::cout << "predicted_t_chunked_ms = " << d.predicted_t_chunked << "\n";
        std::cout << "full_on_ppi = " << (d.full_on_ppi ? "true" : "false") << "\n";
        std::cout << "cpi_saturated = " << (d.cpi_saturated ? "true" : "false") << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}

int cmd_synth(const TraceArgs& targs, const std::string& out_path) {
    try {
        cronus::Trace t = resolve_trace(targs);
        cronus::save_trace(t, out_path);
        std::cout << "wrote " << t.requests.size() << " requests to " << out_path
                  << " (hash " << std::hex << cronus::trace_hash(t) << std::dec << ")\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trace-driven simulator for heterogeneous two-GPU LLM serving"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "simulate one policy and print a report");
    std::string run_config, run_policy, run_csv, run_json, run_events;
    bool run_util = false, run_strict = false;
    TraceArgs run_trace;
    run->add_option("--config", run_config, "config file or name in $CRONUS_CONFIG_DIR")
        ->required();
    run->add_option("--policy", run_policy,
                    "override config policy: cronus|dp|pp|disagg-hl|disagg-lh");
    add_trace_flags(run, run_trace);
    run->add_option("--csv", run_csv, "also write a one-row CSV");
    run->add_option("--json", run_json, "also write a JSON report with per-request records");
    run->add_option("--emit-events", run_events, "write the event log to this path");
    run->add_flag("--utilization", run_util, "compute relative utilizations");
    run->add_flag("--strict", run_strict,
                  "exit nonzero if any request fails or an invariant is violated");

    // compare
    auto* cmp = app.add_subcommand("compare", "run several policies on one shared trace");
    std::string cmp_config, cmp_policies = "cronus,dp,pp,disagg-hl,disagg-lh", cmp_csv;
    bool cmp_strict = false;
    TraceArgs cmp_trace;
    cmp->add_option("--config", cmp_config, "config file or name in $CRONUS_CONFIG_DIR")
        ->required();
    cmp->add_option("--policies", cmp_policies, "comma-separated policy list (row order)");
    add_trace_flags(cmp, cmp_trace);
    cmp->add_option("--csv", cmp_csv, "write CSV here instead of stdout");
    cmp->add_flag("--strict", cmp_strict, "exit nonzero if any row fails");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "fit cost-model coefficients from samples");
    std::string cal_samples, cal_kind;
    cal->add_option("--samples", cal_samples, "sample file")->required();
    cal->add_option("--kind", cal_kind, "prefill | chunked")
        ->required()
        ->check(CLI::IsMember({"prefill", "chunked"}));

    // split
    auto* spl = app.add_subcommand("split", "show the balancer decision for one request");
    std::string spl_config;
    int spl_input = 0, spl_ndec = 0;
    long long spl_ctxd = 0, spl_free = -1;
    spl->add_option("--config", spl_config, "config file or name in $CRONUS_CONFIG_DIR")
        ->required();
    spl->add_option("--input-len", spl_input, "prompt length")->required();
    spl->add_option("--n-decode", spl_ndec, "decode requests running on the CPI");
    spl->add_option("--decode-ctx-sum", spl_ctxd, "sum of their context lengths");
    spl->add_option("--free-kv-blocks", spl_free, "free CPI KV blocks (default: full capacity)");

    // synth
    auto* syn = app.add_subcommand("synth", "write a synthetic trace file");
    TraceArgs syn_trace;
    std::string syn_out;
    add_trace_flags(syn, syn_trace);
    syn->add_option("--out", syn_out, "output trace path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (run->parsed())
        return cmd_run(run_config, run_policy, run_trace, run_csv, run_json, run_events,
                       run_util, run_strict);
    if (cmp->parsed())
        return cmd_compare(cmp_config, cmp_policies, cmp_trace, cmp_csv, cmp_strict);
    if (cal->parsed()) return cmd_calibrate(cal_samples, cal_kind);
    if (spl->parsed())
        return cmd_split(spl_config, spl_input, spl_ndec, spl_ctxd, spl_free);
    if (syn->parsed()) return cmd_synth(syn_trace, syn_out);
    return kExitUsage;
}
