#include "cronus/model.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cronus {

double transfer_time(const LinkModel& link, long long tokens) {
    return link.latency + link.kv_cost_per_token * static_cast<double>(tokens) / link.bandwidth;
}

const char* policy_name(Policy p) {
    switch (p) {
        case Policy::Cronus: return "cronus";
        case Policy::DpChunked: return "dp";
        case Policy::PpChunked: return "pp";
        case Policy::DisaggHighLow: return "disagg-hl";
        case Policy::DisaggLowHigh: return "disagg-lh";
    }
    return "?";
}

bool parse_policy(const std::string& s, Policy& out) {
    if (s == "cronus") out = Policy::Cronus;
    else if (s == "dp") out = Policy::DpChunked;
    else if (s == "pp") out = Policy::PpChunked;
    else if (s == "disagg-hl") out = Policy::DisaggHighLow;
    else if (s == "disagg-lh") out = Policy::DisaggLowHigh;
    else return false;
    return true;
}

namespace {

void check_profile(const GpuProfile& g, const std::string& prefix,
                   std::vector<std::string>& errs) {
    if (g.kv_blocks_capacity < 1)
        errs.push_back(prefix + ".kv_blocks_capacity must be >= 1");
    if (g.kv_block_size < 1)
        errs.push_back(prefix + ".kv_block_size must be >= 1");
    if (g.prefill_k < 0) errs.push_back(prefix + ".prefill_k must be >= 0");
    if (g.prefill_b < 0) errs.push_back(prefix + ".prefill_b must be >= 0");
    if (g.chunked_k_ctxp < 0) errs.push_back(prefix + ".chunked_k_ctxp must be >= 0");
    if (g.chunked_k_ctxd < 0) errs.push_back(prefix + ".chunked_k_ctxd must be >= 0");
    if (g.chunked_b < 0) errs.push_back(prefix + ".chunked_b must be >= 0");
    if (g.total_layers < 1) errs.push_back(prefix + ".total_layers must be >= 1");
    if (g.bf16_tflops <= 0) errs.push_back(prefix + ".bf16_tflops must be positive");
}

}  // namespace

std::vector<std::string> validate_config(const ClusterConfig& cfg) {
    std::vector<std::string> errs;
    check_profile(cfg.high_gpu, "high", errs);
    check_profile(cfg.low_gpu, "low", errs);
    if (cfg.link.bandwidth <= 0) errs.push_back("link.bandwidth must be positive");
    if (cfg.link.latency < 0) errs.push_back("link.latency must be >= 0");
    if (cfg.link.kv_cost_per_token < 0) errs.push_back("link.kv_cost_per_token must be >= 0");
    if (cfg.max_batched_tokens_high < 1)
        errs.push_back("max_batched_tokens_high must be >= 1");
    if (cfg.max_batched_tokens_low < 1)
        errs.push_back("max_batched_tokens_low must be >= 1");
    if (cfg.dp_weight_high < 1) errs.push_back("dp_weight_high must be >= 1");
    if (cfg.dp_weight_low < 0) errs.push_back("dp_weight_low must be >= 0");
    if (cfg.dp_queue_cap_high < 1) errs.push_back("dp_queue_cap_high must be >= 1");
    if (cfg.dp_queue_cap_low < 1) errs.push_back("dp_queue_cap_low must be >= 1");
    if (cfg.ppi_max_inflight < 1) errs.push_back("ppi_max_inflight must be >= 1");
    if (cfg.pp_comm_ms < 0) errs.push_back("pp_comm_ms must be >= 0");
    if (cfg.pp_layers_high != 0 || cfg.pp_layers_low != 0) {
        if (cfg.high_gpu.total_layers != cfg.low_gpu.total_layers)
            errs.push_back("high.total_layers/low.total_layers: profiles disagree on model depth");
        if (cfg.pp_layers_high < 1 || cfg.pp_layers_low < 1)
            errs.push_back("pp_layers_high/pp_layers_low must be >= 1");
        else if (cfg.pp_layers_high + cfg.pp_layers_low != cfg.high_gpu.total_layers)
            errs.push_back("pp_layers_high/pp_layers_low: layer split mismatch (" +
                           std::to_string(cfg.pp_layers_high) + "+" +
                           std::to_string(cfg.pp_layers_low) + " != " +
                           std::to_string(cfg.high_gpu.total_layers) + ")");
    } else if (cfg.policy == Policy::PpChunked) {
        errs.push_back("pp_layers_high/pp_layers_low required for the pp policy");
    }
    return errs;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit_profile(std::ostringstream& os, const std::string& p, const GpuProfile& g) {
    os << p << ".name = " << g.name << "\n";
    os << p << ".kv_blocks_capacity = " << g.kv_blocks_capacity << "\n";
    os << p << ".kv_block_size = " << g.kv_block_size << "\n";
    os << p << ".prefill_k = " << fmt_double(g.prefill_k) << "\n";
    os << p << ".prefill_b = " << fmt_double(g.prefill_b) << "\n";
    os << p << ".chunked_k_ctxp = " << fmt_double(g.chunked_k_ctxp) << "\n";
    os << p << ".chunked_k_ctxd = " << fmt_double(g.chunked_k_ctxd) << "\n";
    os << p << ".chunked_b = " << fmt_double(g.chunked_b) << "\n";
    os << p << ".total_layers = " << g.total_layers << "\n";
    os << p << ".bf16_tflops = " << fmt_double(g.bf16_tflops) << "\n";
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::string serialize_config(const ClusterConfig& cfg) {
    std::ostringstream os;
    os << "policy = " << policy_name(cfg.policy) << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "max_batched_tokens_high = " << cfg.max_batched_tokens_high << "\n";
    os << "max_batched_tokens_low = " << cfg.max_batched_tokens_low << "\n";
    os << "dp_weight_high = " << cfg.dp_weight_high << "\n";
    os << "dp_weight_low = " << cfg.dp_weight_low << "\n";
    os << "dp_queue_cap_high = " << cfg.dp_queue_cap_high << "\n";
    os << "dp_queue_cap_low = " << cfg.dp_queue_cap_low << "\n";
    os << "pp_layers_high = " << cfg.pp_layers_high << "\n";
    os << "pp_layers_low = " << cfg.pp_layers_low << "\n";
    os << "pp_comm_ms = " << fmt_double(cfg.pp_comm_ms) << "\n";
    os << "ppi_max_inflight = " << cfg.ppi_max_inflight << "\n";
    os << "link.bandwidth = " << fmt_double(cfg.link.bandwidth) << "\n";
    os << "link.latency = " << fmt_double(cfg.link.latency) << "\n";
    os << "link.kv_cost_per_token = " << fmt_double(cfg.link.kv_cost_per_token) << "\n";
    emit_profile(os, "high", cfg.high_gpu);
    emit_profile(os, "low", cfg.low_gpu);
    return os.str();
}

ClusterConfig parse_config(const std::string& text) {
    ClusterConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto bad = [&](const std::string& msg) {
        throw std::runtime_error("config line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos) bad("expected 'key = value'");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        auto as_d = [&]() {
            try { return std::stod(val); } catch (...) { bad("bad number for " + key); }
            return 0.0;
        };
        auto as_i = [&]() {
            try { return std::stoll(val); } catch (...) { bad("bad integer for " + key); }
            return 0ll;
        };
        GpuProfile* g = nullptr;
        std::string sub = key;
        if (key.rfind("high.", 0) == 0) { g = &cfg.high_gpu; sub = key.substr(5); }
        else if (key.rfind("low.", 0) == 0) { g = &cfg.low_gpu; sub = key.substr(4); }
        if (g) {
            if (sub == "name") g->name = val;
            else if (sub == "kv_blocks_capacity") g->kv_blocks_capacity = as_i();
            else if (sub == "kv_block_size") g->kv_block_size = static_cast<int>(as_i());
            else if (sub == "prefill_k") g->prefill_k = as_d();
            else if (sub == "prefill_b") g->prefill_b = as_d();
            else if (sub == "chunked_k_ctxp") g->chunked_k_ctxp = as_d();
            else if (sub == "chunked_k_ctxd") g->chunked_k_ctxd = as_d();
            else if (sub == "chunked_b") g->chunked_b = as_d();
            else if (sub == "total_layers") g->total_layers = static_cast<int>(as_i());
            else if (sub == "bf16_tflops") g->bf16_tflops = as_d();
            else bad("unknown key " + key);
            continue;
        }
        if (key == "policy") {
            if (!parse_policy(val, cfg.policy)) bad("unknown policy '" + val + "'");
        } else if (key == "seed") cfg.seed = as_i();
        else if (key == "max_batched_tokens_high") cfg.max_batched_tokens_high = static_cast<int>(as_i());
        else if (key == "max_batched_tokens_low") cfg.max_batched_tokens_low = static_cast<int>(as_i());
        else if (key == "dp_weight_high") cfg.dp_weight_high = static_cast<int>(as_i());
        else if (key == "dp_weight_low") cfg.dp_weight_low = static_cast<int>(as_i());
        else if (key == "dp_queue_cap_high") cfg.dp_queue_cap_high = static_cast<int>(as_i());
        else if (key == "dp_queue_cap_low") cfg.dp_queue_cap_low = static_cast<int>(as_i());
        else if (key == "pp_layers_high") cfg.pp_layers_high = static_cast<int>(as_i());
        else if (key == "pp_layers_low") cfg.pp_layers_low = static_cast<int>(as_i());
        else if (key == "pp_comm_ms") cfg.pp_comm_ms = as_d();
        else if (key == "ppi_max_inflight") cfg.ppi_max_inflight = static_cast<int>(as_i());
        else if (key == "link.bandwidth") cfg.link.bandwidth = as_d();
        else if (key == "link.latency") cfg.link.latency = as_d();
        else if (key == "link.kv_cost_per_token") cfg.link.kv_cost_per_token = as_d();
        else bad("unknown key " + key);
    }
    return cfg;
}

ClusterConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void save_config(const ClusterConfig& cfg, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write config file: " + path);
    f << serialize_config(cfg);
}

}  // namespace cronus
