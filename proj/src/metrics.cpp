#include "cronus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace cronus {

double percentile(std::vector<double> samples, double p) {
    if (samples.empty()) throw std::invalid_argument("percentile: empty sample set");
    if (p <= 0.0 || p > 1.0) throw std::invalid_argument("percentile: p must be in (0, 1]");
    std::sort(samples.begin(), samples.end());
    size_t n = samples.size();
    size_t rank = static_cast<size_t>(std::ceil(p * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    return samples[rank - 1];
}

double throughput(int completed, double t_start_ms, double t_end_ms) {
    double span_s = (t_end_ms - t_start_ms) / 1000.0;
    if (span_s <= 0.0) throw std::invalid_argument("throughput: empty time span");
    return completed / span_s;
}

double relative_utilization(double run_rps, double standalone_rps) {
    if (standalone_rps <= 0.0)
        throw std::invalid_argument("relative_utilization: standalone throughput must be positive");
    return run_rps / standalone_rps;
}

void finalize_report(RunReport& r) {
    r.n_completed = static_cast<int>(r.records.size());
    if (r.records.empty()) return;
    std::vector<double> ttft, tbt;
    double t_end = r.t_start_ms;
    for (const auto& rec : r.records) {
        ttft.push_back(rec.ttft_ms);
        for (double g : rec.tbt_samples_ms) tbt.push_back(g);
        t_end = std::max(t_end, rec.completion_ms);
    }
    r.t_end_ms = t_end;
    r.throughput_rps = throughput(r.n_completed, r.t_start_ms, r.t_end_ms);
    double s = 0.0;
    for (double v : ttft) s += v;
    r.ttft_mean_ms = s / ttft.size();
    r.ttft_p99_ms = percentile(ttft, 0.99);
    if (!tbt.empty()) {
        s = 0.0;
        for (double v : tbt) s += v;
        r.tbt_mean_ms = s / tbt.size();
        r.tbt_p99_ms = percentile(tbt, 0.99);
    }
}

namespace {
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}
}  // namespace

void write_report_table(const RunReport& r, std::ostream& os) {
    os << "policy:        " << r.policy << "\n";
    os << "trace:         " << r.trace_name << "\n";
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(r.trace_hash));
    os << "trace_hash:    " << hash << "\n";
    os << "requests:      " << r.n_requests << " (completed " << r.n_completed
       << ", failed " << r.failed_ids.size() << ")\n";
    os << "makespan_ms:   " << fmt(r.t_end_ms - r.t_start_ms) << "\n";
    os << "throughput:    " << fmt(r.throughput_rps) << " req/s\n";
    os << "ttft_mean_ms:  " << fmt(r.ttft_mean_ms) << "\n";
    os << "ttft_p99_ms:   " << fmt(r.ttft_p99_ms) << "\n";
    os << "tbt_mean_ms:   " << fmt(r.tbt_mean_ms) << "\n";
    os << "tbt_p99_ms:    " << fmt(r.tbt_p99_ms) << "\n";
    if (r.util_high >= 0) os << "util_high:     " << fmt(r.util_high) << "\n";
    if (r.util_low >= 0) os << "util_low:      " << fmt(r.util_low) << "\n";
    for (const auto& inst : r.instances) {
        os << "instance " << inst.name << " [" << inst.role << "]: iters=" << inst.iterations
           << " prefill_tok=" << inst.prefill_tokens << " decode_tok=" << inst.decode_tokens
           << " completions=" << inst.completions << " busy_ms=" << fmt(inst.busy_ms) << "\n";
    }
    if (!r.violations.empty()) {
        os << "violations (" << r.violations.size() << "):\n";
        for (const auto& v : r.violations) os << "  " << v << "\n";
    }
}

std::string csv_header() {
    return "policy,trace,trace_hash,requests,completed,failed,throughput_rps,"
           "ttft_mean_ms,ttft_p99_ms,tbt_mean_ms,tbt_p99_ms,util_high,util_low";
}

std::string csv_row(const RunReport& r) {
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(r.trace_hash));
    std::string row = r.policy + "," + r.trace_name + "," + hash + "," +
                      std::to_string(r.n_requests) + "," + std::to_string(r.n_completed) +
                      "," + std::to_string(r.failed_ids.size()) + "," +
                      fmt(r.throughput_rps) + "," + fmt(r.ttft_mean_ms) + "," +
                      fmt(r.ttft_p99_ms) + "," + fmt(r.tbt_mean_ms) + "," +
                      fmt(r.tbt_p99_ms) + "," + fmt(r.util_high) + "," + fmt(r.util_low);
    return row;
}

std::string report_to_json(const RunReport& r, bool include_records) {
    nlohmann::json j;
    j["policy"] = r.policy;
    j["trace"] = r.trace_name;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(r.trace_hash));
    j["trace_hash"] = hash;
    j["requests"] = r.n_requests;
    j["completed"] = r.n_completed;
    j["failed_ids"] = r.failed_ids;
    j["t_start_ms"] = r.t_start_ms;
    j["t_end_ms"] = r.t_end_ms;
    j["throughput_rps"] = r.throughput_rps;
    j["ttft_mean_ms"] = r.ttft_mean_ms;
    j["ttft_p99_ms"] = r.ttft_p99_ms;
    j["tbt_mean_ms"] = r.tbt_mean_ms;
    j["tbt_p99_ms"] = r.tbt_p99_ms;
    j["util_high"] = r.util_high;
    j["util_low"] = r.util_low;
    j["violations"] = r.violations;
    j["instances"] = nlohmann::json::array();
    for (const auto& inst : r.instances) {
        j["instances"].push_back({{"name", inst.name},
                                  {"role", inst.role},
                                  {"iterations", inst.iterations},
                                  {"prefill_tokens", inst.prefill_tokens},
                                  {"decode_tokens", inst.decode_tokens},
                                  {"completions", inst.completions},
                                  {"busy_ms", inst.busy_ms}});
    }
    if (include_records) {
        j["records"] = nlohmann::json::array();
        for (const auto& rec : r.records) {
            j["records"].push_back({{"id", rec.id},
                                    {"ttft_ms", rec.ttft_ms},
                                    {"tbt_samples_ms", rec.tbt_samples_ms},
                                    {"completion_ms", rec.completion_ms},
                                    {"partial_prefill_len", rec.partial_prefill_len},
                                    {"assigned_instance", rec.assigned_instance}});
        }
    }
    return j.dump(2);
}

}  // namespace cronus
