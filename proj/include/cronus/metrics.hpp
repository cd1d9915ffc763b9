#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cronus/model.hpp"

namespace cronus {

struct InstanceSummary {
    std::string name;
    std::string role;
    uint64_t iterations = 0;
    long long prefill_tokens = 0;
    long long decode_tokens = 0;
    int completions = 0;
    double busy_ms = 0.0;
};

struct RunReport {
    std::string policy;
    std::string trace_name;
    uint64_t trace_hash = 0;
    int n_requests = 0;
    int n_completed = 0;
    std::vector<int> failed_ids;
    double t_start_ms = 0.0;
    double t_end_ms = 0.0;
    double throughput_rps = 0.0;
    double ttft_mean_ms = 0.0;
    double ttft_p99_ms = 0.0;
    double tbt_mean_ms = 0.0;
    double tbt_p99_ms = 0.0;
    double util_high = -1.0;  // relative utilization of the high-GPU instance, -1 = n/a
    double util_low = -1.0;
    std::vector<RequestRecord> records;
    std::vector<InstanceSummary> instances;
    std::vector<std::string> violations;  // internal invariant checks; empty on a clean run
};

// Nearest-rank percentile: sort ascending, take element ceil(p*n) (1-based).
double percentile(std::vector<double> samples, double p);

// Completed requests per second over [t_start, t_end] (both ms).
double throughput(int completed, double t_start_ms, double t_end_ms);

// System throughput divided by the instance's standalone maximum.
double relative_utilization(double run_rps, double standalone_rps);

// Fills throughput/latency aggregates of `r` from its records.
void finalize_report(RunReport& r);

void write_report_table(const RunReport& r, std::ostream& os);
std::string csv_header();
std::string csv_row(const RunReport& r);
std::string report_to_json(const RunReport& r, bool include_records);

}  // namespace cronus
