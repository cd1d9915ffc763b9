#pragma once

#include <iosfwd>

#include "cronus/metrics.hpp"
#include "cronus/model.hpp"
#include "cronus/trace.hpp"

namespace cronus {

struct RunOptions {
    bool compute_utilization = false;
    std::ostream* event_log = nullptr;  // newline-delimited event records
};

// Simulate the trace to quiescence under cfg.policy. Deterministic:
// identical (cfg, trace) inputs produce identical reports.
RunReport run(const ClusterConfig& cfg, const Trace& trace, const RunOptions& opts = {});

// Standalone maximum throughputs (requests/s) used by the relative
// utilization diagnostic: the instance alone, all requests available at t=0.
double standalone_prefill_rps(const GpuProfile& prof, const Trace& trace);
double standalone_decode_rps(const GpuProfile& prof, int max_batched_tokens, const Trace& trace);
double standalone_chunked_rps(const GpuProfile& prof, int max_batched_tokens, const Trace& trace);

}  // namespace cronus
