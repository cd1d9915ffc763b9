#pragma once

#include <vector>

#include "cronus/costmodel.hpp"
#include "cronus/model.hpp"

namespace cronus {

// Snapshot of the chunked prefill instance read by the balancer at dispatch.
struct CpiStats {
    int n_decode = 0;              // decode requests currently running
    long long decode_ctx_sum = 0;  // sum of their context lengths
    long long free_kv_blocks = 0;
    int max_batched_tokens = 512;
};

struct SplitDecision {
    int partial_len = 1;
    double predicted_t_prefill = 0.0;
    double predicted_t_chunked = 0.0;
    bool full_on_ppi = false;       // free-block guard fired
    bool cpi_saturated = false;     // decode requests consume the whole token budget
};

// The 512 evenly spaced candidates ceil(i * input_len / 512), i = 1..512.
std::vector<int> candidate_lengths(int input_len);

// Pick the partial prefill length whose predicted PPI time is closest to the
// predicted CPI completion time; ties break toward the smaller candidate.
// `low` is the PPI profile, `high` the CPI profile.
SplitDecision choose_split(const GpuProfile& low, const GpuProfile& high,
                           const CpiStats& stats, int input_len);

}  // namespace cronus
