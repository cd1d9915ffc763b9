#include "cronus/balancer.hpp"

#include <cmath>
#include <stdexcept>

namespace cronus {

namespace {
constexpr int kCandidates = 512;
}

std::vector<int> candidate_lengths(int input_len) {
    if (input_len < 1) throw std::invalid_argument("input_len must be >= 1");
    std::vector<int> out;
    out.reserve(kCandidates);
    for (int i = 1; i <= kCandidates; ++i) {
        long long num = static_cast<long long>(i) * input_len;
        out.push_back(static_cast<int>((num + kCandidates - 1) / kCandidates));
    }
    return out;
}

SplitDecision choose_split(const GpuProfile& low, const GpuProfile& high,
                           const CpiStats& stats, int input_len) {
    if (input_len < 1) throw std::invalid_argument("input_len must be >= 1");
    SplitDecision d;

    // Free-block guard: CPI cannot hold the whole prompt, run it all on the PPI.
    long long need_blocks =
        (input_len + high.kv_block_size - 1) / high.kv_block_size;
    if (stats.free_kv_blocks < need_blocks) {
        d.partial_len = input_len;
        d.full_on_ppi = true;
        d.predicted_t_prefill = prefill_time(low, input_len);
        d.predicted_t_chunked = 0.0;
        return d;
    }

    long long n_p = static_cast<long long>(stats.max_batched_tokens) - stats.n_decode;
    if (n_p <= 0) {
        // Decode requests saturate the token budget; no chunk would ever run.
        d.partial_len = input_len;
        d.cpi_saturated = true;
        d.predicted_t_prefill = prefill_time(low, input_len);
        d.predicted_t_chunked = 0.0;
        return d;
    }

    const auto cands = candidate_lengths(input_len);
    double best_gap = 0.0;
    int best = -1;
    double best_tp = 0.0, best_tc = 0.0;
    for (int i = 0; i < kCandidates; ++i) {
        const long long lp = cands[i];
        const long long lc = input_len - lp;
        double t_prefill = prefill_time(low, static_cast<double>(lp));
        long long n_iter = (lc + n_p - 1) / n_p;
        if (n_iter < 1) n_iter = 1;  // lp == input_len: one KV-handoff iteration
        long long l_last = lp + (lc / n_p) * n_p;
        double t_chunked =
            n_iter * (high.chunked_k_ctxp * (input_len + l_last) / 2.0 +
                      high.chunked_k_ctxd * static_cast<double>(stats.decode_ctx_sum) +
                      high.chunked_b);
        double gap = std::fabs(t_prefill - t_chunked);
        if (best < 0 || gap < best_gap) {  // ties keep the smaller candidate index
            best = i;
            best_gap = gap;
            best_tp = t_prefill;
            best_tc = t_chunked;
        }
    }
    d.partial_len = cands[best];
    d.predicted_t_prefill = best_tp;
    d.predicted_t_chunked = best_tc;
    return d;
}

}  // namespace cronus
