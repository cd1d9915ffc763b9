#pragma once

#include <vector>

#include "cronus/model.hpp"

namespace cronus {

// Linear prefill execution time: prefill_k * len + prefill_b.
double prefill_time(const GpuProfile& p, double len);

// One chunked-prefill iteration batching a prefill chunk with decode requests:
// chunked_k_ctxp * prefill_ctx + chunked_k_ctxd * decode_ctx_sum + chunked_b.
// A decode-only iteration is the same expression with prefill_ctx = 0.
double chunked_iter_time(const GpuProfile& p, double prefill_ctx, double decode_ctx_sum);

// Total time of n_iter chunked iterations whose durations form an arithmetic
// sequence from t_first to t_last.
double chunked_total_time(int n_iter, double t_first, double t_last);

struct PrefillSample {
    double len = 0.0;
    double time_ms = 0.0;
};

struct ChunkedSample {
    double prefill_ctx = 0.0;
    double decode_ctx_sum = 0.0;
    double time_ms = 0.0;
};

struct FitReport {
    std::vector<double> coefficients;  // (k, b) or (k_ctxp, k_ctxd, b)
    double r2 = 0.0;
    double mape = 0.0;  // fraction; samples with |time| < 1e-9 are skipped
};

// Ordinary least squares via normal equations with a partial-pivot solve.
// Throws std::runtime_error("degenerate fit") on a rank-deficient design.
FitReport fit_prefill(const std::vector<PrefillSample>& samples);
FitReport fit_chunked(const std::vector<ChunkedSample>& samples);

}  // namespace cronus
