#include "cronus/costmodel.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace cronus {

double prefill_time(const GpuProfile& p, double len) {
    return p.prefill_k * len + p.prefill_b;
}

double chunked_iter_time(const GpuProfile& p, double prefill_ctx, double decode_ctx_sum) {
    return p.chunked_k_ctxp * prefill_ctx + p.chunked_k_ctxd * decode_ctx_sum + p.chunked_b;
}

double chunked_total_time(int n_iter, double t_first, double t_last) {
    return n_iter * (t_first + t_last) / 2.0;
}

namespace {

// Solve A x = b (n <= 3) by Gaussian elimination with partial pivoting.
// Throws on a near-singular system.
void solve_pivoted(int n, double A[3][3], double b[3], double x[3]) {
    int piv[3] = {0, 1, 2};
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::fabs(A[i][j]));
    if (scale <= 0.0) throw std::runtime_error("degenerate fit");
    for (int c = 0; c < n; ++c) {
        int best = c;
        for (int r = c + 1; r < n; ++r)
            if (std::fabs(A[piv[r]][c]) > std::fabs(A[piv[best]][c])) best = r;
        std::swap(piv[c], piv[best]);
        double d = A[piv[c]][c];
        if (std::fabs(d) < 1e-12 * scale) throw std::runtime_error("degenerate fit");
        for (int r = c + 1; r < n; ++r) {
            double f = A[piv[r]][c] / d;
            for (int j = c; j < n; ++j) A[piv[r]][j] -= f * A[piv[c]][j];
            b[piv[r]] -= f * b[piv[c]];
        }
    }
    for (int c = n - 1; c >= 0; --c) {
        double s = b[piv[c]];
        for (int j = c + 1; j < n; ++j) s -= A[piv[c]][j] * x[j];
        x[c] = s / A[piv[c]][c];
    }
}

// OLS with intercept over k regressor columns (k <= 2).
FitReport ols(const std::vector<std::vector<double>>& cols,
              const std::vector<double>& y) {
    const int k = static_cast<int>(cols.size());
    const int n = static_cast<int>(y.size());
    const int m = k + 1;  // + intercept
    double A[3][3] = {{0}};
    double b[3] = {0};
    auto col = [&](int j, int i) { return j < k ? cols[j][i] : 1.0; };
    for (int i = 0; i < n; ++i) {
        for (int r = 0; r < m; ++r) {
            b[r] += col(r, i) * y[i];
            for (int c = 0; c < m; ++c) A[r][c] += col(r, i) * col(c, i);
        }
    }
    double beta[3] = {0};
    solve_pivoted(m, A, b, beta);

    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= n;
    double ss_res = 0.0, ss_tot = 0.0, mape = 0.0;
    int mape_n = 0;
    for (int i = 0; i < n; ++i) {
        double pred = 0.0;
        for (int r = 0; r < m; ++r) pred += beta[r] * col(r, i);
        double e = y[i] - pred;
        ss_res += e * e;
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
        if (std::fabs(y[i]) >= 1e-9) {
            mape += std::fabs(e / y[i]);
            ++mape_n;
        }
    }
    FitReport rep;
    rep.coefficients.assign(beta, beta + m);
    rep.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    rep.mape = mape_n > 0 ? mape / mape_n : 0.0;
    return rep;
}

}  // namespace

FitReport fit_prefill(const std::vector<PrefillSample>& samples) {
    if (samples.size() < 2) throw std::runtime_error("degenerate fit");
    std::vector<double> x, y;
    for (const auto& s : samples) {
        x.push_back(s.len);
        y.push_back(s.time_ms);
    }
    return ols({x}, y);
}

FitReport fit_chunked(const std::vector<ChunkedSample>& samples) {
    if (samples.size() < 3) throw std::runtime_error("degenerate fit");
    std::vector<double> xp, xd, y;
    for (const auto& s : samples) {
        xp.push_back(s.prefill_ctx);
        xd.push_back(s.decode_ctx_sum);
        y.push_back(s.time_ms);
    }
    return ols({xp, xd}, y);
}

}  // namespace cronus
