#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "cronus/costmodel.hpp"
#include "helpers.hpp"

using namespace cronus;

TEST_CASE("prefill_time is linear in length") {
    GpuProfile g;
    g.prefill_k = 0.1;
    g.prefill_b = 5.0;
    CHECK(prefill_time(g, 100) == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(prefill_time(g, 0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("chunked_iter_time combines prefill and decode context") {
    GpuProfile g;
    g.chunked_k_ctxp = 0.01;
    g.chunked_k_ctxd = 0.001;
    g.chunked_b = 2.0;
    CHECK(chunked_iter_time(g, 500, 1000) == doctest::Approx(8.0).epsilon(1e-12));
    // decode-only iteration: prefill context 0
    CHECK(chunked_iter_time(g, 0, 1000) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(chunked_iter_time(g, 0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("chunked_total_time equals the arithmetic-series sum") {
    CHECK(chunked_total_time(4, 2.0, 5.0) == doctest::Approx(14.0).epsilon(1e-12));
    CHECK(chunked_total_time(1, 3.0, 3.0) == doctest::Approx(3.0).epsilon(1e-12));
    // oracle: explicit per-iteration sum of evenly spaced durations
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 50.0);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 1 + static_cast<int>(rng() % 40);
        double a = u(rng), b = u(rng);
        if (n == 1) b = a;  // a single iteration has one duration
        double sum = 0.0;
        for (int i = 0; i < n; ++i)
            sum += n == 1 ? a : a + (b - a) * i / (n - 1);
        CHECK(chunked_total_time(n, a, b) == doctest::Approx(sum).epsilon(1e-9));
    }
}

TEST_CASE("fit_prefill recovers noiseless coefficients exactly") {
    const double k = 0.137, b = 11.25;
    std::vector<PrefillSample> s;
    for (int len = 64; len <= 8192; len += 256)
        s.push_back({static_cast<double>(len), k * len + b});
    FitReport r = fit_prefill(s);
    CHECK(std::fabs(r.coefficients[0] - k) / k < 1e-9);
    CHECK(std::fabs(r.coefficients[1] - b) / b < 1e-9);
    CHECK(r.r2 > 1.0 - 1e-9);
    CHECK(r.mape < 1e-9);
}

TEST_CASE("fit_chunked recovers noiseless coefficients exactly") {
    const double kp = 0.0021, kd = 0.00007, b = 23.0;
    std::vector<ChunkedSample> s;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        double pctx = static_cast<double>(rng() % 16384);
        double dctx = static_cast<double>(rng() % 200000);
        s.push_back({pctx, dctx, kp * pctx + kd * dctx + b});
    }
    FitReport r = fit_chunked(s);
    CHECK(std::fabs(r.coefficients[0] - kp) / kp < 1e-9);
    CHECK(std::fabs(r.coefficients[1] - kd) / kd < 1e-9);
    CHECK(std::fabs(r.coefficients[2] - b) / b < 1e-9);
    CHECK(r.r2 > 1.0 - 1e-9);
}

TEST_CASE("fit survives 1% multiplicative noise with r2 >= 0.99") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 0.01);
    const double k = 0.09, b = 8.0;
    std::vector<PrefillSample> ps;
    for (int i = 0; i < 400; ++i) {
        double len = 32 + static_cast<double>(rng() % 16000);
        ps.push_back({len, (k * len + b) * (1.0 + noise(rng))});
    }
    FitReport rp = fit_prefill(ps);
    CHECK(rp.r2 >= 0.99);
    CHECK(std::fabs(rp.coefficients[0] - k) / k < 0.05);

    const double kp = 0.002, kd = 0.00005, bc = 25.0;
    std::vector<ChunkedSample> cs;
    std::normal_distribution<double> half(0.0, 0.005);
    for (int i = 0; i < 400; ++i) {
        double pctx = static_cast<double>(rng() % 16384);
        double dctx = static_cast<double>(rng() % 300000);
        cs.push_back({pctx, dctx, (kp * pctx + kd * dctx + bc) * (1.0 + half(rng))});
    }
    FitReport rc = fit_chunked(cs);
    CHECK(rc.r2 >= 0.99);
    CHECK(rc.mape <= 0.02);
}

TEST_CASE("OLS residuals are orthogonal to the regressors") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.02);
    std::vector<PrefillSample> s;
    for (int i = 0; i < 300; ++i) {
        double len = 1 + static_cast<double>(rng() % 10000);
        s.push_back({len, (0.2 * len + 3.0) * (1.0 + noise(rng))});
    }
    FitReport r = fit_prefill(s);
    double sum_r = 0.0, sum_rx = 0.0, scale = 0.0;
    for (const auto& p : s) {
        double res = p.time_ms - (r.coefficients[0] * p.len + r.coefficients[1]);
        sum_r += res;
        sum_rx += res * p.len;
        scale += std::fabs(p.time_ms) * p.len;
    }
    CHECK(std::fabs(sum_r) < 1e-6 * scale);
    CHECK(std::fabs(sum_rx) < 1e-6 * scale);
}

TEST_CASE("degenerate designs are rejected") {
    std::vector<PrefillSample> same(10, {100.0, 15.0});
    CHECK_THROWS_WITH_AS(fit_prefill(same), "degenerate fit", std::runtime_error);
    CHECK_THROWS_AS(fit_prefill({{1.0, 2.0}}), std::runtime_error);  // too few

    std::vector<ChunkedSample> collinear;
    for (int i = 0; i < 20; ++i)  // decode context is constant: rank-deficient
        collinear.push_back({static_cast<double>(i), 5.0, i * 0.1 + 1.0});
    CHECK_THROWS_AS(fit_chunked(collinear), std::runtime_error);
    CHECK_THROWS_AS(fit_chunked({{1, 1, 1}, {2, 2, 2}}), std::runtime_error);
}
