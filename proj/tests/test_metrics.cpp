#include <doctest.h>

#include <algorithm>
#include <random>

#include "cronus/metrics.hpp"

using namespace cronus;

TEST_CASE("nearest-rank percentile on the reference examples") {
    std::vector<double> v100;
    for (int i = 1; i <= 100; ++i) v100.push_back(i);
    CHECK(percentile(v100, 0.99) == 99.0);

    CHECK(percentile({42.0}, 0.5) == 42.0);
    CHECK(percentile({42.0}, 0.99) == 42.0);

    std::vector<double> v1000;
    for (int i = 1; i <= 1000; ++i) v1000.push_back(i);
    CHECK(percentile(v1000, 0.99) == 990.0);
    CHECK(percentile(v1000, 1.0) == 1000.0);
    CHECK(percentile(v1000, 0.001) == 1.0);
}

TEST_CASE("percentile is permutation invariant and monotone in p") {
    std::mt19937_64 rng(9);
    std::vector<double> v;
    for (int i = 0; i < 500; ++i) v.push_back(static_cast<double>(rng() % 10000));
    std::vector<double> shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (double p : {0.1, 0.5, 0.9, 0.99, 1.0})
        CHECK(percentile(v, p) == percentile(shuffled, p));
    double prev = percentile(v, 0.01);
    for (double p = 0.05; p <= 1.0; p += 0.05) {
        double cur = percentile(v, p);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("percentile rejects bad input") {
    CHECK_THROWS(percentile({}, 0.5));
    CHECK_THROWS(percentile({1.0}, 0.0));
    CHECK_THROWS(percentile({1.0}, 1.5));
}

TEST_CASE("throughput and relative utilization") {
    CHECK(throughput(10, 0.0, 2000.0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(throughput(0, 0.0, 1000.0) == 0.0);
    CHECK_THROWS(throughput(1, 5.0, 5.0));
    CHECK(relative_utilization(5.0, 10.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS(relative_utilization(1.0, 0.0));
}

TEST_CASE("finalize_report pools TBT gaps across requests") {
    RunReport r;
    r.t_start_ms = 0.0;
    RequestRecord a;
    a.id = 0;
    a.ttft_ms = 10.0;
    a.tbt_samples_ms = {5.0, 7.0};
    a.completion_ms = 22.0;
    RequestRecord b;
    b.id = 1;
    b.ttft_ms = 20.0;
    b.tbt_samples_ms = {9.0};
    b.completion_ms = 29.0;
    r.records = {a, b};
    finalize_report(r);
    CHECK(r.n_completed == 2);
    CHECK(r.t_end_ms == 29.0);
    CHECK(r.throughput_rps == doctest::Approx(2 / 0.029).epsilon(1e-9));
    CHECK(r.ttft_mean_ms == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(r.ttft_p99_ms == 20.0);
    CHECK(r.tbt_mean_ms == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(r.tbt_p99_ms == 9.0);  // pooled {5,7,9}
}

TEST_CASE("csv rows are stable and parse back") {
    RunReport r;
    r.policy = "cronus";
    r.trace_name = "t";
    r.trace_hash = 0xdeadbeef;
    r.n_requests = 3;
    RequestRecord rec;
    rec.ttft_ms = 1.0;
    rec.completion_ms = 10.0;
    rec.tbt_samples_ms = {1.0};
    r.records = {rec, rec, rec};
    finalize_report(r);
    std::string row1 = csv_row(r);
    std::string row2 = csv_row(r);
    CHECK(row1 == row2);
    CHECK(row1.substr(0, 7) == "cronus,");
    // same column count as the header
    auto count = [](const std::string& s) {
        return std::count(s.begin(), s.end(), ',');
    };
    CHECK(count(row1) == count(csv_header()));
}
