#include <doctest.h>

#include "cronus/model.hpp"
#include "helpers.hpp"

using namespace cronus;

TEST_CASE("transfer_time is latency plus tokens over bandwidth") {
    LinkModel l;
    l.bandwidth = 1.0;
    l.latency = 0.0;
    l.kv_cost_per_token = 1.0;
    CHECK(transfer_time(l, 100) == doctest::Approx(100.0).epsilon(1e-12));
    l.bandwidth = 50.0;
    l.latency = 2.0;
    CHECK(transfer_time(l, 100) == doctest::Approx(4.0).epsilon(1e-12));
    l.kv_cost_per_token = 3.0;
    CHECK(transfer_time(l, 100) == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(transfer_time(l, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("policy names round-trip") {
    for (Policy p : {Policy::Cronus, Policy::DpChunked, Policy::PpChunked,
                     Policy::DisaggHighLow, Policy::DisaggLowHigh}) {
        Policy back;
        REQUIRE(parse_policy(policy_name(p), back));
        CHECK(back == p);
    }
    Policy out;
    CHECK_FALSE(parse_policy("bogus", out));
    CHECK_FALSE(parse_policy("", out));
}

TEST_CASE("validate_config accepts the desk profile") {
    auto cfg = testutil::desk_config();
    CHECK(validate_config(cfg).empty());
}

static bool has_error_containing(const std::vector<std::string>& errs,
                                 const std::string& needle) {
    for (const auto& e : errs)
        if (e.find(needle) != std::string::npos) return true;
    return false;
}

TEST_CASE("validate_config flags bad fields") {
    auto cfg = testutil::desk_config();
    cfg.link.bandwidth = 0.0;
    CHECK(has_error_containing(validate_config(cfg), "link.bandwidth must be positive"));

    cfg = testutil::desk_config();
    cfg.high_gpu.kv_blocks_capacity = 0;
    CHECK(has_error_containing(validate_config(cfg), "high.kv_blocks_capacity"));

    cfg = testutil::desk_config();
    cfg.low_gpu.chunked_k_ctxd = -1.0;
    CHECK(has_error_containing(validate_config(cfg), "low.chunked_k_ctxd"));

    cfg = testutil::desk_config();
    cfg.pp_layers_high = 20;  // 20 + 9 != 32
    CHECK(has_error_containing(validate_config(cfg), "layer split mismatch"));

    cfg = testutil::desk_config();
    cfg.pp_layers_high = cfg.pp_layers_low = 0;
    cfg.policy = Policy::PpChunked;
    CHECK(has_error_containing(validate_config(cfg), "pp_layers"));

    cfg = testutil::desk_config();
    cfg.high_gpu.total_layers = 40;  // profiles disagree on model depth
    CHECK_FALSE(validate_config(cfg).empty());
}

TEST_CASE("config serialization round-trips exactly") {
    auto cfg = testutil::desk_config();
    cfg.policy = Policy::DisaggLowHigh;
    cfg.seed = 42;
    cfg.low_gpu.prefill_k = 0.12345678901234567;  // needs full double precision
    std::string text = serialize_config(cfg);
    ClusterConfig back = parse_config(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.policy == cfg.policy);
    CHECK(back.low_gpu.prefill_k == cfg.low_gpu.prefill_k);
    CHECK(back.high_gpu.kv_blocks_capacity == cfg.high_gpu.kv_blocks_capacity);
    CHECK(back.link.bandwidth == cfg.link.bandwidth);
    CHECK(back.pp_layers_high == cfg.pp_layers_high);
}

TEST_CASE("config parser reports the offending line") {
    try {
        parse_config("policy = cronus\nnot_a_key = 3\n");
        FAIL("expected parse error");
    } catch (const std::exception& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("not_a_key") != std::string::npos);
    }
    CHECK_THROWS(parse_config("high.prefill_k = banana\n"));
    CHECK_THROWS(parse_config("no equals sign here\n"));
}

TEST_CASE("comments and blank lines are ignored") {
    ClusterConfig cfg = parse_config("# comment\n\n  seed = 7\n");
    CHECK(cfg.seed == 7);
}
