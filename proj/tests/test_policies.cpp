#include <doctest.h>

#include "cronus/policies.hpp"
#include "helpers.hpp"

using namespace cronus;

TEST_CASE("cronus binding: PPI on the low GPU, CPI on the high GPU") {
    auto cfg = testutil::desk_config();
    cfg.policy = Policy::Cronus;
    PolicyBinding b = bind_policy(cfg);
    REQUIRE(b.instances.size() == 2);
    CHECK(b.instances[0].role == Role::PPI);
    CHECK_FALSE(b.instances[0].on_high_gpu);
    CHECK(b.instances[1].role == Role::CPI);
    CHECK(b.instances[1].on_high_gpu);
    CHECK(b.instances[1].max_batched_tokens == cfg.max_batched_tokens_high);
    CHECK_FALSE(b.ttft_includes_transfer);
}

TEST_CASE("dp binding: one engine per GPU with its own budget") {
    auto cfg = testutil::desk_config();
    cfg.policy = Policy::DpChunked;
    PolicyBinding b = bind_policy(cfg);
    REQUIRE(b.instances.size() == 2);
    CHECK(b.instances[0].role == Role::DpEngine);
    CHECK(b.instances[0].on_high_gpu);
    CHECK(b.instances[0].max_batched_tokens == cfg.max_batched_tokens_high);
    CHECK(b.instances[1].role == Role::DpEngine);
    CHECK_FALSE(b.instances[1].on_high_gpu);
    CHECK(b.instances[1].max_batched_tokens == cfg.max_batched_tokens_low);
    CHECK(b.instances[0].name != b.instances[1].name);
}

TEST_CASE("pp binding: stage 0 high, stage 1 low, shared token budget") {
    auto cfg = testutil::desk_config();
    cfg.policy = Policy::PpChunked;
    PolicyBinding b = bind_policy(cfg);
    REQUIRE(b.instances.size() == 2);
    CHECK(b.instances[0].role == Role::PpStage);
    CHECK(b.instances[0].on_high_gpu);
    CHECK(b.instances[0].index == 0);
    CHECK(b.instances[1].role == Role::PpStage);
    CHECK_FALSE(b.instances[1].on_high_gpu);
    CHECK(b.instances[1].index == 1);
    CHECK(b.instances[1].max_batched_tokens == cfg.max_batched_tokens_high);
}

TEST_CASE("disagg bindings: prefill/decode roles and transfer-inclusive TTFT") {
    auto cfg = testutil::desk_config();
    cfg.policy = Policy::DisaggHighLow;
    PolicyBinding hl = bind_policy(cfg);
    REQUIRE(hl.instances.size() == 2);
    CHECK(hl.instances[0].role == Role::PurePrefill);
    CHECK(hl.instances[0].on_high_gpu);
    CHECK(hl.instances[1].role == Role::PureDecode);
    CHECK_FALSE(hl.instances[1].on_high_gpu);
    CHECK(hl.instances[1].max_batched_tokens == cfg.max_batched_tokens_low);
    CHECK(hl.ttft_includes_transfer);

    cfg.policy = Policy::DisaggLowHigh;
    PolicyBinding lh = bind_policy(cfg);
    CHECK(lh.instances[0].role == Role::PurePrefill);
    CHECK_FALSE(lh.instances[0].on_high_gpu);
    CHECK(lh.instances[1].role == Role::PureDecode);
    CHECK(lh.instances[1].on_high_gpu);
    CHECK(lh.instances[1].max_batched_tokens == cfg.max_batched_tokens_high);
    CHECK(lh.ttft_includes_transfer);
}

TEST_CASE("role names are distinct") {
    CHECK(std::string(role_name(Role::PPI)) == "ppi");
    CHECK(std::string(role_name(Role::CPI)) == "cpi");
    CHECK(std::string(role_name(Role::PurePrefill)) != role_name(Role::PureDecode));
}
