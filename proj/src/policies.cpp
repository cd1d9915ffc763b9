#include "cronus/policies.hpp"

#include <stdexcept>

namespace cronus {

const char* role_name(Role r) {
    switch (r) {
        case Role::PPI: return "ppi";
        case Role::CPI: return "cpi";
        case Role::PurePrefill: return "prefill";
        case Role::PureDecode: return "decode";
        case Role::PpStage: return "pp-stage";
        case Role::DpEngine: return "dp-engine";
    }
    return "?";
}

namespace {

InstanceSpec make(Role role, bool on_high, int batched, int index,
                  const ClusterConfig& cfg) {
    InstanceSpec s;
    s.role = role;
    s.on_high_gpu = on_high;
    s.max_batched_tokens = batched;
    s.index = index;
    const auto& gpu = on_high ? cfg.high_gpu : cfg.low_gpu;
    s.name = std::string(role_name(role));
    if (role == Role::PpStage || role == Role::DpEngine)
        s.name += std::to_string(index);
    s.name += "(" + gpu.name + ")";
    return s;
}

}  // namespace

PolicyBinding bind_cronus(const ClusterConfig& cfg) {
    PolicyBinding b;
    b.policy = Policy::Cronus;
    b.instances.push_back(make(Role::PPI, false, 0, 0, cfg));
    b.instances.push_back(make(Role::CPI, true, cfg.max_batched_tokens_high, 1, cfg));
    return b;
}

PolicyBinding bind_dp(const ClusterConfig& cfg) {
    PolicyBinding b;
    b.policy = Policy::DpChunked;
    b.instances.push_back(make(Role::DpEngine, true, cfg.max_batched_tokens_high, 0, cfg));
    b.instances.push_back(make(Role::DpEngine, false, cfg.max_batched_tokens_low, 1, cfg));
    return b;
}

PolicyBinding bind_pp(const ClusterConfig& cfg) {
    PolicyBinding b;
    b.policy = Policy::PpChunked;
    b.instances.push_back(make(Role::PpStage, true, cfg.max_batched_tokens_high, 0, cfg));
    b.instances.push_back(make(Role::PpStage, false, cfg.max_batched_tokens_high, 1, cfg));
    return b;
}

PolicyBinding bind_disagg(const ClusterConfig& cfg, bool high_prefill) {
    PolicyBinding b;
    b.policy = high_prefill ? Policy::DisaggHighLow : Policy::DisaggLowHigh;
    b.ttft_includes_transfer = true;
    int decode_b = high_prefill ? cfg.max_batched_tokens_low : cfg.max_batched_tokens_high;
    b.instances.push_back(make(Role::PurePrefill, high_prefill, 0, 0, cfg));
    b.instances.push_back(make(Role::PureDecode, !high_prefill, decode_b, 1, cfg));
    return b;
}

PolicyBinding bind_policy(const ClusterConfig& cfg) {
    switch (cfg.policy) {
        case Policy::Cronus: return bind_cronus(cfg);
        case Policy::DpChunked: return bind_dp(cfg);
        case Policy::PpChunked: return bind_pp(cfg);
        case Policy::DisaggHighLow: return bind_disagg(cfg, true);
        case Policy::DisaggLowHigh: return bind_disagg(cfg, false);
    }
    throw std::logic_error("unknown policy");
}

}  // namespace cronus
