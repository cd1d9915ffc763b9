#pragma once

#include <string>
#include <vector>

#include "cronus/model.hpp"

namespace cronus {

enum class Role { PPI, CPI, PurePrefill, PureDecode, PpStage, DpEngine };

const char* role_name(Role r);

struct InstanceSpec {
    Role role;
    bool on_high_gpu = true;
    int max_batched_tokens = 0;  // 0 for serial prefill instances
    int index = 0;               // stage / engine index
    std::string name;
};

struct PolicyBinding {
    Policy policy;
    std::vector<InstanceSpec> instances;
    bool ttft_includes_transfer = false;  // disaggregated policies only
};

PolicyBinding bind_cronus(const ClusterConfig& cfg);
PolicyBinding bind_dp(const ClusterConfig& cfg);
PolicyBinding bind_pp(const ClusterConfig& cfg);
PolicyBinding bind_disagg(const ClusterConfig& cfg, bool high_prefill);

PolicyBinding bind_policy(const ClusterConfig& cfg);

}  // namespace cronus
