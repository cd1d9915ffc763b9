#pragma once

#include <string>
#include <vector>

namespace cronus {

// One inference job from a trace.
struct Request {
    int id = 0;
    double arrival_ms = 0.0;
    int input_len = 1;
    int output_len = 1;
};

// Per-request outcome collected by the simulator.
struct RequestRecord {
    int id = 0;
    double ttft_ms = 0.0;
    std::vector<double> tbt_samples_ms;  // one gap per decode token after the first
    double completion_ms = 0.0;          // absolute time of last token
    int partial_prefill_len = 0;         // cronus only
    int assigned_instance = -1;          // dp only
};

// Calibrated cost-model coefficients and memory budget for one GPU.
struct GpuProfile {
    std::string name;
    long long kv_blocks_capacity = 1;
    int kv_block_size = 16;
    double prefill_k = 0.0;    // ms per prompt token
    double prefill_b = 0.0;    // ms
    double chunked_k_ctxp = 0.0;  // ms per token of prefill context
    double chunked_k_ctxd = 0.0;  // ms per token of decode context
    double chunked_b = 0.0;       // ms
    int total_layers = 32;
    double bf16_tflops = 1.0;
};

struct LinkModel {
    double bandwidth = 1.0;          // tokens per ms
    double latency = 0.0;            // ms fixed overhead per transfer
    double kv_cost_per_token = 1.0;  // scale factor
};

// KV transfer cost for moving `tokens` worth of cache across the link.
double transfer_time(const LinkModel& link, long long tokens);

enum class Policy { Cronus, DpChunked, PpChunked, DisaggHighLow, DisaggLowHigh };

const char* policy_name(Policy p);
bool parse_policy(const std::string& s, Policy& out);

struct ClusterConfig {
    GpuProfile high_gpu;
    GpuProfile low_gpu;
    LinkModel link;
    Policy policy = Policy::Cronus;
    int max_batched_tokens_high = 512;
    int max_batched_tokens_low = 256;
    int dp_weight_high = 3;
    int dp_weight_low = 1;
    int dp_queue_cap_high = 3;
    int dp_queue_cap_low = 1;
    int pp_layers_high = 0;
    int pp_layers_low = 0;
    double pp_comm_ms = 0.0;  // per stage-boundary crossing
    int ppi_max_inflight = 2;
    long long seed = 0;
};

// Returns every invariant violation, each prefixed with the offending field path.
// Empty vector means the config is valid.
std::vector<std::string> validate_config(const ClusterConfig& cfg);

// Flat "key = value" text format, '#' comments. Round-trips exactly.
ClusterConfig parse_config(const std::string& text);
ClusterConfig load_config(const std::string& path);
std::string serialize_config(const ClusterConfig& cfg);
void save_config(const ClusterConfig& cfg, const std::string& path);

}  // namespace cronus
