#pragma once

#include <random>

#include "cronus/model.hpp"

namespace testutil {

// Small deterministic two-GPU operating point used across the unit tests.
// The low GPU is roughly 3x slower than the high GPU.
inline cronus::ClusterConfig desk_config() {
    cronus::ClusterConfig cfg;
    cfg.high_gpu.name = "high";
    cfg.high_gpu.kv_blocks_capacity = 4096;
    cfg.high_gpu.kv_block_size = 16;
    cfg.high_gpu.prefill_k = 0.05;
    cfg.high_gpu.prefill_b = 5.0;
    cfg.high_gpu.chunked_k_ctxp = 0.002;
    cfg.high_gpu.chunked_k_ctxd = 0.00005;
    cfg.high_gpu.chunked_b = 25.0;
    cfg.high_gpu.total_layers = 32;
    cfg.high_gpu.bf16_tflops = 312.0;
    cfg.low_gpu.name = "low";
    cfg.low_gpu.kv_blocks_capacity = 1024;
    cfg.low_gpu.kv_block_size = 16;
    cfg.low_gpu.prefill_k = 0.15;
    cfg.low_gpu.prefill_b = 10.0;
    cfg.low_gpu.chunked_k_ctxp = 0.006;
    cfg.low_gpu.chunked_k_ctxd = 0.00015;
    cfg.low_gpu.chunked_b = 40.0;
    cfg.low_gpu.total_layers = 32;
    cfg.low_gpu.bf16_tflops = 125.0;
    cfg.link.bandwidth = 100.0;
    cfg.link.latency = 1.0;
    cfg.link.kv_cost_per_token = 1.0;
    cfg.pp_layers_high = 23;
    cfg.pp_layers_low = 9;
    cfg.pp_comm_ms = 5.0;
    return cfg;
}

// Uniform random GPU profile with well-conditioned positive coefficients.
inline cronus::GpuProfile random_profile(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    cronus::GpuProfile g;
    g.kv_blocks_capacity = 64 + static_cast<long long>(u(rng) * 8192);
    g.kv_block_size = 8 << (rng() % 3);  // 8, 16, 32
    g.prefill_k = 0.01 + 0.3 * u(rng);
    g.prefill_b = 20.0 * u(rng);
    g.chunked_k_ctxp = 0.0005 + 0.01 * u(rng);
    g.chunked_k_ctxd = 0.00001 + 0.0005 * u(rng);
    g.chunked_b = 1.0 + 60.0 * u(rng);
    return g;
}

}  // namespace testutil
