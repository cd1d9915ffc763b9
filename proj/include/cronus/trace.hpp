#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cronus/model.hpp"

namespace cronus {

struct Trace {
    std::vector<Request> requests;  // sorted by arrival_ms, stable for ties
    std::string name;
};

enum class ArrivalMode { AllAtZero, FixedInterval };

// One request per line: id arrival_ms input_len output_len
// (whitespace or comma separated, '#' starts a comment line).
Trace load_trace(const std::string& path);
void save_trace(const Trace& t, const std::string& path);

// Lognormal lengths truncated to [1, 16*mean], deterministic for a given seed.
Trace synth_trace(int n, double mean_in, double mean_out, ArrivalMode mode,
                  double interval_ms, long long seed);

// FNV-1a over the canonical request tuples; used to tag reports.
uint64_t trace_hash(const Trace& t);

}  // namespace cronus
