#include "cronus/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace cronus {

namespace {

void check_sorted(Trace& t) {
    std::stable_sort(t.requests.begin(), t.requests.end(),
                     [](const Request& a, const Request& b) {
                         return a.arrival_ms < b.arrival_ms;
                     });
}

}  // namespace

Trace load_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open trace file: " + path);
    Trace t;
    t.name = path;
    std::string line;
    int lineno = 0;
    std::unordered_set<int> seen;
    auto bad = [&](const std::string& msg) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(f, line)) {
        ++lineno;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream is(line);
        std::string first;
        if (!(is >> first)) continue;  // blank line
        if (first[0] == '#') continue;
        Request r;
        try {
            r.id = std::stoi(first);
        } catch (...) {
            bad("malformed id '" + first + "'");
        }
        if (!(is >> r.arrival_ms >> r.input_len >> r.output_len))
            bad("expected: id arrival_ms input_len output_len");
        if (r.arrival_ms < 0) bad("arrival_ms must be >= 0");
        if (r.input_len < 1) bad("input_len must be >= 1");
        if (r.output_len < 1) bad("output_len must be >= 1");
        if (!seen.insert(r.id).second) bad("duplicate request id " + std::to_string(r.id));
        t.requests.push_back(r);
    }
    if (t.requests.empty()) throw std::runtime_error(path + ": empty trace");
    check_sorted(t);
    return t;
}

void save_trace(const Trace& t, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write trace file: " + path);
    f << "# id arrival_ms input_len output_len\n";
    char buf[128];
    for (const auto& r : t.requests) {
        std::snprintf(buf, sizeof(buf), "%d %.6f %d %d\n", r.id, r.arrival_ms,
                      r.input_len, r.output_len);
        f << buf;
    }
}

Trace synth_trace(int n, double mean_in, double mean_out, ArrivalMode mode,
                  double interval_ms, long long seed) {
    if (n < 1) throw std::invalid_argument("synth_trace: n must be >= 1");
    if (mean_in < 1 || mean_out < 1)
        throw std::invalid_argument("synth_trace: means must be >= 1");
    std::mt19937_64 rng(static_cast<uint64_t>(seed));
    // sigma fixed at 1.0: heavy-tailed lengths; mu set so E[X] = mean.
    const double sigma = 1.0;
    std::normal_distribution<double> norm(0.0, 1.0);
    auto draw = [&](double mean) {
        double mu = std::log(mean) - sigma * sigma / 2.0;
        double v = std::exp(mu + sigma * norm(rng));
        v = std::min(v, 16.0 * mean);
        long long len = std::llround(v);
        return static_cast<int>(std::max(1ll, len));
    };
    Trace t;
    std::ostringstream name;
    name << "synth(n=" << n << ",in=" << mean_in << ",out=" << mean_out
         << ",seed=" << seed << ")";
    t.name = name.str();
    for (int i = 0; i < n; ++i) {
        Request r;
        r.id = i;
        r.arrival_ms = mode == ArrivalMode::AllAtZero ? 0.0 : i * interval_ms;
        r.input_len = draw(mean_in);
        r.output_len = draw(mean_out);
        t.requests.push_back(r);
    }
    return t;
}

uint64_t trace_hash(const Trace& t) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    for (const auto& r : t.requests) {
        mix(static_cast<uint64_t>(r.id));
        uint64_t a;
        static_assert(sizeof(a) == sizeof(r.arrival_ms));
        std::memcpy(&a, &r.arrival_ms, sizeof(a));
        mix(a);
        mix(static_cast<uint64_t>(r.input_len));
        mix(static_cast<uint64_t>(r.output_len));
    }
    return h;
}

}  // namespace cronus
