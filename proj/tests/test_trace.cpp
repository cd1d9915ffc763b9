#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "cronus/trace.hpp"

using namespace cronus;

namespace {

std::string temp_path(const char* tag) {
    return std::string("trace_test_") + tag + ".tmp";
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream f(path);
    f << body;
}

}  // namespace

TEST_CASE("synth_trace is deterministic per seed") {
    Trace a = synth_trace(200, 1014, 247, ArrivalMode::AllAtZero, 0, 42);
    Trace b = synth_trace(200, 1014, 247, ArrivalMode::AllAtZero, 0, 42);
    Trace c = synth_trace(200, 1014, 247, ArrivalMode::AllAtZero, 0, 43);
    CHECK(trace_hash(a) == trace_hash(b));
    CHECK(trace_hash(a) != trace_hash(c));
    REQUIRE(a.requests.size() == 200);
    for (size_t i = 0; i < a.requests.size(); ++i) {
        CHECK(a.requests[i].input_len == b.requests[i].input_len);
        CHECK(a.requests[i].output_len == b.requests[i].output_len);
    }
}

TEST_CASE("synth_trace lengths stay in [1, 16*mean]") {
    Trace t = synth_trace(2000, 100, 30, ArrivalMode::AllAtZero, 0, 7);
    for (const auto& r : t.requests) {
        CHECK(r.input_len >= 1);
        CHECK(r.input_len <= 1600);
        CHECK(r.output_len >= 1);
        CHECK(r.output_len <= 480);
        CHECK(r.arrival_ms == 0.0);
    }
}

TEST_CASE("synth_trace fixed-interval arrivals are i*interval") {
    Trace t = synth_trace(10, 50, 20, ArrivalMode::FixedInterval, 25.0, 1);
    for (int i = 0; i < 10; ++i)
        CHECK(t.requests[i].arrival_ms == doctest::Approx(25.0 * i).epsilon(1e-12));
}

TEST_CASE("trace file round-trips") {
    Trace t;
    t.requests = {{0, 0.0, 100, 20}, {1, 5.0, 2000, 1}, {2, 5.0, 1, 300}};
    std::string path = temp_path("roundtrip");
    save_trace(t, path);
    Trace back = load_trace(path);
    REQUIRE(back.requests.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(back.requests[i].id == t.requests[i].id);
        CHECK(back.requests[i].arrival_ms == doctest::Approx(t.requests[i].arrival_ms));
        CHECK(back.requests[i].input_len == t.requests[i].input_len);
        CHECK(back.requests[i].output_len == t.requests[i].output_len);
    }
    std::remove(path.c_str());
}

TEST_CASE("load_trace accepts commas and comments, sorts by arrival") {
    std::string path = temp_path("format");
    write_file(path, "# header\n3, 10.0, 50, 5\n1 0.0 20 2\n\n2,10.0,30,3\n");
    Trace t = load_trace(path);
    REQUIRE(t.requests.size() == 3);
    CHECK(t.requests[0].id == 1);
    CHECK(t.requests[1].id == 3);  // stable order for the 10.0 tie
    CHECK(t.requests[2].id == 2);
    std::remove(path.c_str());
}

TEST_CASE("load_trace rejects malformed input") {
    std::string path = temp_path("bad");

    write_file(path, "0 0.0 0 5\n");
    CHECK_THROWS_WITH_AS(load_trace(path),
                         doctest::Contains("input_len must be >= 1"), std::runtime_error);

    write_file(path, "0 0.0 5 0\n");
    CHECK_THROWS_WITH_AS(load_trace(path),
                         doctest::Contains("output_len must be >= 1"), std::runtime_error);

    write_file(path, "0 -1.0 5 5\n");
    CHECK_THROWS(load_trace(path));

    write_file(path, "0 0.0 5 5\n0 1.0 5 5\n");
    CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("duplicate"),
                         std::runtime_error);

    write_file(path, "0 0.0 5\n");
    CHECK_THROWS(load_trace(path));

    write_file(path, "# only a comment\n");
    CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("empty"),
                         std::runtime_error);

    CHECK_THROWS_WITH_AS(load_trace("no_such_trace_file.txt"),
                         doctest::Contains("no_such_trace_file.txt"), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("trace_hash is sensitive to every field") {
    Trace t;
    t.requests = {{0, 0.0, 100, 20}};
    uint64_t h = trace_hash(t);
    Trace u = t;
    u.requests[0].input_len = 101;
    CHECK(trace_hash(u) != h);
    u = t;
    u.requests[0].arrival_ms = 0.5;
    CHECK(trace_hash(u) != h);
    u = t;
    u.requests[0].id = 1;
    CHECK(trace_hash(u) != h);
    u = t;
    u.requests[0].output_len = 21;
    CHECK(trace_hash(u) != h);
}
