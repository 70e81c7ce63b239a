#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "glissade/csv.hpp"
#include "glissade/error.hpp"
#include "glissade/signal_io.hpp"

using namespace glissade;
using io::EogRecord;
using io::HeaderMode;
using io::IngestConfig;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected glissade::Error");
    return Errc::Io;
}

EogRecord random_record(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 7.0);
    EogRecord r;
    r.sample_period_s = 0.005;
    for (std::size_t i = 0; i < n; ++i) {
        r.time.push_back(0.005 * static_cast<double>(i));
        r.horizontal.push_back(g(rng));
        r.stimulus.push_back(i % 50 < 25 ? 0.0 : 20.0);
    }
    r.stimulus_amplitude_deg = 20.0;
    return r;
}

}  // namespace

TEST_CASE("parse_record infers the sample period from the timestamps") {
    auto r = io::parse_record(std::string_view("0,0.0,0.0\n5,0.1,0.0\n10,0.2,0.0"));
    CHECK(r.size() == 3);
    CHECK(r.sample_period_s == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(r.time[2] == doctest::Approx(0.010));
    CHECK(r.horizontal[1] == doctest::Approx(0.1));
}

TEST_CASE("parse_record uses the median gap") {
    auto r = io::parse_record(std::string_view("0,0,0\n5,0,0\n10,0,0\n20,0,0\n25,0,0"));
    CHECK(r.sample_period_s == doctest::Approx(0.005));
}

TEST_CASE("parse_record errors") {
    CHECK(code_of([] { io::parse_record(std::string_view("")); }) == Errc::EmptyInput);
    CHECK(code_of([] { io::parse_record(std::string_view("time_ms,horizontal_deg,stimulus_deg\n")); }) ==
          Errc::EmptyInput);
    CHECK(code_of([] { io::parse_record(std::string_view("0,0,0\n5,0,0\n5,0,0")); }) == Errc::NonMonotonicTime);
    CHECK(code_of([] { io::parse_record(std::string_view("0,0,0\n10,0,0\n5,0,0")); }) == Errc::NonMonotonicTime);

    try {
        io::parse_record(std::string_view("0,0,0\n5,abc,0\n"));
        FAIL("expected MalformedRow");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MalformedRow);
        REQUIRE(e.row().has_value());
        CHECK(*e.row() == 1);
    }
    CHECK(code_of([] { io::parse_record(std::string_view("0,0\n")); }) == Errc::MalformedRow);
    CHECK(code_of([] { io::parse_record(std::string_view("0,0,0,0\n")); }) == Errc::MalformedRow);
}

TEST_CASE("header handling") {
    const std::string with_header = "time_ms,horizontal_deg,stimulus_deg\n0,1,2\n5,3,4\n";
    CHECK(io::parse_record(std::string_view(with_header)).size() == 2);

    IngestConfig present;
    present.header = HeaderMode::Present;
    CHECK(io::parse_record(std::string_view("0,1,2\n5,3,4\n10,5,6\n"), present).size() == 2);

    IngestConfig absent;
    absent.header = HeaderMode::Absent;
    CHECK(code_of([&] { io::parse_record(std::string_view(with_header), absent); }) == Errc::MalformedRow);
}

TEST_CASE("parser never drops rows") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng() % 200;
        std::string text;
        if (trial % 2) text += "time_ms,horizontal_deg,stimulus_deg\r\n";
        for (std::size_t i = 0; i < n; ++i) text += std::to_string(i * 5) + "," + std::to_string(i) + ",0\n";
        CHECK(io::parse_record(std::string_view(text)).size() == n);
    }
}

TEST_CASE("stimulus amplitude") {
    auto r = io::parse_record(std::string_view("0,0,-5\n5,0,5\n10,0,15"));
    CHECK(r.stimulus_amplitude_deg == doctest::Approx(20.0));
    IngestConfig cfg;
    cfg.stimulus_amplitude_deg = 7.5;
    CHECK(io::parse_record(std::string_view("0,0,-5\n5,0,5"), cfg).stimulus_amplitude_deg == 7.5);
}

TEST_CASE("single-sample record") {
    auto r = io::parse_record(std::string_view("0,1.5,0"));
    CHECK(r.size() == 1);
    CHECK(r.sample_period_s == 0.005);
    auto text = io::serialize_record(r, {.header = false});
    CHECK(text == "0,1.5,0\n");
}

TEST_CASE("serialize writes millisecond timestamps") {
    auto r = io::parse_record(std::string_view("0,0.0,0.0\n5,0.1,0.0\n10,0.2,0.0"));
    auto lines = [&] {
        std::istringstream in(io::serialize_record(r));
        return csv::read_lines(in);
    }();
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == io::kRecordHeader);
    CHECK(csv::split(lines[1])[0] == "0");
    CHECK(csv::split(lines[2])[0] == "5");
    CHECK(csv::split(lines[3])[0] == "10");
}

TEST_CASE("serialize then parse round-trips") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto r = random_record(seed, 10 + seed * 37);
        auto back = io::parse_record(std::string_view(io::serialize_record(r)));
        REQUIRE(back.size() == r.size());
        CHECK(back.sample_period_s == doctest::Approx(r.sample_period_s).epsilon(1e-9));
        for (std::size_t i = 0; i < r.size(); ++i) {
            CHECK(std::abs(back.time[i] - r.time[i]) < 1e-9);
            CHECK(std::abs(back.horizontal[i] - r.horizontal[i]) < 1e-9);
            CHECK(std::abs(back.stimulus[i] - r.stimulus[i]) < 1e-9);
        }
    }
}

TEST_CASE("record files and studies") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "glissade_io_test" / "subj01";
    fs::remove_all(dir.parent_path());
    fs::create_directories(dir);
    {
        std::ofstream(dir / "b.csv") << "0,0,0\n5,1,0\n";
        std::ofstream(dir / "a.csv") << "time_ms,horizontal_deg,stimulus_deg\n0,0,0\n5,1,0\n10,2,0\n";
        std::ofstream(dir / "notes.txt") << "ignored";
    }
    auto rec = io::read_record_file(dir / "a.csv");
    CHECK(rec.subject_id == "subj01");
    CHECK(rec.test_id == "a");

    auto study = io::load_study(dir);
    REQUIRE(study.records.size() == 2);
    CHECK(study.records[0].test_id == "a");
    CHECK(study.records[1].test_id == "b");

    try {
        io::read_record_file(dir / "missing.csv");
        FAIL("expected Io");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::Io);
        CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
    }
    fs::remove_all(dir.parent_path());
}
