#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "floquet/config.hpp"
#include "floquet/io.hpp"
#include "floquet/runner.hpp"

using namespace floquet;
namespace fs = std::filesystem;

namespace {

const std::string kSource = FLOQUET_SOURCE_DIR;

std::string example(const std::string& name) { return kSource + "/configs/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("floquet_test_" + name);
    fs::remove_all(p);
    return p;
}

bool mentions(const std::vector<std::string>& lines, const std::string& needle) {
    for (const auto& l : lines)
        if (l.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("every shipped config validates") {
    for (const auto& entry : fs::directory_iterator(kSource + "/configs")) {
        CAPTURE(entry.path().string());
        const ValidationReport r = validate_sections(read_sections(entry.path().string()));
        CHECK(r.ok());
    }
}

TEST_CASE("validation errors name the field") {
    auto s = parse_ini("[RunConfig]\nexperiment = coherence\nseed = 1\n[NoiseModel]\nt1 = -1\n");
    ValidationReport r = validate_sections(s);
    CHECK_FALSE(r.ok());
    CHECK(mentions(r.errors, "NoiseModel.t1"));

    r = validate_sections(parse_ini("[RunConfig]\nexperiment = coherence\n"));
    CHECK(mentions(r.errors, "RunConfig.seed"));
    r = validate_sections(parse_ini("[RunConfig]\nexperiment = coherence\nseed = 1\n[Nonsense]\nx = 1\n"));
    CHECK(mentions(r.errors, "Nonsense"));
    r = validate_sections(parse_ini("[RunConfig]\nexperiment = coherence\nseed = 1\n[NoiseModel]\nt2 = 1\n"));
    CHECK(mentions(r.errors, "NoiseModel.t2"));
    r = validate_sections(parse_ini("[RunConfig]\nexperiment = teleport\nseed = 1\n"));
    CHECK(mentions(r.errors, "RunConfig.experiment"));
    r = validate_sections(parse_ini("[RunConfig]\nexperiment = coherence\nseed = 1\n[NoiseModel]\nt1 = abc\n"));
    CHECK(mentions(r.errors, "NoiseModel.t1"));
}

TEST_CASE("regime warnings") {
    auto s = read_sections(example("following_defaults.cfg"));
    s["FieldParams"]["b0"] = "300";
    ValidationReport r = validate_sections(s);
    CHECK(r.ok());
    CHECK(mentions(r.warnings, "B0"));

    r = validate_sections(read_sections(example("pump.cfg")));
    CHECK(r.ok());
    CHECK(r.warnings.empty());

    s = read_sections(example("pump.cfg"));
    s["Protocol"]["cavity_dim"] = "10";
    s["Protocol"]["n0"] = "8";
    r = validate_sections(s);
    CHECK(r.ok());
    CHECK(mentions(r.warnings, "truncation"));
}

TEST_CASE("axis parsing") {
    CHECK(parse_axis("1, 2,3") == std::vector<double>{1, 2, 3});
    CHECK(parse_axis("0:1:0.25").size() == 5);
    CHECK_THROWS(parse_axis("0:1:0"));
    CHECK_THROWS(parse_axis(""));
}

TEST_CASE("sidecar round trip and byte-identical reruns") {
    const RunConfig c = load_config(example("servo.cfg"));
    const fs::path a = scratch("servo_a"), b = scratch("servo_b");
    std::ostringstream log;
    const RunSummary sa = run_experiment(c, a.string(), log);
    run_experiment(c, b.string(), log);
    REQUIRE_FALSE(sa.files.empty());
    for (const auto& f : sa.files) {
        const fs::path rel = fs::path(f).filename();
        CAPTURE(rel.string());
        CHECK(slurp(a / rel) == slurp(b / rel));
    }
    const ValidationReport back = validate_sections(read_sections((a / "servo.json").string()));
    CHECK(back.ok());
    CHECK(back.resolved == resolved_config(c));
    const RunConfig again = load_config((a / "servo.json").string());
    CHECK(config_fingerprint(again) == config_fingerprint(c));

    const CsvTable t = read_csv((a / "servo.csv").string());
    CHECK_FALSE(t.header.empty());
    CHECK_FALSE(t.rows.empty());
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("filter demo writes its outputs") {
    const RunConfig c = load_config(example("filter_demo.cfg"));
    const fs::path d = scratch("filter");
    std::ostringstream log;
    const RunSummary s = run_experiment(c, d.string(), log);
    CHECK(s.failures.empty());
    CHECK(fs::exists(d / "filter_response.csv"));
    CHECK(fs::exists(d / "filter_response.json"));
    fs::remove_all(d);
}

TEST_CASE("reduced F map has the configured shape") {
    auto s = read_sections(example("fmap.cfg"));
    s["Sweep"]["b0"] = "3, 40";
    s["Sweep"]["omega_mod"] = "0.5, 1";
    s["Protocol"]["duration"] = "2";
    RunConfig c;
    const ValidationReport r = validate_sections(s, &c);
    REQUIRE(r.ok());
    const fs::path d = scratch("fmap");
    std::ostringstream log;
    const RunSummary sum = run_experiment(c, d.string(), log);
    CHECK_FALSE(sum.total_failure);
    const CsvTable t = read_csv((d / "fmap.csv").string());
    CHECK(t.rows.size() == 2);
    CHECK(t.header.size() == 3);
    for (const auto& row : t.rows)
        for (std::size_t k = 1; k < row.size(); ++k) {
            CHECK(row[k] >= 0.0);
            CHECK(row[k] <= 1.0);
        }
    fs::remove_all(d);
}

TEST_CASE("parameter echo carries the device values") {
    const RunConfig c = load_config(example("following_defaults.cfg"));
    const std::string p = describe_params(c);
    CHECK(p.find("13") != std::string::npos);
    CHECK(p.find("84") != std::string::npos);
    CHECK(p.find("240") != std::string::npos);
}
