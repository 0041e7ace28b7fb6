#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "floquet/experiments.hpp"

namespace floquet {

using Sections = std::map<std::string, std::map<std::string, std::string>>;

inline const std::vector<std::string> kExperiments{"chevron",   "modulated_chevron", "lz_delay", "following_bare",
                                                   "following_adiabatic", "coherence", "servo", "pump",
                                                   "chern_map", "filter_demo"};

struct RunConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string out = "out";
    ExperimentConfig exp;
    ServoConfig servo;
    std::map<std::string, std::string> protocol;
    std::map<std::string, std::string> sweep;

    double param(const std::string& key) const;
    std::string text(const std::string& key) const;
    std::vector<double> axis(const std::string& key) const;
};

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    nlohmann::json resolved = nlohmann::json::object();

    bool ok() const { return errors.empty(); }
    nlohmann::json to_json() const;
};

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(ValidationReport r);
    const ValidationReport& report() const { return report_; }

  private:
    ValidationReport report_;
};

// INI-style text (.cfg/.ini) or a JSON sidecar carrying a "config" object
Sections read_sections(const std::string& path);
Sections parse_ini(const std::string& text);

ValidationReport validate_sections(const Sections& s, RunConfig* out = nullptr);
RunConfig load_config(const std::string& path);
nlohmann::json resolved_config(const RunConfig& c);

// "a:b:step" or a comma list
std::vector<double> parse_axis(const std::string& text);

}  // namespace floquet
