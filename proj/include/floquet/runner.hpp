#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "floquet/config.hpp"

namespace floquet {

struct RunSummary {
    std::vector<std::string> files;
    std::vector<std::string> failures;
    bool total_failure = false;
};

RunSummary run_experiment(const RunConfig& c, const std::string& out_dir, std::ostream& log);

// human-readable echo of the resolved device and noise parameters
std::string describe_params(const RunConfig& c);

std::string config_fingerprint(const RunConfig& c);

}  // namespace floquet
