#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "floquet/evolve.hpp"
#include "floquet/experiments.hpp"

namespace floquet {

using MetaLines = std::vector<std::pair<std::string, std::string>>;

std::string format_number(double v);

// comma separated, '#' metadata block, one header row
void write_series_csv(const std::string& path, const SimResult& r, const MetaLines& meta);
void write_grid_csv(const std::string& path, const Grid2D& g, const MetaLines& meta);
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows, const MetaLines& meta);
void write_json(const std::string& path, const nlohmann::json& j);

struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path);

void write_heatmap_svg(const std::string& path, const Grid2D& g, const std::string& title);
void write_line_svg(const std::string& path, const std::vector<double>& x,
                    const std::vector<std::pair<std::string, std::vector<double>>>& ys, const std::string& title);

}  // namespace floquet
