#include "floquet/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace floquet {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    return f;
}

void write_meta(std::ostream& os, const MetaLines& meta) {
    for (const auto& [k, v] : meta) os << "# " << k << ": " << v << "\n";
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

// blue to yellow ramp
std::string color(double u) {
    if (!std::isfinite(u)) return "#cccccc";
    u = std::clamp(u, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(40 + 215 * u));
    const int g = static_cast<int>(std::lround(30 + 200 * u));
    const int b = static_cast<int>(std::lround(120 - 90 * u));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;  // drop negative zero
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_series_csv(const std::string& path, const SimResult& r, const MetaLines& meta) {
    auto f = open_out(path);
    write_meta(f, meta);
    f << "t";
    for (const auto& n : r.names) f << "," << n;
    f << "\n";
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        f << format_number(r.times[i]);
        for (const auto& s : r.series) f << "," << format_number(s[i]);
        f << "\n";
    }
}

void write_grid_csv(const std::string& path, const Grid2D& g, const MetaLines& meta) {
    auto f = open_out(path);
    write_meta(f, meta);
    f << "# value: " << g.value_name << "\n";
    f << g.row_name << "\\" << g.col_name;
    for (double c : g.cols) f << "," << format_number(c);
    f << "\n";
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
        f << format_number(g.rows[i]);
        for (std::size_t j = 0; j < g.cols.size(); ++j) f << "," << format_number(g.values(i, j));
        f << "\n";
    }
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows, const MetaLines& meta) {
    auto f = open_out(path);
    write_meta(f, meta);
    for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
    f << "\n";
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw std::invalid_argument("table row width does not match the header");
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << format_number(row[i]);
        f << "\n";
    }
}

void write_json(const std::string& path, const nlohmann::json& j) {
    auto f = open_out(path);
    f << j.dump(2) << "\n";
}

CsvTable read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    CsvTable t;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(line);
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (t.header.empty()) {
            t.header = cells;
            continue;
        }
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_heatmap_svg(const std::string& path, const Grid2D& g, const std::string& title) {
    const int cell = 36, left = 80, top = 40;
    const int w = left + cell * static_cast<int>(g.cols.size()) + 20;
    const int h = top + cell * static_cast<int>(g.rows.size()) + 50;
    double lo = INFINITY, hi = -INFINITY;
    for (Eigen::Index i = 0; i < g.values.size(); ++i) {
        const double v = g.values.data()[i];
        if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    }
    if (!(hi > lo)) hi = lo + 1.0;
    auto f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    f << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << escape_xml(title) << "</text>\n";
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
        const int y = top + cell * static_cast<int>(i);
        f << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
          << format_number(g.rows[i]) << "</text>\n";
        for (std::size_t j = 0; j < g.cols.size(); ++j) {
            const double v = g.values(i, j);
            f << "<rect x=\"" << left + cell * static_cast<int>(j) << "\" y=\"" << y << "\" width=\"" << cell
              << "\" height=\"" << cell << "\" fill=\"" << color((v - lo) / (hi - lo)) << "\"><title>"
              << format_number(v) << "</title></rect>\n";
        }
    }
    const int yb = top + cell * static_cast<int>(g.rows.size());
    for (std::size_t j = 0; j < g.cols.size(); ++j)
        f << "<text x=\"" << left + cell * static_cast<int>(j) + cell / 2 << "\" y=\"" << yb + 14
          << "\" text-anchor=\"middle\">" << format_number(g.cols[j]) << "</text>\n";
    f << "<text x=\"" << left << "\" y=\"" << yb + 34 << "\">" << escape_xml(g.row_name) << " (rows) vs "
      << escape_xml(g.col_name) << " (columns), " << escape_xml(g.value_name) << " in [" << format_number(lo) << ", "
      << format_number(hi) << "]</text>\n";
    f << "</svg>\n";
}

void write_line_svg(const std::string& path, const std::vector<double>& x,
                    const std::vector<std::pair<std::string, std::vector<double>>>& ys, const std::string& title) {
    if (x.size() < 2) throw std::invalid_argument("line plot needs at least two points");
    const double w = 640, h = 360, left = 60, right = 20, top = 40, bottom = 40;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& [name, y] : ys)
        for (double v : y)
            if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    if (!(hi > lo)) hi = lo + 1.0;
    const double x0 = x.front(), x1 = x.back();
    auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * (w - left - right); };
    auto py = [&](double v) { return top + (hi - v) / (hi - lo) * (h - top - bottom); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    auto f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    f << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << escape_xml(title) << "</text>\n";
    f << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w - left - right << "\" height=\""
      << h - top - bottom << "\" fill=\"none\" stroke=\"#444\"/>\n";
    f << "<text x=\"" << left - 4 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << format_number(hi) << "</text>\n";
    f << "<text x=\"" << left - 4 << "\" y=\"" << h - bottom << "\" text-anchor=\"end\">" << format_number(lo) << "</text>\n";
    f << "<text x=\"" << left << "\" y=\"" << h - bottom + 14 << "\">" << format_number(x0) << "</text>\n";
    f << "<text x=\"" << w - right << "\" y=\"" << h - bottom + 14 << "\" text-anchor=\"end\">" << format_number(x1)
      << "</text>\n";
    for (std::size_t s = 0; s < ys.size(); ++s) {
        const auto& y = ys[s].second;
        f << "<polyline fill=\"none\" stroke=\"" << palette[s % 6] << "\" points=\"";
        for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
            if (!std::isfinite(y[i])) continue;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x[i]), py(y[i]));
            f << buf;
        }
        f << "\"/>\n";
        f << "<text x=\"" << w - right - 4 << "\" y=\"" << top + 14 + 12 * s << "\" text-anchor=\"end\" fill=\""
          << palette[s % 6] << "\">" << escape_xml(ys[s].first) << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace floquet
