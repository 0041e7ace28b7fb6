#include <bit>
#include <cstring>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "floquet/evolve.hpp"

namespace floquet {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SimResult average(std::vector<SimResult>& runs) {
    SimResult out;
    out.times = runs.front().times;
    out.names = runs.front().names;
    out.series.assign(out.names.size(), std::vector<double>(out.times.size(), 0.0));
    for (const auto& r : runs)
        for (std::size_t s = 0; s < out.series.size(); ++s)
            for (std::size_t i = 0; i < out.times.size(); ++i) out.series[s][i] += r.series[s][i];
    const double inv = 1.0 / static_cast<double>(runs.size());
    for (auto& s : out.series)
        for (double& v : s) v *= inv;
    out.meta = runs.front().meta;
    out.meta["quasistatic_samples"] = runs.size();
    return out;
}

void check_shapes(const std::vector<SimResult>& runs) {
    for (const auto& r : runs)
        if (r.times.size() != runs.front().times.size() || r.names != runs.front().names)
            throw std::runtime_error("quasi-static runs returned mismatched results");
}

}  // namespace

std::vector<double> quasistatic_offsets(double sigma, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if (sigma < 0.0) throw std::invalid_argument("sigma must be nonnegative");
    if (sigma == 0.0) return {0.0};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    boost::math::normal_distribution<double> normal(0.0, sigma);
    std::vector<double> out(n_samples);
    for (int k = 0; k < n_samples; ++k) out[k] = boost::math::quantile(normal, (k + u(rng)) / n_samples);
    return out;
}

SimResult quasistatic_average(const DetunedRun& run, double sigma, int n_samples, std::uint64_t seed) {
    const auto offsets = quasistatic_offsets(sigma, n_samples, seed);
    std::vector<SimResult> runs(offsets.size());
    std::vector<std::string> errors(offsets.size());
    const long n = static_cast<long>(offsets.size());
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < n; ++k) {
        try {
            runs[k] = run(offsets[k]);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error("quasi-static sample failed: " + e);
    check_shapes(runs);
    return average(runs);
}

SimResult quasistatic_average_serial(const DetunedRun& run, double sigma, int n_samples, std::uint64_t seed) {
    const auto offsets = quasistatic_offsets(sigma, n_samples, seed);
    std::vector<SimResult> runs;
    for (double d : offsets) runs.push_back(run(d));
    check_shapes(runs);
    return average(runs);
}

std::uint64_t point_seed(const ParamPoint& point, std::uint64_t seed) {
    std::uint64_t h = splitmix(seed);
    for (const auto& [key, value] : point) {
        for (char ch : key) h = splitmix(h ^ static_cast<unsigned char>(ch));
        h = splitmix(h ^ std::bit_cast<std::uint64_t>(value));
    }
    return h;
}

std::vector<ParamPoint> grid_product(const std::vector<std::pair<std::string, std::vector<double>>>& axes) {
    std::vector<ParamPoint> grid{ParamPoint{}};
    for (const auto& [name, values] : axes) {
        std::vector<ParamPoint> next;
        for (const auto& p : grid)
            for (double v : values) {
                ParamPoint q = p;
                q[name] = v;
                next.push_back(std::move(q));
            }
        grid = std::move(next);
    }
    return grid;
}

std::vector<SweepOutcome> sweep(const std::vector<ParamPoint>& grid, const SweepJob& job, std::uint64_t seed) {
    std::vector<SweepOutcome> out(grid.size());
    const long n = static_cast<long>(grid.size());
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < n; ++k) {
        out[k].point = grid[k];
        try {
            out[k].result = job(grid[k], point_seed(grid[k], seed));
        } catch (const std::exception& e) {
            out[k].error = e.what();
        }
    }
    return out;
}

std::vector<SweepOutcome> sweep_serial(const std::vector<ParamPoint>& grid, const SweepJob& job, std::uint64_t seed) {
    std::vector<SweepOutcome> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        out[k].point = grid[k];
        try {
            out[k].result = job(grid[k], point_seed(grid[k], seed));
        } catch (const std::exception& e) {
            out[k].error = e.what();
        }
    }
    return out;
}

}  // namespace floquet
