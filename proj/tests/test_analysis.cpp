#include <doctest.h>

#include <cmath>
#include <random>

#include "floquet/analysis.hpp"
#include "floquet/evolve.hpp"

using namespace floquet;

namespace {

std::vector<double> tabulate(const std::vector<double>& t, const std::function<double(double)>& f) {
    std::vector<double> y;
    for (double x : t) y.push_back(f(x));
    return y;
}

}  // namespace

TEST_CASE("spectrum of a pure tone sits in one bin") {
    const auto t = arange_grid(0.0, 16.0 - 0.02, 0.02);
    const auto y = tabulate(t, [](double x) { return std::cos(kTwoPi * 1.0 * x); });
    const Spectrum s = power_spectrum(t, y);
    double best = 0.0, total = 0.0;
    for (double p : s.power) {
        best = std::max(best, p);
        total += p;
    }
    CHECK(best / total >= 0.99);
    CHECK(s.omega_s == doctest::Approx(50.0));
    CHECK(fractional_harmonic_content(s) == doctest::Approx(1.0).scale(0).epsilon(1e-3));
}

TEST_CASE("a slow exponential keeps its power at low frequency") {
    const double tau = 2.0;
    const auto t = arange_grid(0.0, 40.0, 0.02);
    const auto y = tabulate(t, [tau](double x) { return std::exp(-x / tau); });
    const Spectrum s = power_spectrum(t, y, Detrend::offset, 0.0);
    auto below = [&](double f) {
        double low = 0.0;
        for (std::size_t k = 0; k < s.freqs.size(); ++k)
            if (s.freqs[k] <= f) low += s.power[k];
        return low / s.normalization;
    };
    // Lorentzian: fraction below f is (2/pi) atan(2 pi f tau)
    CHECK(below(2.0 / (kTwoPi * tau)) == doctest::Approx(2.0 / kPi * std::atan(2.0)).scale(0).epsilon(0.03));
    CHECK(below(1.0 / tau) >= 0.9);
    for (std::size_t k = 2; k < s.power.size() / 4; ++k) CHECK(s.power[k] <= s.power[k - 1]);
    CHECK(fractional_harmonic_content(s, 2.0) <= 0.1);
}

TEST_CASE("F is bounded and rejects bad input") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    const auto t = arange_grid(0.0, 4.0, 0.02);
    const auto y = tabulate(t, [&](double) { return g(rng); });
    const double f = adiabaticity_metric(t, y);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(f > 0.5);
    const std::vector<double> flat(t.size(), 0.3);
    CHECK_THROWS(fractional_harmonic_content(power_spectrum(t, flat)));
    CHECK_THROWS(fractional_harmonic_content(power_spectrum(t, y), 30.0));
    std::vector<double> bad = t;
    bad[5] += 0.005;
    CHECK_THROWS_AS(power_spectrum(bad, y), std::invalid_argument);
}

TEST_CASE("exponential fit") {
    const auto t = arange_grid(0.0, 50.0, 0.5);
    const auto y = tabulate(t, [](double x) { return 0.9 * std::exp(-x / 11.5) + 0.05; });
    const ExpFit f = fit_exponential(t, y);
    CHECK(f.tau == doctest::Approx(11.5).scale(0).epsilon(1e-6));
    CHECK(f.offset == doctest::Approx(0.05).scale(0).epsilon(1e-6));

    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 0.01);
    auto noisy = y;
    for (double& v : noisy) v += g(rng);
    CHECK(fit_exponential(t, noisy).tau == doctest::Approx(11.5).scale(0).epsilon(0.05));

    const std::vector<double> flat(t.size(), 0.4);
    const ExpFit c = fit_exponential(t, flat);
    CHECK_FALSE(c.identifiable);
    CHECK(c.offset == doctest::Approx(0.4));
    CHECK(std::isnan(c.tau));
    CHECK_THROWS(fit_exponential({0, 1, 2}, {1, 0.5, 0.2}));
}

TEST_CASE("Gaussian envelope fit") {
    const auto t = arange_grid(0.0, 2.0, 0.01);
    const auto y = tabulate(t, [](double x) {
        return 0.5 + 0.45 * std::exp(-std::pow(x / 0.57, 2)) * std::cos(kTwoPi * 4.0 * x);
    });
    const GaussFit f = fit_gaussian_envelope(t, y);
    CHECK(f.tau_g == doctest::Approx(0.57).scale(0).epsilon(1e-4));
    CHECK(f.frequency == doctest::Approx(4.0).scale(0).epsilon(1e-4));
    CHECK_FALSE(f.poor_fit);

    const auto e = tabulate(t, [](double x) { return 0.5 + 0.45 * std::exp(-x / 0.3) * std::cos(kTwoPi * 4.0 * x); });
    CHECK(fit_gaussian_envelope(t, e).poor_fit);

    const auto mono = tabulate(t, [](double x) { return std::exp(-x); });
    CHECK_THROWS_AS(fit_gaussian_envelope(t, mono), FitError);
}

TEST_CASE("Chern number of a degree-one map and its offset") {
    // two-band lattice model with a single band inversion for 0 < |mass| < 2
    auto wrap = [](double mass) {
        return [mass](double a, double b) {
            return Eigen::Vector3d(std::sin(a), std::sin(b), mass + std::cos(a) + std::cos(b));
        };
    };
    CHECK(std::abs(chern_number(make_torus(24, 24, wrap(1.0)))) == 1);
    CHECK(chern_number(make_torus(24, 24, wrap(1.0))) == -chern_number(make_torus(24, 24, wrap(-1.0))));
    CHECK(chern_number(make_torus(24, 24, wrap(3.0))) == 0);
}

TEST_CASE("pump torus Chern number follows the window") {
    const double b0 = 20, m = 0.3;
    CHECK(std::abs(chern_number(pump_torus(b0, m, 20.0, 24, 24))) == 1);
    CHECK(chern_number(pump_torus(b0, m, 5.0, 24, 24)) == 0);
    CHECK(chern_number(pump_torus(b0, m, 40.0, 24, 24)) == 0);
    CHECK(chern_number(pump_torus(b0, m, 20.0, 24, 24)) == chern_number(pump_torus(b0, m, 20.0, 48, 48)));
    CHECK_THROWS_AS(chern_analysis(pump_torus(b0, m, b0 * (1 - m), 24, 24)), PhysicsError);
}

TEST_CASE("topological window examples") {
    FieldParams fp;
    fp.b0 = 20;
    fp.m = 0.3;
    fp.g = 13;
    CHECK(topological_window(fp, 2.5).inside);
    CHECK_FALSE(topological_window(fp, 0.5).inside);
    CHECK_FALSE(topological_window(fp, 6.0).inside);
    CHECK(topological_window(fp, 0.8, CouplingConvention::coherent).inside);
    CHECK_FALSE(topological_window(fp, 0.8, CouplingConvention::amplitude).inside);
    CHECK_THROWS(topological_window(fp, -1.0));
}

TEST_CASE("pump rate estimator") {
    const auto t = arange_grid(0.0, 10.0, 0.05);
    const auto line = tabulate(t, [](double x) { return 2.0 + 0.75 * x; });
    const RateEstimate r = pump_rate_estimate(t, line, {2.0, 9.0}, 1.0);
    CHECK(r.slope == doctest::Approx(0.75).scale(0).epsilon(1e-12));
    CHECK(r.stderr_slope < 1e-9);
    const auto stairs = tabulate(t, [](double x) { return std::floor(x) + 0.5 * std::sin(kTwoPi * x); });
    CHECK(pump_rate_estimate(t, stairs, {0.0, 10.0}, 1.0).slope == doctest::Approx(1.0).scale(0).epsilon(0.1));
    CHECK_THROWS(pump_rate_estimate(t, line, {2.0, 4.0}, 1.0));
}

TEST_CASE("cross-correlation lag and local frequency") {
    const auto t = arange_grid(0.0, 4.0, 0.02);
    const auto x = tabulate(t, [](double v) { return std::sin(kTwoPi * v); });
    const auto z = tabulate(t, [](double v) { return std::sin(kTwoPi * (v - 0.1)); });
    CHECK(cross_correlation_lag(x, z, 40) == 5);
    CHECK(local_frequency(t, x, 0.5, 3.5) == doctest::Approx(1.0).scale(0).epsilon(0.01));
}
