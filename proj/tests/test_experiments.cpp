#include <doctest.h>

#include <cmath>

#include "floquet/experiments.hpp"

using namespace floquet;

namespace {

std::vector<double> column(const Grid2D& g, std::size_t j) {
    std::vector<double> c(g.rows.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = g.values(i, j);
    return c;
}

}  // namespace

TEST_CASE("Rabi chevron columns") {
    ExperimentConfig cfg;
    const double omega = 10.0;
    const auto t = arange_grid(0.0, 1.0, 0.002);
    const Grid2D g = rabi_chevron(cfg, omega, {0.0, omega}, t);
    REQUIRE(g.values.rows() == static_cast<int>(t.size()));
    REQUIRE(g.values.cols() == 2);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        worst = std::max(worst, std::abs(g.values(i, 0) - std::pow(std::sin(kPi * omega * t[i]), 2)));
    CHECK(worst <= 1e-6);
    const auto detuned = column(g, 1);
    CHECK(*std::max_element(detuned.begin(), detuned.end()) == doctest::Approx(0.5).scale(0).epsilon(1e-3));
    CHECK(local_frequency(t, detuned, 0.0, 1.0) == doctest::Approx(std::sqrt(2.0) * omega).scale(0).epsilon(0.01));
}

TEST_CASE("modulated chevron follows the instantaneous drive") {
    ExperimentConfig cfg;
    const double omega0 = 80.0;
    const auto t = arange_grid(0.0, 0.5, 0.001);
    const Grid2D g = modulated_chevron(cfg, omega0, 1.0, t, {0.0});
    const auto c = column(g, 0);
    const double expected = omega0 * std::sin(kTwoPi * 0.1) / (kTwoPi * 0.1);
    CHECK(local_frequency(t, c, 0.0, 0.1) == doctest::Approx(expected).scale(0).epsilon(0.05));
    const std::size_t a = 248, b = 252;
    CHECK(std::abs(c[b] - c[a]) < 0.05);
}

TEST_CASE("LZ delay scan recovers a hidden delay") {
    ExperimentConfig cfg;
    const auto taus = arange_grid(0.0, 3.5, 0.01);
    const LzDelayResult r = lz_delay_scan(cfg, 20.0, 50.0, taus, 0.30);
    CHECK(std::abs(r.estimate - 0.30) <= 1e-3);
    CHECK_FALSE(r.flagged);
    CHECK(r.reference.p_e.front() <= 0.05);
    CHECK(r.reference.p_e[5] <= 0.05);
    CHECK(r.reference.p_e.back() <= 0.1);
    CHECK(r.reference.plateau >= 0.9);
}

TEST_CASE("bare-basis following tracks the field") {
    ExperimentConfig cfg;
    cfg.field.b0 = 40.0;
    cfg.field.omega_mod = 1.0;
    const SimResult r = adiabatic_following(cfg, 2.0);
    const auto& err = r["angle_error"];
    CHECK(*std::max_element(err.begin(), err.end()) <= 0.05);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        CHECK(r["sigma_z"][k] == doctest::Approx(r["bloch_z"][k]).scale(0).epsilon(1e-6));
        CHECK(std::abs(r["sigma_x"][k] - r["bloch_x"][k]) <= 0.05);
    }
    const LagEstimate lag = following_phase_lag(r, 1.0);
    CHECK(std::abs(lag.lag - lag.expected) <= lag.step + 1e-9);
}

TEST_CASE("adiabatic-basis following at weak drive loses the state") {
    ExperimentConfig cfg;
    cfg.noise = NoiseModel::measured();
    cfg.field.omega_mod = 1.0;
    cfg.field.b0 = 40.0;
    const double good = adiabatic_basis_following(cfg, 4.0).meta["F"].get<double>();
    cfg.field.b0 = 2.0;
    const double bad = adiabatic_basis_following(cfg, 4.0).meta["F"].get<double>();
    CHECK(good < 0.1);
    CHECK(bad > 0.5);
}

TEST_CASE("breakdown locator on a synthetic map") {
    Grid2D g{"b0", "omega_mod", "F", {1, 2, 4, 8, 16, 32, 64}, {1, 2}, Eigen::MatrixXd(7, 2)};
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 2; ++j) g.values(i, j) = g.rows[i] / g.cols[j] >= 3.0 ? 0.01 : 0.99;
    const Breakdown b = locate_breakdown(g);
    CHECK(b.plateau_good == doctest::Approx(0.01));
    CHECK(b.plateau_bad == doctest::Approx(0.99));
    CHECK(b.ratio >= 2.0);
    CHECK(b.ratio <= 4.0);
}

TEST_CASE("coherence suite recovers the injected constants") {
    ExperimentConfig cfg;
    cfg.noise = coherence_noise(11.5, 3.0, 0.57);
    cfg.seed = 9;
    const CoherenceFits f = coherence_suite(cfg);
    CHECK(f.t1.tau == doctest::Approx(11.5).scale(0).epsilon(0.1));
    CHECK(f.echo.tau == doctest::Approx(3.0).scale(0).epsilon(0.1));
    CHECK(f.ramsey.tau_g == doctest::Approx(0.57).scale(0).epsilon(0.1));
    CHECK(f.rabi.tau_g == doctest::Approx(f.rabi_injected).scale(0).epsilon(0.1));
    CHECK_THROWS(coherence_noise(1.0, 3.0, 0.5));
}

TEST_CASE("servo loop") {
    ServoConfig sc;
    auto probe_at = [&](double offset_ghz) {
        return [&sc, offset_ghz](double current, double) { return sc.omega_target + sc.scale_a * current + offset_ghz; };
    };
    const ServoTrace locked = servo_loop(sc, probe_at(0.0), 0.0);
    CHECK(locked.converged);
    CHECK(static_cast<int>(locked.steps.size()) == sc.n_min);

    const ServoTrace far = servo_loop(sc, probe_at(0.05), 0.0);
    CHECK(far.converged);
    for (const auto& s : far.steps) CHECK(std::abs(s.step) <= sc.i_cap + 1e-12);
    CHECK(far.current == doctest::Approx(-5.0).scale(0).epsilon(1e-6));

    ServoConfig tight = sc;
    tight.n_max = 4;
    CHECK_FALSE(servo_loop(tight, probe_at(0.05), 0.0).converged);

    const ServoSession s = servo_session(sc, servo_drift_profile, 4.7, 2.0, 1.0 / 12.0, 0.5, 11);
    CHECK(s.all_converged);
    CHECK(s.max_step <= sc.i_cap + 1e-12);
    double free_dev = 0.0;
    for (double v : s.free_running) free_dev = std::max(free_dev, std::abs(v - 4.7) * 1e3);
    CHECK(s.max_error_after_lock < free_dev);

    ServoConfig bad = sc;
    bad.n_min = 60;
    CHECK_THROWS(bad.check());
}

TEST_CASE("Chern map agrees with the window") {
    const ChernMap cm = chern_map({5, 10, 20}, {1, 3, 6, 12}, 13.0, 1.0, CouplingConvention::amplitude, 24);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) {
            const double c = cm.chern.values(i, j);
            if (std::isnan(c)) continue;
            CHECK(std::abs(c) == (cm.inside.values(i, j) > 0.5 ? 1.0 : 0.0));
        }
}

TEST_CASE("pump inside the window moves about one photon per period") {
    ExperimentConfig cfg;
    cfg.field.b0 = 20;
    cfg.field.omega_mod = 1;
    cfg.field.m = 1;
    cfg.field.g = 2.5;
    cfg.field.delta = 1.6180339887;
    PumpOptions po;
    po.n_periods = 6;
    po.cavity_dim = 60;
    po.evolve.check_truncation = false;
    const SimResult up = pump_run(cfg, band_state(cfg.field, true), fock_superposition(60, {{4, 1.0}}), po);
    const SimResult down = pump_run(cfg, band_state(cfg.field, false), fock_superposition(60, {{24, 1.0}}), po);
    CHECK(up.meta["window_inside"].get<bool>());
    const double s_up = pump_slope(up, 1.0).slope, s_down = pump_slope(down, 1.0).slope;
    MESSAGE("pump slopes: upper " << s_up << " lower " << s_down);
    CHECK(s_up == doctest::Approx(1.0).scale(0).epsilon(0.35));
    CHECK(s_down == doctest::Approx(-1.0).scale(0).epsilon(0.35));
    CHECK(up.states.size() == 7);

    PumpOptions strict;
    strict.cavity_dim = 12;
    strict.n_periods = 6;
    CHECK_THROWS_AS(pump_run(cfg, band_state(cfg.field, true), fock_superposition(12, {{4, 1.0}}), strict),
                    TruncationOverflow);
}

TEST_CASE("transmon leakage under a strong lab-frame drive") {
    const double strong = transmon_leakage(4.7, 240.0, 110.0);
    const double weak = transmon_leakage(4.7, 240.0, 10.0);
    MESSAGE("max P(2) at 110 MHz: " << strong << ", at 10 MHz: " << weak);
    CHECK(strong > weak);
    CHECK(strong < 0.2);
    CHECK(weak < 0.01);
}
