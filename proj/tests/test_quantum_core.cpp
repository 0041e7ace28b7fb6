#include <doctest.h>

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "floquet/quantum_core.hpp"

using namespace floquet;

TEST_CASE("sigma_z is diag(+1, -1) with the excited level first") {
    const HilbertSpace q(2, {});
    const Operator sz = build_elementary(q, OpKind::sigma_z);
    CHECK(sz(0, 0).real() == doctest::Approx(1.0));
    CHECK(sz(1, 1).real() == doctest::Approx(-1.0));
    CHECK(std::abs(sz(0, 1)) == 0.0);
    const State e = basis_state(q, 1);
    CHECK(std::abs(e(0)) == doctest::Approx(1.0));
}

TEST_CASE("cavity ladder operator entries and commutator") {
    const HilbertSpace s(2, {3});
    const Operator a = build_elementary(s, OpKind::annihilate, 1);
    const Operator a_cav = a.block(0, 0, 3, 3);
    CHECK(a_cav(0, 1).real() == doctest::Approx(1.0));
    CHECK(a_cav(1, 2).real() == doctest::Approx(std::sqrt(2.0)));
    const Operator ad = build_elementary(s, OpKind::create, 1);
    const Operator comm = a * ad - ad * a;
    // independent oracle: I2 (x) [b, b^dag] with b built here
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(3, 3);
    b(0, 1) = 1.0;
    b(1, 2) = std::sqrt(2.0);
    const Eigen::MatrixXcd expect = Eigen::kroneckerProduct(Eigen::MatrixXcd::Identity(2, 2),
                                                            Eigen::MatrixXcd(b * b.adjoint() - b.adjoint() * b));
    CHECK((comm - expect).norm() < 1e-12);
    CHECK(std::abs(comm(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(comm(1, 1) - 1.0) < 1e-12);
}

TEST_CASE("pump Hamiltonian special times and periodicity") {
    const HilbertSpace q(2, {2});
    const Operator sx = build_elementary(q, OpKind::sigma_x), sz = build_elementary(q, OpKind::sigma_z);
    FieldParams fp;
    fp.b0 = 20;
    fp.m = 1;
    Operator h = pump_hamiltonian(q, fp, 0.0);
    CHECK((h - angular(fp.b0) * sx).norm() < 1e-9);
    fp.m = 0;
    h = pump_hamiltonian(q, fp, fp.period() / 4);
    CHECK((h - 0.5 * angular(fp.b0) * sz).norm() < 1e-9);

    const HilbertSpace s(2, {4});
    fp.m = 0.4;
    fp.g = 13;
    fp.delta = 1.618;
    double worst = 0.0;
    for (int k = 0; k < 64; ++k) {
        const double t = 0.37 * k / 64.0;
        const Operator a = pump_hamiltonian(s, fp, t), b = pump_hamiltonian(s, fp, t + fp.period());
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
        CHECK(hermiticity_error(a) < 1e-12);
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("rotating-frame Hamiltonian reproduces the pump form") {
    const HilbertSpace s(2, {5});
    FieldParams fp;
    fp.b0 = 20;
    fp.m = 0.7;
    fp.g = 13;
    fp.delta = 3;
    for (double t : {0.0, 0.13, 0.5, 0.81}) {
        const double bz = fp.b0 * std::sin(kTwoPi * fp.omega_mod * t);
        const double bx = fp.b0 * (fp.m + std::cos(kTwoPi * fp.omega_mod * t));
        const Operator r = rotating_frame_hamiltonian(s, fp.delta, bz, fp.g, bx);
        CHECK((r - pump_hamiltonian(s, fp, t)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const Operator h = rotating_frame_hamiltonian(s, 2.0, 0, 0, 0);
    const Operator n = build_elementary(s, OpKind::number, 1);
    CHECK((h - angular(2.0) * n).norm() < 1e-12);
}

TEST_CASE("Jaynes-Cummings spectrum: decoupled and resonant dressed splitting") {
    const HilbertSpace s(2, {4});
    DeviceParams p;
    p.omega_q = p.omega_m;
    const Operator h = jaynes_cummings_hamiltonian(s, p, 0.0, 0.0, 0.0);
    const Eigenbasis eb = instantaneous_eigenbasis(h);
    // n = 1 manifold {|e,0>, |g,1>} splits by 2 g
    const double wq = kTwoPi * 1e3 * p.omega_q;
    std::vector<double> near;
    for (int i = 0; i < eb.values.size(); ++i)
        if (std::abs(eb.values(i) - wq / 2) < 10 * angular(p.g_boost)) near.push_back(eb.values(i));
    REQUIRE(near.size() == 2);
    CHECK(std::abs(near[1] - near[0]) == doctest::Approx(2 * angular(p.g_boost)).scale(0).epsilon(1e-9));

    DeviceParams d = p;
    d.g_boost = 1e-300;
    const Eigenbasis e0 = instantaneous_eigenbasis(jaynes_cummings_hamiltonian(s, d, 0.0, 0.0, 0.0));
    const double wc = kTwoPi * 1e3 * d.omega_m;
    std::vector<double> expect;
    for (int n = 0; n < 4; ++n)
        for (int sgn : {-1, 1}) expect.push_back(sgn * wq / 2 + n * wc);
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < 8; ++i) CHECK(e0.values(i) == doctest::Approx(expect[i]).scale(0).epsilon(1e-12));
}

TEST_CASE("transmon ladder: two-level limit and anharmonicity") {
    const HilbertSpace q2(2, {});
    const Operator h2 = transmon_hamiltonian(q2, 4.7, 240);
    const Operator sz = build_elementary(q2, OpKind::sigma_z);
    const Operator shifted = h2 - 0.5 * h2.trace() * Operator::Identity(2, 2);
    CHECK((shifted - 0.5 * kTwoPi * 1e3 * 4.7 * sz).norm() < 1e-6);

    const HilbertSpace q3(3, {});
    const Operator h3 = transmon_hamiltonian(q3, 4.7, 240);
    const double e0 = h3(level_index(3, 0), level_index(3, 0)).real();
    const double e1 = h3(level_index(3, 1), level_index(3, 1)).real();
    const double e2 = h3(level_index(3, 2), level_index(3, 2)).real();
    CHECK((e2 - e1) - (e1 - e0) == doctest::Approx(-angular(240)).scale(0).epsilon(1e-12));
}

TEST_CASE("flux tuning curve") {
    DeviceParams p;
    CHECK(flux_to_frequency(p, 0.0) == doctest::Approx(p.omega_q_range.second));
    const double d = (p.ej_ratio - 1) / (p.ej_ratio + 1);
    CHECK(flux_to_frequency(p, 0.5) == doctest::Approx(p.omega_q_range.second * std::sqrt(d)));
    p.omega_q_range = {3.0, 6.4};
    const double lo = flux_to_frequency(p, 0.5);
    CHECK(std::abs(lo - 4.5) / 4.5 < 0.15);
}

TEST_CASE("instantaneous eigenbasis of qubit fields") {
    const HilbertSpace q(2, {});
    const Operator sx = build_elementary(q, OpKind::sigma_x), sz = build_elementary(q, OpKind::sigma_z);
    const Eigenbasis eb = instantaneous_eigenbasis(0.5 * 20.0 * sx);
    CHECK(eb.values(0) == doctest::Approx(-10.0));
    CHECK(eb.values(1) == doctest::Approx(10.0));
    CHECK(std::abs(std::abs(eb.vectors(0, 1)) - 1 / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(eb.vectors(0, 1) - eb.vectors(1, 1)) < 1e-12);
    const Eigenbasis e2 = instantaneous_eigenbasis(0.5 * (3.0 * sz + 4.0 * sx));
    CHECK(e2.values(1) == doctest::Approx(2.5));
    CHECK(instantaneous_eigenbasis(Operator::Zero(2, 2)).degenerate);
    Operator bad = sx;
    bad(0, 1) = 2.0;
    CHECK_THROWS_AS(instantaneous_eigenbasis(bad), std::invalid_argument);
}

TEST_CASE("Hilbert space validation") {
    CHECK_THROWS(HilbertSpace(1, {}));
    CHECK_THROWS(HilbertSpace(2, {1}));
    CHECK(HilbertSpace(3, {4, 5}).dim() == 60);
}
