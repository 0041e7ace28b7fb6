#include <doctest.h>

#include <cmath>

#include "floquet/evolve.hpp"
#include "floquet/schedules.hpp"

using namespace floquet;

namespace {

// counts z transitions that happen while the x drive is on
int lz_transitions(const Schedule& s) {
    int count = 0;
    bool in_ramp = false, overlapped = false;
    for (std::size_t i = 1; i < s.z.size(); ++i) {
        const bool moving = s.z.samples[i] != s.z.samples[i - 1];
        if (moving && s.x.value_at(s.z.sample_time(i)) > 0.0) overlapped = true;
        if (in_ramp && !moving) {
            count += overlapped;
            overlapped = false;
        }
        in_ramp = moving;
    }
    return count + (in_ramp && overlapped);
}

}  // namespace

TEST_CASE("circular field lies on the circle") {
    FieldParams fp;
    fp.b0 = 20;
    fp.omega_mod = 1;
    const auto at0 = field_at(fp, 0.0);
    CHECK(at0.first == doctest::Approx(20.0));
    CHECK(at0.second == doctest::Approx(0.0));
    const auto q = field_at(fp, 0.25);
    CHECK(std::abs(q.first) < 1e-12);
    CHECK(q.second == doctest::Approx(20.0));
    const Schedule s = circular_field(fp, 2.0);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double r2 = s.x.samples[i] * s.x.samples[i] + s.z.samples[i] * s.z.samples[i];
        CHECK(std::abs(r2 / 400.0 - 1.0) <= 1e-10);
    }
    CHECK(s.marker("rotation_end") == doctest::Approx(2.0));
}

TEST_CASE("elliptic field ranges") {
    FieldParams fp;
    fp.b0 = 10;
    fp.m = 0;
    const Schedule c = circular_field(fp, 1.0), e = elliptic_field(fp, 1.0);
    CHECK(c.x.samples == e.x.samples);
    CHECK(c.z.samples == e.z.samples);
    fp.m = 1;
    const auto half = field_at(fp, 0.5);
    CHECK(std::hypot(half.first, half.second) < 1e-12);
    double lo = 1e9, hi = 0;
    for (int k = 0; k <= 1000; ++k) {
        const auto b = field_at(fp, k / 1000.0);
        lo = std::min(lo, std::hypot(b.first, b.second));
        hi = std::max(hi, std::hypot(b.first, b.second));
    }
    CHECK(lo < 1e-9);
    CHECK(hi == doctest::Approx(20.0));
}

TEST_CASE("trapezoid values and area") {
    CHECK(trapezoid_value(5, 0, 1, 0.1, 0.5) == 5.0);
    CHECK(trapezoid_value(5, 0, 1, 0.1, 0.0) == 0.0);
    CHECK(trapezoid_value(5, 0, 1, 0.1, 0.1) == doctest::Approx(5.0));
    const Waveform w = trapezoid(5, 0.2, 1.2, 0.1);
    double area = 0.0;
    for (double v : w.samples) area += v * w.dt;
    CHECK(area == doctest::Approx(5 * (1.0 - 0.1)).scale(0).epsilon(1e-9));
    CHECK_THROWS(trapezoid(1, 0, 0.1, 0.1));
}

TEST_CASE("LZ schedule overlap classes") {
    const double tau_del = 1.0;
    CHECK(lz_transitions(lz_delay_schedule(20, 50, 0.5, tau_del)) == 0);
    CHECK(lz_transitions(lz_delay_schedule(20, 50, 1.5, tau_del)) == 1);
    CHECK(lz_transitions(lz_delay_schedule(20, 50, 2.5, tau_del)) == 2);
    const Schedule s = lz_delay_schedule(20, 50, 2.5, tau_del);
    CHECK(s.z.samples.front() == doctest::Approx(-50));
    CHECK(s.marker("readout") == doctest::Approx(s.duration()));
}

TEST_CASE("ramp-in offsets and stage layout") {
    CHECK(ramp_in_offset(20) == -80);
    CHECK(ramp_in_offset(100) == -200);
    FieldParams fp;
    fp.b0 = 20;
    const Schedule s = ramp_in(fp);
    double zmin = 0;
    for (double v : s.z.samples) zmin = std::min(zmin, v);
    CHECK(zmin == doctest::Approx(-80).scale(0).epsilon(1e-3));
    CHECK(s.x.samples.back() == doctest::Approx(20).scale(0).epsilon(1e-3));
    CHECK(std::abs(s.z.samples.back()) < 0.05);
    CHECK(s.marker("ramp_in_end") == doctest::Approx(s.duration()));
    // no sample-to-sample jump larger than the raised-cosine slope bound
    const double bound = kPi / 2 * 80 * s.z.dt / ramp_stage_duration(20, RampOptions{}) * 1.01;
    for (std::size_t i = 1; i < s.z.size(); ++i) CHECK(std::abs(s.z.samples[i] - s.z.samples[i - 1]) <= bound);
}

TEST_CASE("ramp-in prepares the aligned eigenstate") {
    FieldParams fp;
    fp.b0 = 20;
    const HilbertSpace q(2, {});
    Schedule s = ramp_in(fp);
    const State g = basis_state(q, 0);
    const auto r = propagate_unitary(schedule_source(q, s), g, {0.0, s.duration()}, {}, {.keep_states = true});
    const Operator h = 0.5 * 20.0 * build_elementary(q, OpKind::sigma_x);
    const State plus = instantaneous_eigenbasis(h).vectors.col(1);
    CHECK(std::norm(plus.dot(r.states.back())) >= 0.999);
}

TEST_CASE("ramp-out buffer defaults and intermediate field") {
    CHECK(default_buffer(10) == doctest::Approx(0.15));
    CHECK(default_buffer(30) == 0.0);
    FieldParams fp;
    fp.b0 = 10;
    const Schedule s = ramp_out(fp, 10, 0, -1);
    double xmax = 0;
    for (double v : s.x.samples) xmax = std::max(xmax, v);
    CHECK(xmax == doctest::Approx(25).scale(0).epsilon(1e-3));
    CHECK(std::abs(s.x.samples.back()) < 0.05);
    CHECK(std::abs(s.z.samples.back()) < 0.1);
}

TEST_CASE("ramp-in, rotation and ramp-out round trip returns to g") {
    FieldParams fp;
    fp.b0 = 20;
    fp.omega_mod = 1;
    const HilbertSpace q(2, {});
    Schedule s = ramp_in(fp);
    append(s, circular_field(fp, 2.0));
    append(s, ramp_out(fp, s.x.samples.back(), s.z.samples.back()));
    const auto r = propagate_unitary(schedule_source(q, s), basis_state(q, 0), {0.0, s.duration()}, {},
                                     {.keep_states = true});
    CHECK(std::norm(r.states.back()(level_index(2, 0))) >= 0.99);
}

TEST_CASE("staged shutoff timing") {
    const Schedule z = staged_shutoff(Axis::z, 12, 16);
    for (double v : z.x.samples) CHECK(v == 0.0);
    std::size_t first_move = 0;
    while (first_move + 1 < z.z.size() && z.z.samples[first_move + 1] == z.z.samples[first_move]) ++first_move;
    CHECK((first_move + 1) * z.z.dt == doctest::Approx(0.05));
    CHECK(z.x.value_at(z.marker("readout") - 1e-9) == 0.0);
    CHECK(std::abs(z.z.samples.back()) < 0.1);
    const Schedule x = staged_shutoff(Axis::x, 12, 16);
    for (double v : x.z.samples) CHECK(v == 0.0);
    CHECK(x.markers.count("pi_half") == 1);
}

TEST_CASE("apply_delay bookkeeping") {
    const Schedule s = lz_delay_schedule(20, 50, 1.0, 0.5);
    const Schedule same = apply_delay(s, 0.0);
    CHECK(same.z.samples == s.z.samples);
    CHECK(same.x.samples == s.x.samples);
    const Schedule d = apply_delay(s, 0.3);
    CHECK(d.z_delay == doctest::Approx(0.3));
    CHECK(d.marker("readout") == doctest::Approx(s.marker("readout") + 0.3));
    CHECK(d.z.samples[300] == s.z.samples[0]);
    CHECK(d.z.size() == s.z.size() + 300);
    CHECK(d.x.size() == d.z.size());
}

TEST_CASE("append pads the shorter channel") {
    Schedule a;
    a.x.samples = {1, 2, 3};
    a.z.samples = {4};
    Schedule b;
    b.x.samples = {7};
    b.z.samples = {8};
    b.markers["m"] = 0.0;
    append(a, b);
    CHECK(a.z.samples == std::vector<double>{4, 4, 4, 8});
    CHECK(a.marker("m") == doctest::Approx(3 * a.x.dt));
}
