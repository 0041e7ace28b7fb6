#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "floquet/quantum_core.hpp"

namespace floquet {

inline constexpr double kDefaultDt = 1e-3;  // 1 ns

// Zero-order-hold sample stream; sample i covers [t0 + i dt, t0 + (i+1) dt)
struct Waveform {
    double dt = kDefaultDt;
    double t0 = 0.0;
    std::vector<double> samples;

    std::size_t size() const { return samples.size(); }
    double duration() const { return dt * static_cast<double>(samples.size()); }
    double end() const { return t0 + duration(); }
    double sample_time(std::size_t i) const { return t0 + (static_cast<double>(i) + 0.5) * dt; }
    double value_at(double t) const;
    void check() const;
};

// Samples f at bin centers over [t0, t0 + duration)
Waveform sample_function(const std::function<double(double)>& f, double t0, double duration, double dt = kDefaultDt);
int sample_count(double duration, double dt);

struct Schedule {
    Waveform x;
    Waveform z;
    double z_delay = 0.0;
    std::map<std::string, double> markers;

    double duration() const;
    double marker(const std::string& name) const;
    void check() const;
};

// Appends a fragment at sample level; fragment markers are offset by the current duration
void append(Schedule& s, const Schedule& fragment);
Schedule concat(std::vector<Schedule> parts);

Schedule circular_field(const FieldParams& fp, double duration, double dt = kDefaultDt);
Schedule elliptic_field(const FieldParams& fp, double duration, double dt = kDefaultDt);

double trapezoid_value(double amplitude, double t_start, double t_stop, double ramp, double t);
Waveform trapezoid(double amplitude, double t_start, double t_stop, double ramp, double dt = kDefaultDt);

struct LzOptions {
    double x_ramp = 0.02;
    double z_ramp = 0.2;
    double fbl_length = 1.0;
    double tail = 0.05;
    double dt = kDefaultDt;
};

Schedule lz_delay_schedule(double omega, double delta, double tau, double tau_del, const LzOptions& opt = {});

struct RampOptions {
    double stage_min = 0.2;     // us
    double stage_scale = 5.0;   // us * MHz, slow stages last at least stage_scale / B0
    double dt = kDefaultDt;
};

double smooth_step(double u);
double ramp_in_offset(double b0);
double ramp_stage_duration(double b0, const RampOptions& opt);
double default_buffer(double b0);

Schedule ramp_in(const FieldParams& fp, const RampOptions& opt = {});
// Starts from the frozen field (x_f, z_f); buffer < 0 selects the default rule
Schedule ramp_out(const FieldParams& fp, double x_f, double z_f, double buffer = -1.0, const RampOptions& opt = {});

enum class Axis { x, z };

struct ShutoffOptions {
    double hold = 0.05;
    double ramp = 0.02;
    double dt = kDefaultDt;
};

Schedule staged_shutoff(Axis axis, double x_f, double z_f, const ShutoffOptions& opt = {});

Schedule apply_delay(const Schedule& s, double delay);

}  // namespace floquet
