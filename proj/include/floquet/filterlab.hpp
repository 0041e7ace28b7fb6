#pragma once

#include <utility>
#include <vector>

#include "floquet/schedules.hpp"

namespace floquet {

struct Kernel {
    double dt = kDefaultDt;
    std::vector<double> taps;

    double gain() const;
    std::size_t peak_index() const;
};

Kernel synth_lowpass_kernel(double cutoff, int order = 6, double dt = kDefaultDt);
Kernel precompensation_kernel(const Kernel& k);
Kernel normalized(Kernel k);

Waveform convolve(const Waveform& w, const Kernel& k);
// centroid of the taps in us
double group_delay(const Kernel& k);
// |H(f)| of the taps at ordinary frequency f (MHz)
double frequency_response(const Kernel& k, double f);
// multiplicative z-channel boost that undoes the droop at the modulation frequency
double droop_boost(const Kernel& k, double f);

double ripple_metric(const Waveform& w, std::pair<double, double> flat_window);

struct RingingReport {
    double raw_ripple = 0.0;
    double precompensated_ripple = 0.0;
    double ratio = 0.0;
    Waveform raw;
    Waveform precompensated;
};

// square pulse of the given length through the kernel, raw and precompensated,
// both shifted back by their group delay before the flat window is measured
RingingReport square_pulse_ringing(const Kernel& k, double length = 1.0, double margin = 0.1, double amplitude = 1.0);

}  // namespace floquet
