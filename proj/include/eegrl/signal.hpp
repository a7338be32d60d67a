#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace eegrl {

struct FilterSpec {
    double low_cut_hz = 0.5;
    double high_cut_hz = 50.0;
    int order = 4;  // prototype order; bandpass has 2*order poles
};

struct RtSmoothingSpec {
    double clip_min_s = 0.5;
    double clip_max_s = 8.0;
    double window_s = 90.0;  // trailing, inclusive of the sample's own time
};

// One second-order section, direct form II transposed: {b0,b1,b2,a1,a2}.
using Biquad = std::array<double, 5>;

// Butterworth bandpass as cascaded biquads (bilinear transform, prewarped).
std::vector<Biquad> design_butter_bandpass(const FilterSpec& spec, double fs_hz);

// |H(f)| of the cascade at one frequency; the zero-phase response is |H|^2.
double sos_magnitude(const std::vector<Biquad>& sos, double freq_hz, double fs_hz);

// Zero-phase (forward-backward) application with odd-reflection padding.
std::vector<double> bandpass_filter(std::span<const double> signal, double fs_hz,
                                    const FilterSpec& spec = {});

// Rational-rate polyphase resampling with a normalised windowed-sinc kernel.
// Output length is floor(n * to / from) exactly.
std::vector<double> resample(std::span<const double> signal, double from_hz, double to_hz);

// Clip each RT into [clip_min, clip_max], then replace it with the mean of
// all clipped RTs whose times fall in the trailing window ending at its own
// time (inclusive). Times must be strictly increasing.
std::vector<std::pair<double, double>> clip_and_smooth_rt(
    std::span<const std::pair<double, double>> rts, const RtSmoothingSpec& spec = {});

}  // namespace eegrl
