#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "eegrl/session.hpp"
#include "eegrl/signal.hpp"
#include "eegrl/tensor.hpp"

namespace eegrl {

// One non-overlapping 3 s slice of preprocessed session EEG: three
// sub-second planes shaped [1, channels, samples_per_second], plus the
// smoothed RT of a response onset falling inside the span, when any.
struct SegmentState {
    int index = 0;
    double t_start_s = 0.0;
    std::array<Tensor, 3> planes;
    std::optional<double> measured_rt;
};

// Segments a [channels, samples] matrix already at segment_fs into
// consecutive 3 s states; covered_rts holds (response-onset time, smoothed RT)
// pairs. The trailing remainder shorter than 3 s is dropped.
std::vector<SegmentState> segment_session(
    const Tensor& eeg, double fs_hz,
    const std::vector<std::pair<double, double>>& covered_rts);

// Supervised trial: the 3 s window immediately preceding an event onset,
// labelled with that trial's smoothed RT.
struct TrialSample {
    std::array<Tensor, 3> planes;
    double label_rt = 0.0;
};

struct PreprocConfig {
    FilterSpec filter;
    RtSmoothingSpec smoothing;
    double segment_fs_hz = 128.0;
};

struct PreppedSession {
    std::string subject_id;
    double fs_hz = 0.0;
    std::vector<SegmentState> segments;
    std::vector<TrialSample> sl_trials;
    std::vector<std::pair<double, double>> smoothed_rts;  // keyed by response onset
};

// Full deterministic chain: per-channel bandpass at the native rate,
// resample to segment_fs, RT clip + trailing moving average, segmentation,
// supervised trial extraction.
PreppedSession preprocess_session(const Session& raw, const PreprocConfig& cfg = {});

}  // namespace eegrl
