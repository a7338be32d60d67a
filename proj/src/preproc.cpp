#include "eegrl/preproc.hpp"

#include <cmath>
#include <stdexcept>

namespace eegrl {

std::vector<SegmentState> segment_session(
    const Tensor& eeg, double fs_hz,
    const std::vector<std::pair<double, double>>& covered_rts) {
    if (eeg.ndim() != 2) throw std::invalid_argument("segment_session: eeg must be [C,S]");
    const int channels = eeg.dim(0);
    const int64_t n = eeg.dim(1);
    const int per_second = static_cast<int>(std::lround(fs_hz));
    const int seg_len = 3 * per_second;
    if (n < seg_len) throw std::invalid_argument("segment_session: session shorter than one segment");

    const int n_seg = static_cast<int>(n / seg_len);
    std::vector<SegmentState> out;
    out.reserve(static_cast<size_t>(n_seg));
    for (int i = 0; i < n_seg; ++i) {
        SegmentState seg;
        seg.index = i;
        seg.t_start_s = 3.0 * i;
        for (int k = 0; k < 3; ++k) {
            Tensor plane({1, channels, per_second});
            const int64_t base = static_cast<int64_t>(i) * seg_len + k * per_second;
            for (int c = 0; c < channels; ++c) {
                const double* src = eeg.ptr() + static_cast<int64_t>(c) * n + base;
                double* dst = plane.ptr() + static_cast<int64_t>(c) * per_second;
                std::copy(src, src + per_second, dst);
            }
            seg.planes[k] = std::move(plane);
        }
        for (const auto& [t, rt] : covered_rts)
            if (t >= seg.t_start_s && t < seg.t_start_s + 3.0) seg.measured_rt = rt;
        out.push_back(std::move(seg));
    }
    return out;
}

PreppedSession preprocess_session(const Session& raw, const PreprocConfig& cfg) {
    validate_session(raw);
    PreppedSession prep;
    prep.subject_id = raw.subject_id;
    prep.fs_hz = cfg.segment_fs_hz;

    const int channels = raw.n_channels;
    const int64_t n_raw = raw.eeg.dim(1);

    // filter + resample channel by channel
    std::vector<std::vector<double>> resampled(static_cast<size_t>(channels));
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < channels; ++c) {
        std::span<const double> row(raw.eeg.ptr() + static_cast<int64_t>(c) * n_raw,
                                    static_cast<size_t>(n_raw));
        auto filtered = bandpass_filter(row, raw.fs_hz, cfg.filter);
        resampled[static_cast<size_t>(c)] = resample(filtered, raw.fs_hz, cfg.segment_fs_hz);
    }
    const int64_t n_out = static_cast<int64_t>(resampled[0].size());
    Tensor eeg128({channels, static_cast<int>(n_out)});
    for (int c = 0; c < channels; ++c)
        std::copy(resampled[static_cast<size_t>(c)].begin(),
                  resampled[static_cast<size_t>(c)].end(),
                  eeg128.ptr() + static_cast<int64_t>(c) * n_out);

    // smoothed RT labels keyed by response onset
    if (!raw.events.empty()) {
        std::vector<std::pair<double, double>> rts;
        rts.reserve(raw.events.size());
        for (const TrialEvent& e : raw.events)
            rts.emplace_back(e.response_onset_s, measured_rt(e));
        prep.smoothed_rts = clip_and_smooth_rt(rts, cfg.smoothing);
    }

    prep.segments = segment_session(eeg128, cfg.segment_fs_hz, prep.smoothed_rts);

    // supervised trials: 3 s window ending at each event onset
    const int per_second = static_cast<int>(std::lround(cfg.segment_fs_hz));
    const int seg_len = 3 * per_second;
    for (size_t i = 0; i < raw.events.size(); ++i) {
        const int64_t end = static_cast<int64_t>(std::floor(raw.events[i].event_onset_s *
                                                            cfg.segment_fs_hz));
        const int64_t start = end - seg_len;
        if (start < 0 || end > n_out) continue;
        TrialSample trial;
        trial.label_rt = prep.smoothed_rts[i].second;
        for (int k = 0; k < 3; ++k) {
            Tensor plane({1, channels, per_second});
            const int64_t base = start + static_cast<int64_t>(k) * per_second;
            for (int c = 0; c < channels; ++c)
                std::copy(eeg128.ptr() + static_cast<int64_t>(c) * n_out + base,
                          eeg128.ptr() + static_cast<int64_t>(c) * n_out + base + per_second,
                          plane.ptr() + static_cast<int64_t>(c) * per_second);
            trial.planes[k] = std::move(plane);
        }
        prep.sl_trials.push_back(std::move(trial));
    }
    return prep;
}

}  // namespace eegrl
