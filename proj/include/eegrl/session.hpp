#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eegrl/tensor.hpp"

namespace eegrl {

struct TrialEvent {
    double event_onset_s = 0.0;
    double response_onset_s = 0.0;
    double response_offset_s = 0.0;
};

// duration between event onset and response onset
double measured_rt(const TrialEvent& trial);

struct Session {
    std::string subject_id;
    double fs_hz = 500.0;
    int n_channels = 30;
    Tensor eeg;  // [channels, samples]
    std::vector<TrialEvent> events;
    double duration_s = 0.0;
    std::optional<uint64_t> seed;
};

// throws std::invalid_argument naming the offending field
void validate_session(const Session& s);

// per-second latent drowsiness and its RT image
struct LatentTrace {
    std::vector<double> t_s;
    std::vector<double> d;          // in [0,1]
    std::vector<double> latent_rt;  // 0.5 + 7.5*d, in [0.5, 8]
};

struct SynthConfig {
    double duration_s = 5400.0;  // one standard endurance run
    uint64_t seed = 1;
    double time_constant_s = 300.0;  // mind-state drift scale, > 4 min
    double latent_step = 0.03;       // per-second random-walk scale
    double theta_gain = 2.5;         // band amplitude = 1 + gain * d(t)
    double alpha_gain = 1.5;
    double noise_level = 1.0;        // 1/f background scale
    double rt_noise_s = 0.05;        // trial-level response jitter
    std::string subject_id = "synth";
};

std::pair<Session, LatentTrace> generate_session(const SynthConfig& config);

// Session directory format: meta.json, eeg.f64le (row-major channels x
// samples, little-endian doubles), events.csv, latent.csv when synthetic.
void save_session(const Session& s, const std::string& dir,
                  const LatentTrace* latent = nullptr);
Session load_session(const std::string& dir);
std::optional<LatentTrace> load_latent(const std::string& dir);

}  // namespace eegrl
