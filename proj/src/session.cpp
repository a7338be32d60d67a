#include "eegrl/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "eegrl/rng.hpp"

namespace eegrl {

namespace fs = std::filesystem;
using nlohmann::json;

double measured_rt(const TrialEvent& trial) {
    if (!(trial.event_onset_s < trial.response_onset_s &&
          trial.response_onset_s < trial.response_offset_s))
        throw std::invalid_argument("measured_rt: trial must satisfy event < response onset < offset");
    return trial.response_onset_s - trial.event_onset_s;
}

void validate_session(const Session& s) {
    if (s.n_channels <= 0) throw std::invalid_argument("session: n_channels must be positive");
    if (s.fs_hz <= 0) throw std::invalid_argument("session: fs_hz must be positive");
    if (s.eeg.ndim() != 2 || s.eeg.dim(0) != s.n_channels)
        throw std::invalid_argument("session: eeg must be [n_channels, samples]");
    double prev_onset = -1e300;
    for (size_t i = 0; i < s.events.size(); ++i) {
        const TrialEvent& e = s.events[i];
        if (!(e.event_onset_s < e.response_onset_s))
            throw std::invalid_argument("session: event " + std::to_string(i) +
                                        ": response_onset_s must exceed event_onset_s");
        if (!(e.response_onset_s < e.response_offset_s))
            throw std::invalid_argument("session: event " + std::to_string(i) +
                                        ": response_offset_s must exceed response_onset_s");
        if (e.response_offset_s >= s.duration_s)
            throw std::invalid_argument("session: event " + std::to_string(i) +
                                        ": times must be below duration_s");
        if (i > 0 && e.event_onset_s - prev_onset < 5.0)
            throw std::invalid_argument("session: event " + std::to_string(i) +
                                        ": onsets must be at least 5 s apart");
        prev_onset = e.event_onset_s;
    }
}

namespace {

double lerp_series(const std::vector<double>& per_second, double t) {
    if (per_second.empty()) return 0.0;
    if (t <= 0.0) return per_second.front();
    const double last = static_cast<double>(per_second.size() - 1);
    if (t >= last) return per_second.back();
    const size_t k = static_cast<size_t>(t);
    const double f = t - static_cast<double>(k);
    return (1.0 - f) * per_second[k] + f * per_second[k + 1];
}

double reflect_into(double x, double lo, double hi) {
    if (x < lo) x = lo + (lo - x);
    if (x > hi) x = hi - (x - hi);
    return std::clamp(x, lo, hi);
}

// FNV-1a; std::hash is implementation-defined and would break reproducibility
uint64_t subject_hash(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::pair<Session, LatentTrace> generate_session(const SynthConfig& config) {
    if (config.duration_s < 60.0)
        throw std::invalid_argument("generate_session: duration must be >= 60 s");
    if (config.time_constant_s <= 0.0)
        throw std::invalid_argument("generate_session: time constant must be positive");

    Rng master(config.seed);
    Rng latent_rng = master.fork(1);
    Rng event_rng = master.fork(2);
    Rng source_rng = master.fork(4);
    Rng noise_rng = master.fork(5);
    // channel topography belongs to the subject: sessions of one subject
    // share the mixing matrix while sources, noise and events stay per-seed
    Rng mix_rng = Rng(subject_hash(config.subject_id)).fork(3);

    // latent drowsiness: bounded mean-reverting walk, one step per second
    const int n_sec = static_cast<int>(std::floor(config.duration_s)) + 1;
    LatentTrace trace;
    trace.t_s.resize(n_sec);
    trace.d.resize(n_sec);
    trace.latent_rt.resize(n_sec);
    const double mean_level = latent_rng.uniform(0.35, 0.65);
    double d = latent_rng.uniform(0.1, 0.4);
    for (int k = 0; k < n_sec; ++k) {
        trace.t_s[k] = k;
        trace.d[k] = d;
        trace.latent_rt[k] = 0.5 + 7.5 * d;
        d += (mean_level - d) / config.time_constant_s +
             config.latent_step * latent_rng.gaussian();
        d = reflect_into(d, 0.0, 1.0);
    }

    Session s;
    s.subject_id = config.subject_id;
    s.fs_hz = 500.0;
    s.n_channels = 30;
    s.duration_s = config.duration_s;
    s.seed = config.seed;

    // trial events: inter-onset gaps i.i.d. uniform [5, 10] s
    double onset = event_rng.uniform(5.0, 10.0);
    while (onset + 10.0 < config.duration_s) {
        const double rt = std::clamp(
            lerp_series(trace.latent_rt, onset) + config.rt_noise_s * event_rng.gaussian(),
            0.5, 8.0);
        TrialEvent ev;
        ev.event_onset_s = onset;
        ev.response_onset_s = onset + rt;
        ev.response_offset_s = ev.response_onset_s + event_rng.uniform(0.4, 1.2);
        s.events.push_back(ev);
        onset += event_rng.uniform(5.0, 10.0);
    }

    // EEG: two narrowband sources mixed through a fixed random matrix plus
    // per-channel 1/f background (Kellet-style pinking filter)
    const int64_t n_samp = static_cast<int64_t>(std::llround(config.duration_s * s.fs_hz));
    s.eeg = Tensor({s.n_channels, static_cast<int>(n_samp)});

    std::vector<double> mix_theta(s.n_channels), mix_alpha(s.n_channels);
    for (int c = 0; c < s.n_channels; ++c) {
        mix_theta[c] = mix_rng.gaussian() * 0.6;
        mix_alpha[c] = mix_rng.gaussian() * 0.6;
    }

    std::vector<double> theta(n_samp), alpha(n_samp);
    {
        double f_th = source_rng.uniform(4.5, 6.5);
        double f_al = source_rng.uniform(8.5, 11.5);
        double ph_th = source_rng.uniform(0.0, 2.0 * std::numbers::pi);
        double ph_al = source_rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double dt = 1.0 / s.fs_hz;
        for (int64_t i = 0; i < n_samp; ++i) {
            const double t = static_cast<double>(i) * dt;
            const double dd = lerp_series(trace.d, t);
            theta[i] = (1.0 + config.theta_gain * dd) * std::sin(ph_th);
            alpha[i] = (1.0 + config.alpha_gain * dd) * std::sin(ph_al);
            f_th = reflect_into(f_th + 0.02 * source_rng.gaussian(), 4.0, 7.0);
            f_al = reflect_into(f_al + 0.02 * source_rng.gaussian(), 8.0, 12.0);
            ph_th += 2.0 * std::numbers::pi * f_th * dt;
            ph_al += 2.0 * std::numbers::pi * f_al * dt;
        }
    }

    for (int c = 0; c < s.n_channels; ++c) {
        double* row = s.eeg.ptr() + static_cast<int64_t>(c) * n_samp;
        double b0 = 0.0, b1 = 0.0, b2 = 0.0;
        for (int64_t i = 0; i < n_samp; ++i) {
            const double w = noise_rng.gaussian();
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            const double pink = (b0 + b1 + b2 + w * 0.1848) * 0.25;
            row[i] = mix_theta[c] * theta[i] + mix_alpha[c] * alpha[i] +
                     config.noise_level * pink;
        }
    }

    validate_session(s);
    return {std::move(s), std::move(trace)};
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& field) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("session: malformed value for " + field + ": '" + s + "'");
    }
}

}  // namespace

void save_session(const Session& s, const std::string& dir, const LatentTrace* latent) {
    validate_session(s);
    fs::create_directories(dir);

    json meta;
    meta["subject_id"] = s.subject_id;
    meta["fs_hz"] = s.fs_hz;
    meta["n_channels"] = s.n_channels;
    meta["n_samples"] = s.eeg.dim(1);
    meta["duration_s"] = s.duration_s;
    if (s.seed) meta["seed"] = *s.seed;
    std::ofstream mf(fs::path(dir) / "meta.json", std::ios::trunc);
    if (!mf) throw std::runtime_error("session: cannot write meta.json in " + dir);
    mf << meta.dump(2) << "\n";

    std::ofstream blob(fs::path(dir) / "eeg.f64le", std::ios::binary | std::ios::trunc);
    if (!blob) throw std::runtime_error("session: cannot write eeg.f64le in " + dir);
    blob.write(reinterpret_cast<const char*>(s.eeg.ptr()),
               static_cast<std::streamsize>(s.eeg.size() * sizeof(double)));
    if (!blob) throw std::runtime_error("session: short write to eeg.f64le");

    std::ofstream ev(fs::path(dir) / "events.csv", std::ios::trunc);
    ev << "event_onset_s,response_onset_s,response_offset_s\n";
    for (const TrialEvent& e : s.events)
        ev << fmt_double(e.event_onset_s) << "," << fmt_double(e.response_onset_s) << ","
           << fmt_double(e.response_offset_s) << "\n";

    if (latent) {
        std::ofstream lf(fs::path(dir) / "latent.csv", std::ios::trunc);
        lf << "t_s,d,latent_rt_s\n";
        for (size_t i = 0; i < latent->t_s.size(); ++i)
            lf << fmt_double(latent->t_s[i]) << "," << fmt_double(latent->d[i]) << ","
               << fmt_double(latent->latent_rt[i]) << "\n";
    }
}

Session load_session(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "meta.json");
    if (!mf) throw std::runtime_error("session: cannot open meta.json in " + dir);
    json meta;
    try {
        mf >> meta;
    } catch (const json::exception& e) {
        throw std::runtime_error("session: malformed meta.json: " + std::string(e.what()));
    }

    Session s;
    try {
        s.subject_id = meta.at("subject_id").get<std::string>();
        s.fs_hz = meta.at("fs_hz").get<double>();
        s.n_channels = meta.at("n_channels").get<int>();
        s.duration_s = meta.at("duration_s").get<double>();
        if (meta.contains("seed")) s.seed = meta["seed"].get<uint64_t>();
    } catch (const json::exception& e) {
        throw std::runtime_error("session: meta.json missing field: " + std::string(e.what()));
    }
    const int64_t n_samples = meta.at("n_samples").get<int64_t>();

    const fs::path blob_path = fs::path(dir) / "eeg.f64le";
    std::ifstream blob(blob_path, std::ios::binary | std::ios::ate);
    if (!blob) throw std::runtime_error("session: cannot open eeg.f64le in " + dir);
    const uint64_t actual = static_cast<uint64_t>(blob.tellg());
    const uint64_t expected =
        static_cast<uint64_t>(s.n_channels) * static_cast<uint64_t>(n_samples) * sizeof(double);
    if (actual != expected)
        throw std::runtime_error("session: eeg.f64le size mismatch: expected " +
                                 std::to_string(expected) + " bytes, got " +
                                 std::to_string(actual));
    blob.seekg(0);
    s.eeg = Tensor({s.n_channels, static_cast<int>(n_samples)});
    blob.read(reinterpret_cast<char*>(s.eeg.ptr()), static_cast<std::streamsize>(expected));
    if (!blob) throw std::runtime_error("session: short read from eeg.f64le");

    std::ifstream ev(fs::path(dir) / "events.csv");
    if (!ev) throw std::runtime_error("session: cannot open events.csv in " + dir);
    std::string line;
    if (!std::getline(ev, line) || line != "event_onset_s,response_onset_s,response_offset_s")
        throw std::runtime_error("session: events.csv has an unexpected header");
    size_t lineno = 1;
    while (std::getline(ev, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
            throw std::runtime_error("session: events.csv line " + std::to_string(lineno) +
                                     " needs three columns");
        TrialEvent e;
        e.event_onset_s = parse_double(a, "event_onset_s");
        e.response_onset_s = parse_double(b, "response_onset_s");
        e.response_offset_s = parse_double(c, "response_offset_s");
        s.events.push_back(e);
    }

    validate_session(s);
    return s;
}

std::optional<LatentTrace> load_latent(const std::string& dir) {
    std::ifstream lf(fs::path(dir) / "latent.csv");
    if (!lf) return std::nullopt;
    std::string line;
    if (!std::getline(lf, line) || line != "t_s,d,latent_rt_s")
        throw std::runtime_error("session: latent.csv has an unexpected header");
    LatentTrace trace;
    size_t lineno = 1;
    while (std::getline(lf, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
            throw std::runtime_error("session: latent.csv line " + std::to_string(lineno) +
                                     " needs three columns");
        trace.t_s.push_back(parse_double(a, "t_s"));
        trace.d.push_back(parse_double(b, "d"));
        trace.latent_rt.push_back(parse_double(c, "latent_rt_s"));
    }
    return trace;
}

}  // namespace eegrl
