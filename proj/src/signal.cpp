#include "eegrl/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace eegrl {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

std::vector<double> apply_sos(const std::vector<Biquad>& sos, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    for (const Biquad& s : sos) {
        const double b0 = s[0], b1 = s[1], b2 = s[2], a1 = s[3], a2 = s[4];
        double z1 = 0.0, z2 = 0.0;
        for (double& v : y) {
            const double in = v;
            const double out = b0 * in + z1;
            z1 = b1 * in - a1 * out + z2;
            z2 = b2 * in - a2 * out;
            v = out;
        }
    }
    return y;
}

}  // namespace

std::vector<Biquad> design_butter_bandpass(const FilterSpec& spec, double fs_hz) {
    if (!(0.0 < spec.low_cut_hz && spec.low_cut_hz < spec.high_cut_hz &&
          spec.high_cut_hz < fs_hz / 2.0))
        throw std::invalid_argument("bandpass: need 0 < low < high < fs/2");
    if (spec.order < 1) throw std::invalid_argument("bandpass: order must be >= 1");

    const int n = spec.order;
    // prewarped analog edges
    const double w1 = 2.0 * fs_hz * std::tan(kPi * spec.low_cut_hz / fs_hz);
    const double w2 = 2.0 * fs_hz * std::tan(kPi * spec.high_cut_hz / fs_hz);
    const double bw = w2 - w1;
    const double w0sq = w1 * w2;

    // analog lowpass prototype poles on the unit circle, left half-plane
    std::vector<cplx> proto;
    for (int k = 0; k < n; ++k) {
        const double theta = kPi * (2.0 * k + n + 1.0) / (2.0 * n);
        proto.emplace_back(std::cos(theta), std::sin(theta));
    }

    // lowpass -> bandpass: each prototype pole yields a conjugate-free pair
    std::vector<cplx> apoles;
    for (const cplx& p : proto) {
        const cplx bp = bw * p * 0.5;
        const cplx disc = std::sqrt(bp * bp - w0sq);
        apoles.push_back(bp + disc);
        apoles.push_back(bp - disc);
    }

    // bilinear transform; N zeros at z=1 (s=0) and N at z=-1 (s=inf)
    const double fs2 = 2.0 * fs_hz;
    std::vector<cplx> zpoles;
    for (const cplx& s : apoles) zpoles.push_back((fs2 + s) / (fs2 - s));

    // group into biquads: sort by imaginary part magnitude then pair conjugates
    std::vector<cplx> upper;
    for (const cplx& p : zpoles)
        if (p.imag() > 0) upper.push_back(p);
    std::sort(upper.begin(), upper.end(), [](const cplx& a, const cplx& b) {
        return std::abs(a.imag()) < std::abs(b.imag());
    });
    if (static_cast<int>(upper.size()) != n)
        throw std::logic_error("bandpass: expected conjugate pole pairs");

    std::vector<Biquad> sos;
    for (int i = 0; i < n; ++i) {
        const cplx p = upper[static_cast<size_t>(i)];
        const double a1 = -2.0 * p.real();
        const double a2 = std::norm(p);
        // numerator (1 - z^-2): one zero at z=+1 and one at z=-1 per section
        sos.push_back({1.0, 0.0, -1.0, a1, a2});
    }

    // unity gain at the warped centre frequency
    const double fc = fs_hz / kPi * std::atan(std::sqrt(w0sq) / (2.0 * fs_hz));
    const double g = sos_magnitude(sos, fc, fs_hz);
    if (g <= 0.0) throw std::logic_error("bandpass: degenerate centre gain");
    const double per_section = std::pow(1.0 / g, 1.0 / n);
    for (Biquad& s : sos) {
        s[0] *= per_section;
        s[1] *= per_section;
        s[2] *= per_section;
    }
    return sos;
}

double sos_magnitude(const std::vector<Biquad>& sos, double freq_hz, double fs_hz) {
    const double w = 2.0 * kPi * freq_hz / fs_hz;
    const cplx z1 = std::polar(1.0, -w);
    const cplx z2 = z1 * z1;
    cplx h{1.0, 0.0};
    for (const Biquad& s : sos)
        h *= (s[0] + s[1] * z1 + s[2] * z2) / (1.0 + s[3] * z1 + s[4] * z2);
    return std::abs(h);
}

std::vector<double> bandpass_filter(std::span<const double> signal, double fs_hz,
                                    const FilterSpec& spec) {
    const auto sos = design_butter_bandpass(spec, fs_hz);
    const size_t n = signal.size();
    if (n <= static_cast<size_t>(3 * spec.order))
        throw std::invalid_argument("bandpass_filter: signal too short for edge handling");

    // odd-reflection padding, up to 3 s per side, to absorb edge transients
    const size_t pad = std::min(n - 1, static_cast<size_t>(3.0 * fs_hz));
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (size_t i = 0; i < pad; ++i) ext.push_back(2.0 * signal[0] - signal[pad - i]);
    ext.insert(ext.end(), signal.begin(), signal.end());
    for (size_t i = 0; i < pad; ++i) ext.push_back(2.0 * signal[n - 1] - signal[n - 2 - i]);

    std::vector<double> fwd = apply_sos(sos, ext);
    std::reverse(fwd.begin(), fwd.end());
    std::vector<double> bwd = apply_sos(sos, fwd);
    std::reverse(bwd.begin(), bwd.end());

    return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
            bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> resample(std::span<const double> signal, double from_hz, double to_hz) {
    if (signal.empty()) throw std::invalid_argument("resample: empty input");
    if (from_hz <= 0 || to_hz <= 0) throw std::invalid_argument("resample: bad rates");

    const long lf = std::lround(from_hz);
    const long lt = std::lround(to_hz);
    const long g = std::gcd(lf, lt);
    const long up = lt / g;    // 32 for 500 -> 128
    const long down = lf / g;  // 125

    const size_t n = signal.size();
    const size_t n_out = static_cast<size_t>((static_cast<long long>(n) * lt) / lf);
    if (n_out == 0) return {};

    // windowed-sinc interpolation kernel in input-sample units
    const double cutoff = 0.5 * std::min(1.0, to_hz / from_hz);  // cycles/sample
    const int half = 48;
    const double beta = 9.0;
    const auto bessel_i0 = [](double x) {
        double sum = 1.0, term = 1.0;
        for (int k = 1; k < 64; ++k) {
            term *= (x / (2.0 * k)) * (x / (2.0 * k));
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return sum;
    };
    const double i0b = bessel_i0(beta);
    const auto kernel = [&](double u) {
        const double a = u / half;
        if (a <= -1.0 || a >= 1.0) return 0.0;
        const double window = bessel_i0(beta * std::sqrt(1.0 - a * a)) / i0b;
        const double xx = 2.0 * cutoff * u;
        const double s = xx == 0.0 ? 1.0 : std::sin(kPi * xx) / (kPi * xx);
        return 2.0 * cutoff * s * window;
    };

    // per-phase tap tables, normalised so a constant input is preserved exactly
    std::vector<std::vector<double>> phases(static_cast<size_t>(up));
    for (long ph = 0; ph < up; ++ph) {
        const double frac = static_cast<double>(ph) / static_cast<double>(up);
        auto& taps = phases[static_cast<size_t>(ph)];
        taps.resize(2 * half + 1);
        double sum = 0.0;
        for (int j = -half; j <= half; ++j) {
            const double v = kernel(frac - j);  // offset of tap j from position n0+frac
            taps[static_cast<size_t>(j + half)] = v;
            sum += v;
        }
        for (double& v : taps) v /= sum;
    }

    std::vector<double> out(n_out);
    for (size_t m = 0; m < n_out; ++m) {
        const long long num = static_cast<long long>(m) * down;
        const long long n0 = num / up;
        const long ph = static_cast<long>(num % up);
        const auto& taps = phases[static_cast<size_t>(ph)];
        double acc = 0.0;
        for (int j = -half; j <= half; ++j) {
            long long idx = n0 + j;
            if (idx < 0) idx = 0;  // edge replication
            if (idx >= static_cast<long long>(n)) idx = static_cast<long long>(n) - 1;
            acc += taps[static_cast<size_t>(j + half)] * signal[static_cast<size_t>(idx)];
        }
        out[m] = acc;
    }
    return out;
}

std::vector<std::pair<double, double>> clip_and_smooth_rt(
    std::span<const std::pair<double, double>> rts, const RtSmoothingSpec& spec) {
    if (rts.empty()) throw std::invalid_argument("clip_and_smooth_rt: empty input");
    for (size_t i = 1; i < rts.size(); ++i)
        if (rts[i].first <= rts[i - 1].first)
            throw std::invalid_argument("clip_and_smooth_rt: times must be strictly increasing");

    std::vector<double> clipped(rts.size());
    for (size_t i = 0; i < rts.size(); ++i)
        clipped[i] = std::clamp(rts[i].second, spec.clip_min_s, spec.clip_max_s);

    std::vector<std::pair<double, double>> out(rts.size());
    size_t lo = 0;
    double window_sum = 0.0;
    for (size_t i = 0; i < rts.size(); ++i) {
        window_sum += clipped[i];
        while (rts[lo].first < rts[i].first - spec.window_s) {
            window_sum -= clipped[lo];
            ++lo;
        }
        out[i] = {rts[i].first, window_sum / static_cast<double>(i - lo + 1)};
    }
    return out;
}

}  // namespace eegrl
