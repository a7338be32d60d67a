#include "eegrl/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "eegrl/trainer.hpp"

namespace eegrl {

double rmse(std::span<const double> measured, std::span<const double> predicted) {
    if (measured.empty() || measured.size() != predicted.size())
        throw std::invalid_argument("rmse: need equal, nonempty vectors");
    double acc = 0.0;
    for (size_t i = 0; i < measured.size(); ++i) {
        const double d = measured[i] - predicted[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(measured.size()));
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson: need equal lengths >= 2");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("pearson: correlation undefined for constant input");
    return sxy / std::sqrt(sxx * syy);
}

NaturalSpline::NaturalSpline(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spline: need at least two knots");
    for (size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1]))
            throw std::invalid_argument("spline: knot positions must be strictly increasing");
    x_.assign(x.begin(), x.end());
    y_.assign(y.begin(), y.end());
    const size_t n = x_.size();
    m_.assign(n, 0.0);
    if (n == 2) return;

    // tridiagonal system for interior second derivatives, natural ends
    const size_t k = n - 2;
    std::vector<double> diag(k), rhs(k), sub(k), sup(k);
    for (size_t i = 0; i < k; ++i) {
        const double h0 = x_[i + 1] - x_[i];
        const double h1 = x_[i + 2] - x_[i + 1];
        sub[i] = h0;
        diag[i] = 2.0 * (h0 + h1);
        sup[i] = h1;
        rhs[i] = 6.0 * ((y_[i + 2] - y_[i + 1]) / h1 - (y_[i + 1] - y_[i]) / h0);
    }
    for (size_t i = 1; i < k; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m_[k] = rhs[k - 1] / diag[k - 1];
    for (size_t i = k - 1; i-- > 0;) m_[i + 1] = (rhs[i] - sup[i] * m_[i + 2]) / diag[i];
}

double NaturalSpline::operator()(double q) const {
    if (q <= x_.front()) return y_.front();
    if (q >= x_.back()) return y_.back();
    size_t lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
        const size_t mid = (lo + hi) / 2;
        (x_[mid] <= q ? lo : hi) = mid;
    }
    const double h = x_[lo + 1] - x_[lo];
    const double u = q - x_[lo];
    const double b = (y_[lo + 1] - y_[lo]) / h - h * (2.0 * m_[lo] + m_[lo + 1]) / 6.0;
    return y_[lo] + u * (b + u * (m_[lo] / 2.0 + u * (m_[lo + 1] - m_[lo]) / (6.0 * h)));
}

EvalReport evaluate(const QNetwork& model, const std::vector<SegmentState>& segments,
                    const std::string& mode, const ActionSpace& actions, double beta,
                    double initial_trt) {
    if (segments.empty()) throw std::invalid_argument("evaluate: no segments");
    EvalReport report;
    report.mode = mode;

    std::vector<double> predictions;
    if (mode == "rl") {
        if (!is_rl_variant(model.config().variant))
            throw std::invalid_argument("evaluate: rl mode needs a dqn/double/dueling checkpoint, got " +
                                        variant_name(model.config().variant));
        predictions = greedy_rollout(model, segments, actions, beta, initial_trt);
    } else if (mode == "sl") {
        if (model.config().variant != Variant::Supervised)
            throw std::invalid_argument("evaluate: sl mode needs a supervised checkpoint, got " +
                                        variant_name(model.config().variant));
        predictions.reserve(segments.size());
        for (const SegmentState& s : segments) predictions.push_back(model.predict_rt(s.planes));
    } else {
        throw std::invalid_argument("evaluate: mode must be rl or sl, got '" + mode + "'");
    }

    std::vector<double> knot_x, knot_y, covered_measured, covered_predicted;
    for (size_t i = 0; i < segments.size(); ++i) {
        if (!segments[i].measured_rt) continue;
        knot_x.push_back(static_cast<double>(i));
        knot_y.push_back(*segments[i].measured_rt);
        covered_measured.push_back(*segments[i].measured_rt);
        covered_predicted.push_back(predictions[i]);
    }

    std::optional<NaturalSpline> spline;
    if (knot_x.size() >= 2) spline.emplace(knot_x, knot_y);

    report.rows.resize(segments.size());
    std::vector<double> spline_curve;
    for (size_t i = 0; i < segments.size(); ++i) {
        EvalReport::Row& row = report.rows[i];
        row.t_start_s = segments[i].t_start_s;
        row.predicted_rt_s = predictions[i];
        row.measured_rt_s = segments[i].measured_rt;
        if (spline) {
            row.spline_rt_s = (*spline)(static_cast<double>(i));
            spline_curve.push_back(*row.spline_rt_s);
        }
    }

    if (covered_measured.empty()) {
        report.no_covered_segments = true;
    } else {
        report.rmse_s = rmse(covered_measured, covered_predicted);
    }
    if (spline) {
        try {
            report.correlation = pearson_correlation(predictions, spline_curve);
        } catch (const std::invalid_argument&) {
            report.correlation_undefined = true;
        }
    }
    return report;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::json j;
    j["mode"] = report.mode;
    j["n_segments"] = report.rows.size();
    size_t covered = 0;
    for (const auto& r : report.rows)
        if (r.measured_rt_s) ++covered;
    j["n_covered"] = covered;
    if (report.rmse_s) j["rmse"] = *report.rmse_s;
    else j["rmse"] = nullptr;
    if (report.correlation) j["correlation"] = *report.correlation;
    else j["correlation"] = nullptr;
    j["correlation_undefined"] = report.correlation_undefined;
    j["no_covered_segments"] = report.no_covered_segments;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("report: cannot write " + path);
    f << j.dump(2) << "\n";
}

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("report: cannot write " + path);
    f << "t_start_s,predicted_rt_s,measured_rt_s,spline_rt_s\n";
    for (const auto& r : report.rows) {
        f << fmt_double(r.t_start_s) << "," << fmt_double(r.predicted_rt_s) << ",";
        if (r.measured_rt_s) f << fmt_double(*r.measured_rt_s);
        f << ",";
        if (r.spline_rt_s) f << fmt_double(*r.spline_rt_s);
        f << "\n";
    }
}

std::optional<double> rollout_spline_correlation(const std::vector<SegmentState>& segments,
                                                 std::span<const double> predictions) {
    std::vector<double> kx, ky;
    for (size_t i = 0; i < segments.size() && i < predictions.size(); ++i)
        if (segments[i].measured_rt) {
            kx.push_back(static_cast<double>(i));
            ky.push_back(*segments[i].measured_rt);
        }
    if (kx.size() < 2) return std::nullopt;
    NaturalSpline spline(kx, ky);
    std::vector<double> curve(predictions.size());
    for (size_t i = 0; i < predictions.size(); ++i) curve[i] = spline(static_cast<double>(i));
    try {
        return pearson_correlation(predictions, curve);
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

}  // namespace eegrl
