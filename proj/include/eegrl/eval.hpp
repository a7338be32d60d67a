#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegrl/env.hpp"
#include "eegrl/model.hpp"

namespace eegrl {

double rmse(std::span<const double> measured, std::span<const double> predicted);

// throws std::invalid_argument when a vector is constant (undefined) or
// lengths are unequal / below 2
double pearson_correlation(std::span<const double> x, std::span<const double> y);

// Natural cubic spline through strictly increasing knots; constant
// extrapolation outside the knot range.
class NaturalSpline {
  public:
    NaturalSpline(std::span<const double> x, std::span<const double> y);
    double operator()(double q) const;

  private:
    std::vector<double> x_, y_, m_;  // m_: second derivatives at knots
};

struct EvalReport {
    struct Row {
        double t_start_s = 0.0;
        double predicted_rt_s = 0.0;
        std::optional<double> measured_rt_s;
        std::optional<double> spline_rt_s;
    };
    std::vector<Row> rows;
    std::optional<double> rmse_s;        // covered segments only
    std::optional<double> correlation;   // predictions vs spline, all segments
    bool correlation_undefined = false;  // zero-variance predictions
    bool no_covered_segments = false;
    std::string mode;  // "rl" | "sl"
};

// rl: greedy-rollout traced RT; sl: per-segment clipped regression output.
EvalReport evaluate(const QNetwork& model, const std::vector<SegmentState>& segments,
                    const std::string& mode, const ActionSpace& actions, double beta,
                    double initial_trt);

void write_report_json(const EvalReport& report, const std::string& path);
void write_report_csv(const EvalReport& report, const std::string& path);

// Correlation of a prediction sequence against the spline through the
// session's measured knots; nullopt when fewer than two knots exist or the
// correlation is undefined. Used for validation-based checkpoint selection.
std::optional<double> rollout_spline_correlation(const std::vector<SegmentState>& segments,
                                                 std::span<const double> predictions);

}  // namespace eegrl
