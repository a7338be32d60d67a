#include "eegrl/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace eegrl {

void clip_filter_norms(Tensor& value, double max_norm) {
    const int filters = value.shape.empty() ? 1 : value.shape[0];
    const int64_t slice = value.size() / filters;
    for (int f = 0; f < filters; ++f) {
        double* w = value.ptr() + static_cast<int64_t>(f) * slice;
        double sq = 0.0;
        for (int64_t i = 0; i < slice; ++i) sq += w[i] * w[i];
        const double norm = std::sqrt(sq);
        if (norm > max_norm) {
            const double s = max_norm / norm;
            for (int64_t i = 0; i < slice; ++i) w[i] *= s;
        }
    }
}

void RmsProp::step(const std::vector<Parameter*>& params) {
    if (mean_sq_.empty()) {
        mean_sq_.reserve(params.size());
        for (const Parameter* p : params) mean_sq_.emplace_back(p->value.shape, 0.0);
    }
    if (mean_sq_.size() != params.size())
        throw std::logic_error("RmsProp::step: parameter list changed size");

    for (size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        Tensor& ms = mean_sq_[pi];
        if (!ms.same_shape(p.value))
            throw std::logic_error("RmsProp::step: accumulator shape mismatch for " + p.name);
        if (!p.grad.same_shape(p.value))
            throw std::invalid_argument("RmsProp::step: missing gradient for " + p.name);

        const int64_t n = p.value.size();
        const double decay = cfg_.decay;
        const double one_minus = 1.0 - cfg_.decay;
        const double lr = cfg_.learning_rate;
        const double eps = cfg_.epsilon;
        const double wd = p.weight_decay;
        double* v = p.value.ptr();
        double* gr = p.grad.ptr();
        double* m = ms.ptr();
#pragma omp parallel for simd schedule(static) if (n > 65536)
        for (int64_t i = 0; i < n; ++i) {
            const double g = gr[i] + wd * v[i];
            m[i] = decay * m[i] + one_minus * g * g;
            v[i] -= lr * g / (std::sqrt(m[i]) + eps);
        }
        if (p.max_norm > 0.0) clip_filter_norms(p.value, p.max_norm);
    }
}

}  // namespace eegrl
