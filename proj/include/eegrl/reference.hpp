#pragma once

#include "eegrl/kernels.hpp"

// Naive serial implementations of every kernel, kept as the oracle for the
// blocked OpenMP versions and as the baseline in the benchmark target.
namespace eegrl::ref {

using kernels::Padding;

void conv2d_forward(const double* in, int cin, int h, int w,
                    const double* k, int cout, int kh, int kw,
                    const double* bias, Padding pad, double* out);

void conv2d_backward(const double* in, int cin, int h, int w,
                     const double* k, int cout, int kh, int kw,
                     Padding pad, const double* g_out,
                     double* g_in, double* g_k, double* g_bias);

void depthwise_forward(const double* in, int c, int h, int w,
                       const double* k, int kh, int kw, Padding pad, double* out);

void avgpool2x2_forward(const double* in, int c, int h, int w, double* out);

void linear_forward(const double* x, int n, const double* w, int m,
                    const double* b, double* y);

}  // namespace eegrl::ref
