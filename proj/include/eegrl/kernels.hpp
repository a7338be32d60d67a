#pragma once

#include <cstdint>

namespace eegrl::kernels {

enum class Padding { Same, Valid };

// Output extents for stride-1 cross-correlation.
inline int conv_out_extent(int in, int k, Padding p) {
    return p == Padding::Same ? in : in - k + 1;
}
// SAME padding: begin = (k-1)/2 so even kernels pad one less on the left/top.
inline int pad_begin(int k) { return (k - 1) / 2; }

void set_parallel(bool on);
bool parallel();

// in [cin,h,w], k [cout,cin,kh,kw], bias [cout] or nullptr, out [cout,ho,wo]
void conv2d_forward(const double* in, int cin, int h, int w,
                    const double* k, int cout, int kh, int kw,
                    const double* bias, Padding pad, double* out);

// accumulates into g_in (caller zeroes), g_k, g_bias (nullable)
void conv2d_backward(const double* in, int cin, int h, int w,
                     const double* k, int cout, int kh, int kw,
                     Padding pad, const double* g_out,
                     double* g_in, double* g_k, double* g_bias);

// depthwise, multiplier 1: in [c,h,w], k [c,kh,kw], out [c,ho,wo]
void depthwise_forward(const double* in, int c, int h, int w,
                       const double* k, int kh, int kw, Padding pad, double* out);

void depthwise_backward(const double* in, int c, int h, int w,
                        const double* k, int kh, int kw, Padding pad,
                        const double* g_out, double* g_in, double* g_k);

// 2x2 average pooling, stride 2, SAME with valid-cell divisors at edges
void avgpool2x2_forward(const double* in, int c, int h, int w, double* out);
void avgpool2x2_backward(int c, int h, int w, const double* g_out, double* g_in);

// y[m] = W[m,n] x[n] + b[m]
void linear_forward(const double* x, int n, const double* w, int m,
                    const double* b, double* y);
void linear_backward(const double* x, int n, const double* w, int m,
                     const double* g_y, double* g_x, double* g_w, double* g_b);

}  // namespace eegrl::kernels
