#include "eegrl/reference.hpp"

namespace eegrl::ref {

using kernels::conv_out_extent;
using kernels::pad_begin;

void conv2d_forward(const double* in, int cin, int h, int w,
                    const double* k, int cout, int kh, int kw,
                    const double* bias, Padding pad, double* out) {
    const int ho = conv_out_extent(h, kh, pad);
    const int wo = conv_out_extent(w, kw, pad);
    const int ph = pad == Padding::Same ? pad_begin(kh) : 0;
    const int pw = pad == Padding::Same ? pad_begin(kw) : 0;
    for (int co = 0; co < cout; ++co)
        for (int y = 0; y < ho; ++y)
            for (int x = 0; x < wo; ++x) {
                double acc = bias ? bias[co] : 0.0;
                for (int ci = 0; ci < cin; ++ci)
                    for (int r = 0; r < kh; ++r)
                        for (int t = 0; t < kw; ++t) {
                            const int iy = y + r - ph;
                            const int ix = x + t - pw;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            acc += k[((static_cast<int64_t>(co) * cin + ci) * kh + r) * kw + t] *
                                   in[(static_cast<int64_t>(ci) * h + iy) * w + ix];
                        }
                out[(static_cast<int64_t>(co) * ho + y) * wo + x] = acc;
            }
}

void conv2d_backward(const double* in, int cin, int h, int w,
                     const double* k, int cout, int kh, int kw,
                     Padding pad, const double* g_out,
                     double* g_in, double* g_k, double* g_bias) {
    const int ho = conv_out_extent(h, kh, pad);
    const int wo = conv_out_extent(w, kw, pad);
    const int ph = pad == Padding::Same ? pad_begin(kh) : 0;
    const int pw = pad == Padding::Same ? pad_begin(kw) : 0;
    for (int co = 0; co < cout; ++co)
        for (int y = 0; y < ho; ++y)
            for (int x = 0; x < wo; ++x) {
                const double g = g_out[(static_cast<int64_t>(co) * ho + y) * wo + x];
                if (g_bias) g_bias[co] += g;
                for (int ci = 0; ci < cin; ++ci)
                    for (int r = 0; r < kh; ++r)
                        for (int t = 0; t < kw; ++t) {
                            const int iy = y + r - ph;
                            const int ix = x + t - pw;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            const int64_t ki = ((static_cast<int64_t>(co) * cin + ci) * kh + r) * kw + t;
                            const int64_t ii = (static_cast<int64_t>(ci) * h + iy) * w + ix;
                            if (g_k) g_k[ki] += g * in[ii];
                            if (g_in) g_in[ii] += g * k[ki];
                        }
            }
}

void depthwise_forward(const double* in, int c, int h, int w,
                       const double* k, int kh, int kw, Padding pad, double* out) {
    const int ho = conv_out_extent(h, kh, pad);
    const int wo = conv_out_extent(w, kw, pad);
    const int ph = pad == Padding::Same ? pad_begin(kh) : 0;
    const int pw = pad == Padding::Same ? pad_begin(kw) : 0;
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < ho; ++y)
            for (int x = 0; x < wo; ++x) {
                double acc = 0.0;
                for (int r = 0; r < kh; ++r)
                    for (int t = 0; t < kw; ++t) {
                        const int iy = y + r - ph;
                        const int ix = x + t - pw;
                        if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                        acc += k[(static_cast<int64_t>(ci) * kh + r) * kw + t] *
                               in[(static_cast<int64_t>(ci) * h + iy) * w + ix];
                    }
                out[(static_cast<int64_t>(ci) * ho + y) * wo + x] = acc;
            }
}

void avgpool2x2_forward(const double* in, int c, int h, int w, double* out) {
    const int ho = (h + 1) / 2;
    const int wo = (w + 1) / 2;
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < ho; ++y)
            for (int x = 0; x < wo; ++x) {
                double sum = 0.0;
                int cnt = 0;
                for (int r = 0; r < 2; ++r)
                    for (int t = 0; t < 2; ++t) {
                        const int iy = 2 * y + r;
                        const int ix = 2 * x + t;
                        if (iy >= h || ix >= w) continue;
                        sum += in[(static_cast<int64_t>(ci) * h + iy) * w + ix];
                        ++cnt;
                    }
                out[(static_cast<int64_t>(ci) * ho + y) * wo + x] = sum / cnt;
            }
}

void linear_forward(const double* x, int n, const double* w, int m,
                    const double* b, double* y) {
    for (int i = 0; i < m; ++i) {
        double acc = b ? b[i] : 0.0;
        for (int j = 0; j < n; ++j) acc += w[static_cast<int64_t>(i) * n + j] * x[j];
        y[i] = acc;
    }
}

}  // namespace eegrl::ref
