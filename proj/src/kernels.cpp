#include "eegrl/kernels.hpp"

#include <atomic>
#include <cstring>
#include <vector>

namespace eegrl::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// conv2d runs over an im2col matrix: cols[pos][j] with pos = y*wo + x and
// j = (ci*kh + r)*kw + t, zero at padded taps. Rows are contiguous, so the
// forward pass is a dot per (pos, co) and both backward passes are axpys
// over the same rows. Scratch is reused per thread.
struct ColScratch {
    std::vector<double> cols;
    std::vector<double> g_cols;
};
thread_local ColScratch tl_scratch;

void im2col(const double* in, int cin, int h, int w, int kh, int kw, int ph, int pw,
            int ho, int wo, double* cols) {
    const int j_count = cin * kh * kw;
    for (int y = 0; y < ho; ++y) {
        for (int x = 0; x < wo; ++x) {
            double* row = cols + (static_cast<int64_t>(y) * wo + x) * j_count;
            int j = 0;
            for (int ci = 0; ci < cin; ++ci) {
                const double* ch = in + static_cast<int64_t>(ci) * h * w;
                for (int r = 0; r < kh; ++r) {
                    const int iy = y + r - ph;
                    if (iy < 0 || iy >= h) {
                        for (int t = 0; t < kw; ++t) row[j++] = 0.0;
                        continue;
                    }
                    const double* irow = ch + static_cast<int64_t>(iy) * w;
                    const int base = x - pw;
                    // contiguous interior fast path
                    if (base >= 0 && base + kw <= w) {
                        std::memcpy(row + j, irow + base, sizeof(double) * kw);
                        j += kw;
                    } else {
                        for (int t = 0; t < kw; ++t) {
                            const int ix = base + t;
                            row[j++] = (ix < 0 || ix >= w) ? 0.0 : irow[ix];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }
bool parallel() { return g_parallel.load(std::memory_order_relaxed); }

namespace {

// single input channel, 1-row kernel: slide over zero-padded rows so the
// inner loops never branch (the padding contributes exact zeros)
thread_local std::vector<double> tl_padrow;

void conv_row_forward(const double* in, int h, int w, const double* k, int cout,
                      int kw, const double* bias, Padding pad, double* out) {
    const int wo = conv_out_extent(w, kw, pad);
    const int pw = pad == Padding::Same ? pad_begin(kw) : 0;
    const int wp = w + (pad == Padding::Same ? kw - 1 : 0);

#pragma omp parallel for schedule(static) if (parallel() && h > 1)
    for (int y = 0; y < h; ++y) {
        auto& row = tl_padrow;
        if (row.size() < static_cast<size_t>(wp)) row.resize(static_cast<size_t>(wp));
        std::memset(row.data(), 0, sizeof(double) * static_cast<size_t>(wp));
        std::memcpy(row.data() + pw, in + static_cast<int64_t>(y) * w,
                    sizeof(double) * static_cast<size_t>(w));
        for (int co = 0; co < cout; ++co) {
            const double* krow = k + static_cast<int64_t>(co) * kw;
            double* orow = out + (static_cast<int64_t>(co) * h + y) * wo;
            const double b = bias ? bias[co] : 0.0;
            int x0 = 0;
            // 32-wide output tiles keep the accumulators in registers
            for (; x0 + 32 <= wo; x0 += 32) {
                double acc[32];
                for (int i = 0; i < 32; ++i) acc[i] = b;
                const double* base = row.data() + x0;
                for (int t = 0; t < kw; ++t) {
                    const double kv = krow[t];
                    const double* ip = base + t;
#pragma omp simd
                    for (int i = 0; i < 32; ++i) acc[i] += kv * ip[i];
                }
                std::memcpy(orow + x0, acc, sizeof(acc));
            }
            for (; x0 < wo; ++x0) {
                double acc = b;
                const double* ip = row.data() + x0;
#pragma omp simd reduction(+ : acc)
                for (int t = 0; t < kw; ++t) acc += krow[t] * ip[t];
                orow[x0] = acc;
            }
        }
    }
}

void conv_row_backward(const double* in, int h, int w, const double* k, int cout,
                       int kw, Padding pad, const double* g_out, double* g_in,
                       double* g_k) {
    const int wo = conv_out_extent(w, kw, pad);
    const int pw = pad == Padding::Same ? pad_begin(kw) : 0;
    const int wp = w + (pad == Padding::Same ? kw - 1 : 0);

    if (g_k) {
#pragma omp parallel for schedule(static) if (parallel() && cout > 1)
        for (int co = 0; co < cout; ++co) {
            auto& row = tl_padrow;
            if (row.size() < static_cast<size_t>(wp)) row.resize(static_cast<size_t>(wp));
            std::vector<double> acc(static_cast<size_t>(kw), 0.0);
            for (int y = 0; y < h; ++y) {
                std::memset(row.data(), 0, sizeof(double) * static_cast<size_t>(wp));
                std::memcpy(row.data() + pw, in + static_cast<int64_t>(y) * w,
                            sizeof(double) * static_cast<size_t>(w));
                const double* gorow = g_out + (static_cast<int64_t>(co) * h + y) * wo;
                for (int x = 0; x < wo; ++x) {
                    const double g = gorow[x];
                    const double* ip = row.data() + x;
                    double* ap = acc.data();
#pragma omp simd
                    for (int t = 0; t < kw; ++t) ap[t] += g * ip[t];
                }
            }
            double* gk_row = g_k + static_cast<int64_t>(co) * kw;
            for (int t = 0; t < kw; ++t) gk_row[t] += acc[static_cast<size_t>(t)];
        }
    }

    if (g_in) {
        // rows are owned per y, channels accumulate serially inside
#pragma omp parallel for schedule(static) if (parallel() && h > 1)
        for (int y = 0; y < h; ++y) {
            std::vector<double> gp(static_cast<size_t>(wp), 0.0);
            for (int co = 0; co < cout; ++co) {
                const double* gorow = g_out + (static_cast<int64_t>(co) * h + y) * wo;
                const double* krow = k + static_cast<int64_t>(co) * kw;
                for (int t = 0; t < kw; ++t) {
                    const double kv = krow[t];
                    double* dst = gp.data() + t;
#pragma omp simd
                    for (int x = 0; x < wo; ++x) dst[x] += kv * gorow[x];
                }
            }
            double* grow = g_in + static_cast<int64_t>(y) * w;
            for (int i = 0; i < w; ++i) grow[i] += gp[static_cast<size_t>(pw + i)];
        }
    }
}

// 1x1 kernels: a channel-mixing matrix applied pointwise
void conv_1x1_forward(const double* in, int cin, int64_t plane, const double* k,
                      int cout, const double* bias, double* out) {
#pragma omp parallel for schedule(static) if (parallel() && cout > 15)
    for (int co = 0; co < cout; ++co) {
        double* orow = out + co * plane;
        for (int64_t i = 0; i < plane; ++i) orow[i] = bias ? bias[co] : 0.0;
        for (int ci = 0; ci < cin; ++ci) {
            const double kv = k[static_cast<int64_t>(co) * cin + ci];
            const double* irow = in + ci * plane;
#pragma omp simd
            for (int64_t i = 0; i < plane; ++i) orow[i] += kv * irow[i];
        }
    }
}

void conv_1x1_backward(const double* in, int cin, int64_t plane, const double* k,
                       int cout, const double* g_out, double* g_in, double* g_k) {
    if (g_k) {
        for (int co = 0; co < cout; ++co) {
            const double* gorow = g_out + co * plane;
            for (int ci = 0; ci < cin; ++ci) {
                const double* irow = in + ci * plane;
                double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                for (int64_t i = 0; i < plane; ++i) acc += gorow[i] * irow[i];
                g_k[static_cast<int64_t>(co) * cin + ci] += acc;
            }
        }
    }
    if (g_in) {
        for (int ci = 0; ci < cin; ++ci) {
            double* grow = g_in + ci * plane;
            for (int co = 0; co < cout; ++co) {
                const double kv = k[static_cast<int64_t>(co) * cin + ci];
                const double* gorow = g_out + co * plane;
#pragma omp simd
                for (int64_t i = 0; i < plane; ++i) grow[i] += kv * gorow[i];
            }
        }
    }
}

}  // namespace

void conv2d_forward(const double* in, int cin, int h, int w,
                    const double* k, int cout, int kh, int kw,
                    const double* bias, Padding pad, double* out) {
    if (cin == 1 && kh == 1) {
        conv_row_forward(in, h, w, k, cout, kw, bias, pad, out);
        return;
    }
    if (kh == 1 && kw == 1) {
        conv_1x1_forward(in, cin, static_cast<int64_t>(h) * w, k, cout, bias, out);
        return;
    }
    const int ho = conv_out_extent(h, kh, pad);
    const int wo = conv_out_extent(w, kw, pad);
    const int ph = pad == Padding::Same ? pad_begin(kh) : 0;
    const int pw = pad == Padding::Same ? pad_begin(kw) : 0;
    const int64_t npos = static_cast<int64_t>(ho) * wo;
    const int j_count = cin * kh * kw;

    auto& cols = tl_scratch.cols;
    if (cols.size() < static_cast<size_t>(npos * j_count))
        cols.resize(static_cast<size_t>(npos * j_count));
    im2col(in, cin, h, w, kh, kw, ph, pw, ho, wo, cols.data());

#pragma omp parallel for schedule(static) if (parallel() && npos > 256)
    for (int64_t pos = 0; pos < npos; ++pos) {
        const double* row = cols.data() + pos * j_count;
        for (int co = 0; co < cout; ++co) {
            const double* krow = k + static_cast<int64_t>(co) * j_count;
            double acc = 0.0;
#pragma omp simd reduction(+ : acc)
            for (int j = 0; j < j_count; ++j) acc += krow[j] * row[j];
            out[co * npos + pos] = acc + (bias ? bias[co] : 0.0);
        }
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
    const int64_t npos = static_cast<int64_t>(ho) * wo;
    const int j_count = cin * kh * kw;

    if (g_bias) {
#pragma omp parallel for schedule(static) if (parallel() && cout > 15)
        for (int co = 0; co < cout; ++co) {
            const double* g = g_out + co * npos;
            double acc = 0.0;
#pragma omp simd reduction(+ : acc)
            for (int64_t i = 0; i < npos; ++i) acc += g[i];
            g_bias[co] += acc;
        }
    }
    if (cin == 1 && kh == 1) {
        conv_row_backward(in, h, w, k, cout, kw, pad, g_out, g_in, g_k);
        return;
    }
    if (kh == 1 && kw == 1) {
        conv_1x1_backward(in, cin, static_cast<int64_t>(h) * w, k, cout, g_out, g_in, g_k);
        return;
    }

    if (g_k || g_in) {
        auto& cols = tl_scratch.cols;
        if (cols.size() < static_cast<size_t>(npos * j_count))
            cols.resize(static_cast<size_t>(npos * j_count));
        im2col(in, cin, h, w, kh, kw, ph, pw, ho, wo, cols.data());

        if (g_k) {
#pragma omp parallel for schedule(static) if (parallel() && cout > 15)
            for (int co = 0; co < cout; ++co) {
                double* gk_row = g_k + static_cast<int64_t>(co) * j_count;
                const double* g = g_out + co * npos;
                for (int64_t pos = 0; pos < npos; ++pos) {
                    const double gv = g[pos];
                    const double* row = cols.data() + pos * j_count;
#pragma omp simd
                    for (int j = 0; j < j_count; ++j) gk_row[j] += gv * row[j];
                }
            }
        }

        if (g_in) {
            auto& g_cols = tl_scratch.g_cols;
            if (g_cols.size() < static_cast<size_t>(npos * j_count))
                g_cols.resize(static_cast<size_t>(npos * j_count));
            std::memset(g_cols.data(), 0, sizeof(double) * static_cast<size_t>(npos * j_count));
            for (int co = 0; co < cout; ++co) {
                const double* g = g_out + co * npos;
                const double* krow = k + static_cast<int64_t>(co) * j_count;
                for (int64_t pos = 0; pos < npos; ++pos) {
                    const double gv = g[pos];
                    double* row = g_cols.data() + pos * j_count;
#pragma omp simd
                    for (int j = 0; j < j_count; ++j) row[j] += gv * krow[j];
                }
            }
            // col2im scatter; overlapping taps accumulate in fixed order
            for (int64_t pos = 0; pos < npos; ++pos) {
                const int y = static_cast<int>(pos / wo);
                const int x = static_cast<int>(pos % wo);
                const double* row = g_cols.data() + pos * j_count;
                int j = 0;
                for (int ci = 0; ci < cin; ++ci) {
                    double* ch = g_in + static_cast<int64_t>(ci) * h * w;
                    for (int r = 0; r < kh; ++r) {
                        const int iy = y + r - ph;
                        if (iy < 0 || iy >= h) {
                            j += kw;
                            continue;
                        }
                        double* irow = ch + static_cast<int64_t>(iy) * w;
                        for (int t = 0; t < kw; ++t, ++j) {
                            const int ix = x + t - pw;
                            if (ix >= 0 && ix < w) irow[ix] += row[j];
                        }
                    }
                }
            }
        }
    }
}

void depthwise_forward(const double* in, int c, int h, int w,
                       const double* k, int kh, int kw, Padding pad, double* out) {
    const int ho = conv_out_extent(h, kh, pad);
    const int wo = conv_out_extent(w, kw, pad);
    const int ph = pad == Padding::Same ? pad_begin(kh) : 0;
    const int pw = pad == Padding::Same ? pad_begin(kw) : 0;
    const int64_t in_ch = static_cast<int64_t>(h) * w;
    const int64_t out_ch = static_cast<int64_t>(ho) * wo;

#pragma omp parallel for schedule(static) if (parallel() && c > 1)
    for (int ci = 0; ci < c; ++ci) {
        const double* kbase = k + static_cast<int64_t>(ci) * kh * kw;
        for (int y = 0; y < ho; ++y) {
            double* orow = out + ci * out_ch + static_cast<int64_t>(y) * wo;
            std::memset(orow, 0, sizeof(double) * static_cast<size_t>(wo));
            for (int r = 0; r < kh; ++r) {
                const int iy = y + r - ph;
                if (iy < 0 || iy >= h) continue;
                const double* irow = in + ci * in_ch + static_cast<int64_t>(iy) * w;
                for (int t = 0; t < kw; ++t) {
                    const double kv = kbase[static_cast<int64_t>(r) * kw + t];
                    const int shift = t - pw;
                    int x0 = shift < 0 ? -shift : 0;
                    int x1 = shift > w - wo ? w - shift : wo;
                    if (x1 < x0) continue;
                    const double* ip = irow + x0 + shift;
                    double* op = orow + x0;
                    const int len = x1 - x0;
#pragma omp simd
                    for (int x = 0; x < len; ++x) op[x] += kv * ip[x];
                }
            }
        }
    }
}

void depthwise_backward(const double* in, int c, int h, int w,
                        const double* k, int kh, int kw, Padding pad,
                        const double* g_out, double* g_in, double* g_k) {
    const int ho = conv_out_extent(h, kh, pad);
    const int wo = conv_out_extent(w, kw, pad);
    const int ph = pad == Padding::Same ? pad_begin(kh) : 0;
    const int pw = pad == Padding::Same ? pad_begin(kw) : 0;
    const int64_t in_ch = static_cast<int64_t>(h) * w;
    const int64_t out_ch = static_cast<int64_t>(ho) * wo;

#pragma omp parallel for schedule(static) if (parallel() && c > 1)
    for (int ci = 0; ci < c; ++ci) {
        const double* kbase = k + static_cast<int64_t>(ci) * kh * kw;
        if (g_k) {
            double* gkbase = g_k + static_cast<int64_t>(ci) * kh * kw;
            for (int r = 0; r < kh; ++r) {
                for (int t = 0; t < kw; ++t) {
                    double acc = 0.0;
                    for (int y = 0; y < ho; ++y) {
                        const int iy = y + r - ph;
                        if (iy < 0 || iy >= h) continue;
                        const int shift = t - pw;
                        int x0 = shift < 0 ? -shift : 0;
                        int x1 = shift > w - wo ? w - shift : wo;
                        if (x1 < x0) continue;
                        const double* ip =
                            in + ci * in_ch + static_cast<int64_t>(iy) * w + x0 + shift;
                        const double* gp =
                            g_out + ci * out_ch + static_cast<int64_t>(y) * wo + x0;
                        const int len = x1 - x0;
                        double row = 0.0;
#pragma omp simd reduction(+ : row)
                        for (int x = 0; x < len; ++x) row += gp[x] * ip[x];
                        acc += row;
                    }
                    gkbase[static_cast<int64_t>(r) * kw + t] += acc;
                }
            }
        }
        if (g_in)
            for (int iy = 0; iy < h; ++iy) {
                double* grow = g_in + ci * in_ch + static_cast<int64_t>(iy) * w;
                for (int r = 0; r < kh; ++r) {
                    const int y = iy - r + ph;
                    if (y < 0 || y >= ho) continue;
                    const double* gorow = g_out + ci * out_ch + static_cast<int64_t>(y) * wo;
                    for (int t = 0; t < kw; ++t) {
                        const double kv = kbase[static_cast<int64_t>(r) * kw + t];
                        const int shift = t - pw;
                        int x0 = shift < 0 ? -shift : 0;
                        int x1 = shift > w - wo ? w - shift : wo;
                        if (x1 < x0) continue;
                        double* gip = grow + x0 + shift;
                        const double* gop = gorow + x0;
                        const int len = x1 - x0;
#pragma omp simd
                        for (int x = 0; x < len; ++x) gip[x] += kv * gop[x];
                    }
                }
            }
    }
}

void avgpool2x2_forward(const double* in, int c, int h, int w, double* out) {
    const int ho = (h + 1) / 2;
    const int wo = (w + 1) / 2;
    const int64_t in_ch = static_cast<int64_t>(h) * w;
    const int64_t out_ch = static_cast<int64_t>(ho) * wo;
#pragma omp parallel for schedule(static) if (parallel() && c > 8)
    for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y < ho; ++y) {
            for (int x = 0; x < wo; ++x) {
                double sum = 0.0;
                int cnt = 0;
                for (int r = 0; r < 2; ++r) {
                    const int iy = 2 * y + r;
                    if (iy >= h) continue;
                    for (int t = 0; t < 2; ++t) {
                        const int ix = 2 * x + t;
                        if (ix >= w) continue;
                        sum += in[ci * in_ch + static_cast<int64_t>(iy) * w + ix];
                        ++cnt;
                    }
                }
                out[ci * out_ch + static_cast<int64_t>(y) * wo + x] = sum / cnt;
            }
        }
    }
}

void avgpool2x2_backward(int c, int h, int w, const double* g_out, double* g_in) {
    const int ho = (h + 1) / 2;
    const int wo = (w + 1) / 2;
    const int64_t in_ch = static_cast<int64_t>(h) * w;
    const int64_t out_ch = static_cast<int64_t>(ho) * wo;
#pragma omp parallel for schedule(static) if (parallel() && c > 8)
    for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y < ho; ++y) {
            for (int x = 0; x < wo; ++x) {
                const int rs = (2 * y + 1 < h) ? 2 : 1;
                const int ts = (2 * x + 1 < w) ? 2 : 1;
                const double g = g_out[ci * out_ch + static_cast<int64_t>(y) * wo + x] / (rs * ts);
                for (int r = 0; r < rs; ++r)
                    for (int t = 0; t < ts; ++t)
                        g_in[ci * in_ch + static_cast<int64_t>(2 * y + r) * w + (2 * x + t)] += g;
            }
        }
    }
}

void linear_forward(const double* x, int n, const double* w, int m,
                    const double* b, double* y) {
#pragma omp parallel for schedule(static) if (parallel() && m > 63)
    for (int i = 0; i < m; ++i) {
        const double* row = w + static_cast<int64_t>(i) * n;
        double acc = 0.0;
#pragma omp simd reduction(+ : acc)
        for (int j = 0; j < n; ++j) acc += row[j] * x[j];
        y[i] = acc + (b ? b[i] : 0.0);
    }
}

void linear_backward(const double* x, int n, const double* w, int m,
                     const double* g_y, double* g_x, double* g_w, double* g_b) {
    if (g_b) {
        for (int i = 0; i < m; ++i) g_b[i] += g_y[i];
    }
    if (g_w) {
#pragma omp parallel for schedule(static) if (parallel() && m > 63)
        for (int i = 0; i < m; ++i) {
            const double g = g_y[i];
            double* row = g_w + static_cast<int64_t>(i) * n;
#pragma omp simd
            for (int j = 0; j < n; ++j) row[j] += g * x[j];
        }
    }
    if (g_x) {
        // column reduction as fixed-order row axpys
        for (int i = 0; i < m; ++i) {
            const double g = g_y[i];
            const double* row = w + static_cast<int64_t>(i) * n;
#pragma omp simd
            for (int j = 0; j < n; ++j) g_x[j] += g * row[j];
        }
    }
}

}  // namespace eegrl::kernels
