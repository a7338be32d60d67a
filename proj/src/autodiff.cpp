#include "eegrl/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace eegrl {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Node* Tape::make(Tensor value, std::vector<Node*> inputs) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.owned = std::move(value);
    n.val = &n.owned;
    n.inputs = std::move(inputs);
    if (grad_enabled_) {
        for (Node* in : n.inputs)
            if (in && in->requires_grad) { n.requires_grad = true; break; }
    }
    order_.push_back(&n);
    return &n;
}

Node* Tape::external(const Tensor& t, bool requires_grad) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.val = &t;
    n.requires_grad = grad_enabled_ && requires_grad;
    order_.push_back(&n);
    return &n;
}

Node* Tape::value(Tensor t, bool requires_grad) {
    Node* n = make(std::move(t), {});
    n->requires_grad = grad_enabled_ && requires_grad;
    return n;
}

Node* Tape::param(Parameter& p, Tensor* grad_sink) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.val = &p.value;
    n.param = &p;
    n.requires_grad = grad_enabled_;
    if (grad_enabled_) n.grad_sink = grad_sink;
    order_.push_back(&n);
    param_leaves_.push_back(&n);
    return &n;
}

Node* Tape::conv2d(Node* in, Node* kernels, Node* bias, Padding pad) {
    const Tensor& x = in->v();
    const Tensor& k = kernels->v();
    require(x.ndim() == 3, "conv2d: input must be [C,H,W]");
    require(k.ndim() == 4, "conv2d: kernels must be [Cout,Cin,kh,kw]");
    require(k.dim(1) == x.dim(0),
            "conv2d: kernel Cin " + std::to_string(k.dim(1)) +
                " does not match input channels " + std::to_string(x.dim(0)));
    const int cin = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int cout = k.dim(0), kh = k.dim(2), kw = k.dim(3);
    if (pad == Padding::Valid)
        require(kh <= h && kw <= w, "conv2d: kernel larger than input under valid padding");
    if (bias) require(bias->v().size() == cout, "conv2d: bias extent mismatch");

    const int ho = kernels::conv_out_extent(h, kh, pad);
    const int wo = kernels::conv_out_extent(w, kw, pad);
    Tensor out({cout, ho, wo});
    kernels::conv2d_forward(x.ptr(), cin, h, w, k.ptr(), cout, kh, kw,
                            bias ? bias->v().ptr() : nullptr, pad, out.ptr());
    Node* n = make(std::move(out), bias ? std::vector<Node*>{in, kernels, bias}
                                        : std::vector<Node*>{in, kernels});
    if (n->requires_grad) {
        n->backprop = [cin, h, w, cout, kh, kw, pad, in, kernels, bias](Node& self) {
            const double* gout = self.g().ptr();
            double* gi = nullptr;
            double* gk = nullptr;
            double* gb = nullptr;
            if (in->requires_grad) { in->ensure_grad(); gi = in->g().ptr(); }
            if (kernels->requires_grad) { kernels->ensure_grad(); gk = kernels->g().ptr(); }
            if (bias && bias->requires_grad) { bias->ensure_grad(); gb = bias->g().ptr(); }
            if (!gi && !gk && !gb) return;
            kernels::conv2d_backward(in->v().ptr(), cin, h, w, kernels->v().ptr(),
                                     cout, kh, kw, pad, gout, gi, gk, gb);
        };
    }
    return n;
}

Node* Tape::depthwise(Node* in, Node* kernels_n, Padding pad) {
    const Tensor& x = in->v();
    const Tensor& k = kernels_n->v();
    require(x.ndim() == 3, "depthwise: input must be [C,H,W]");
    require(k.ndim() == 3, "depthwise: kernels must be [C,kh,kw]");
    require(k.dim(0) == x.dim(0),
            "depthwise: kernel channels " + std::to_string(k.dim(0)) +
                " do not match input channels " + std::to_string(x.dim(0)));
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int kh = k.dim(1), kw = k.dim(2);
    if (pad == Padding::Valid)
        require(kh <= h && kw <= w, "depthwise: kernel larger than input under valid padding");

    const int ho = kernels::conv_out_extent(h, kh, pad);
    const int wo = kernels::conv_out_extent(w, kw, pad);
    Tensor out({c, ho, wo});
    kernels::depthwise_forward(x.ptr(), c, h, w, k.ptr(), kh, kw, pad, out.ptr());
    Node* n = make(std::move(out), {in, kernels_n});
    if (n->requires_grad) {
        n->backprop = [c, h, w, kh, kw, pad, in, kernels_n](Node& self) {
            double* gi = nullptr;
            double* gk = nullptr;
            if (in->requires_grad) { in->ensure_grad(); gi = in->g().ptr(); }
            if (kernels_n->requires_grad) { kernels_n->ensure_grad(); gk = kernels_n->g().ptr(); }
            if (!gi && !gk) return;
            kernels::depthwise_backward(in->v().ptr(), c, h, w, kernels_n->v().ptr(),
                                        kh, kw, pad, self.g().ptr(), gi, gk);
        };
    }
    return n;
}

Node* Tape::avgpool2x2(Node* in) {
    const Tensor& x = in->v();
    require(x.ndim() == 3, "avgpool2x2: input must be [C,H,W]");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, (h + 1) / 2, (w + 1) / 2});
    kernels::avgpool2x2_forward(x.ptr(), c, h, w, out.ptr());
    Node* n = make(std::move(out), {in});
    if (n->requires_grad) {
        n->backprop = [c, h, w, in](Node& self) {
            if (!in->requires_grad) return;
            in->ensure_grad();
            kernels::avgpool2x2_backward(c, h, w, self.g().ptr(), in->g().ptr());
        };
    }
    return n;
}

Node* Tape::linear(Node* in, Node* weights, Node* bias) {
    const Tensor& x = in->v();
    const Tensor& w = weights->v();
    require(x.ndim() == 1, "linear: input must be a vector");
    require(w.ndim() == 2, "linear: weights must be [m,n]");
    require(w.dim(1) == x.dim(0),
            "linear: weight columns " + std::to_string(w.dim(1)) +
                " do not match input extent " + std::to_string(x.dim(0)));
    const int n_in = x.dim(0), m = w.dim(0);
    if (bias) require(bias->v().size() == m, "linear: bias extent mismatch");

    Tensor out({m});
    kernels::linear_forward(x.ptr(), n_in, w.ptr(), m,
                            bias ? bias->v().ptr() : nullptr, out.ptr());
    Node* n = make(std::move(out), bias ? std::vector<Node*>{in, weights, bias}
                                        : std::vector<Node*>{in, weights});
    if (n->requires_grad) {
        n->backprop = [n_in, m, in, weights, bias](Node& self) {
            double* gx = nullptr;
            double* gw = nullptr;
            double* gb = nullptr;
            if (in->requires_grad) { in->ensure_grad(); gx = in->g().ptr(); }
            if (weights->requires_grad) { weights->ensure_grad(); gw = weights->g().ptr(); }
            if (bias && bias->requires_grad) { bias->ensure_grad(); gb = bias->g().ptr(); }
            kernels::linear_backward(in->v().ptr(), n_in, weights->v().ptr(), m,
                                     self.g().ptr(), gx, gw, gb);
        };
    }
    return n;
}

Node* Tape::tanh_(Node* in) {
    Tensor out(in->v().shape);
    const int64_t n_el = out.size();
    const double* x = in->v().ptr();
    for (int64_t i = 0; i < n_el; ++i) out[i] = std::tanh(x[i]);
    Node* n = make(std::move(out), {in});
    if (n->requires_grad) {
        n->backprop = [in](Node& self) {
            if (!in->requires_grad) return;
            in->ensure_grad();
            const double* y = self.v().ptr();
            const double* g = self.g().ptr();
            double* gi = in->g().ptr();
            const int64_t m = self.v().size();
            for (int64_t i = 0; i < m; ++i) gi[i] += g[i] * (1.0 - y[i] * y[i]);
        };
    }
    return n;
}

Node* Tape::sigmoid_(Node* in) {
    Tensor out(in->v().shape);
    const int64_t n_el = out.size();
    const double* x = in->v().ptr();
    for (int64_t i = 0; i < n_el; ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
    Node* n = make(std::move(out), {in});
    if (n->requires_grad) {
        n->backprop = [in](Node& self) {
            if (!in->requires_grad) return;
            in->ensure_grad();
            const double* y = self.v().ptr();
            const double* g = self.g().ptr();
            double* gi = in->g().ptr();
            const int64_t m = self.v().size();
            for (int64_t i = 0; i < m; ++i) gi[i] += g[i] * y[i] * (1.0 - y[i]);
        };
    }
    return n;
}

Node* Tape::add(Node* a, Node* b) {
    require(a->v().same_shape(b->v()), "add: shape mismatch");
    Tensor out(a->v().shape);
    const int64_t n_el = out.size();
    for (int64_t i = 0; i < n_el; ++i) out[i] = a->v()[i] + b->v()[i];
    Node* n = make(std::move(out), {a, b});
    if (n->requires_grad) {
        n->backprop = [a, b](Node& self) {
            const double* g = self.g().ptr();
            const int64_t m = self.v().size();
            for (Node* t : {a, b}) {
                if (!t->requires_grad) continue;
                t->ensure_grad();
                double* gt = t->g().ptr();
                for (int64_t i = 0; i < m; ++i) gt[i] += g[i];
            }
        };
    }
    return n;
}

Node* Tape::mul(Node* a, Node* b) {
    require(a->v().same_shape(b->v()), "mul: shape mismatch");
    Tensor out(a->v().shape);
    const int64_t n_el = out.size();
    for (int64_t i = 0; i < n_el; ++i) out[i] = a->v()[i] * b->v()[i];
    Node* n = make(std::move(out), {a, b});
    if (n->requires_grad) {
        n->backprop = [a, b](Node& self) {
            const double* g = self.g().ptr();
            const int64_t m = self.v().size();
            if (a->requires_grad) {
                a->ensure_grad();
                double* ga = a->g().ptr();
                for (int64_t i = 0; i < m; ++i) ga[i] += g[i] * b->v()[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                double* gb = b->g().ptr();
                for (int64_t i = 0; i < m; ++i) gb[i] += g[i] * a->v()[i];
            }
        };
    }
    return n;
}

Node* Tape::concat_ch(Node* a, Node* b) {
    const Tensor& ta = a->v();
    const Tensor& tb = b->v();
    require(ta.ndim() == 3 && tb.ndim() == 3, "concat_ch: inputs must be [C,H,W]");
    require(ta.dim(1) == tb.dim(1) && ta.dim(2) == tb.dim(2), "concat_ch: plane mismatch");
    const int ca = ta.dim(0), cb = tb.dim(0), h = ta.dim(1), w = ta.dim(2);
    Tensor out({ca + cb, h, w});
    std::copy(ta.data.begin(), ta.data.end(), out.data.begin());
    std::copy(tb.data.begin(), tb.data.end(), out.data.begin() + ta.size());
    Node* n = make(std::move(out), {a, b});
    if (n->requires_grad) {
        n->backprop = [a, b](Node& self) {
            const double* g = self.g().ptr();
            const int64_t na = a->v().size();
            const int64_t nb = b->v().size();
            if (a->requires_grad) {
                a->ensure_grad();
                double* ga = a->g().ptr();
                for (int64_t i = 0; i < na; ++i) ga[i] += g[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                double* gb = b->g().ptr();
                for (int64_t i = 0; i < nb; ++i) gb[i] += g[na + i];
            }
        };
    }
    return n;
}

Node* Tape::slice_ch(Node* in, int c0, int c1) {
    const Tensor& x = in->v();
    require(x.ndim() == 3, "slice_ch: input must be [C,H,W]");
    require(0 <= c0 && c0 < c1 && c1 <= x.dim(0), "slice_ch: bad channel range");
    const int h = x.dim(1), w = x.dim(2);
    const int64_t plane = static_cast<int64_t>(h) * w;
    Tensor out({c1 - c0, h, w});
    std::copy(x.data.begin() + c0 * plane, x.data.begin() + c1 * plane, out.data.begin());
    Node* n = make(std::move(out), {in});
    if (n->requires_grad) {
        n->backprop = [in, c0, plane](Node& self) {
            if (!in->requires_grad) return;
            in->ensure_grad();
            const double* g = self.g().ptr();
            double* gi = in->g().ptr() + c0 * plane;
            const int64_t m = self.v().size();
            for (int64_t i = 0; i < m; ++i) gi[i] += g[i];
        };
    }
    return n;
}

Node* Tape::flatten(Node* in) {
    Tensor out({static_cast<int>(in->v().size())});
    out.data = in->v().data;
    Node* n = make(std::move(out), {in});
    if (n->requires_grad) {
        n->backprop = [in](Node& self) {
            if (!in->requires_grad) return;
            in->ensure_grad();
            const double* g = self.g().ptr();
            double* gi = in->g().ptr();
            const int64_t m = self.v().size();
            for (int64_t i = 0; i < m; ++i) gi[i] += g[i];
        };
    }
    return n;
}

Node* Tape::pick(Node* in, int index) {
    require(in->v().ndim() == 1, "pick: input must be a vector");
    require(0 <= index && index < in->v().dim(0), "pick: index out of range");
    Tensor out({1});
    out[0] = in->v()[index];
    Node* n = make(std::move(out), {in});
    if (n->requires_grad) {
        n->backprop = [in, index](Node& self) {
            if (!in->requires_grad) return;
            in->ensure_grad();
            in->g()[index] += self.g()[0];
        };
    }
    return n;
}

Node* Tape::mean_all(Node* in) {
    Tensor out({1});
    double acc = 0.0;
    const int64_t m = in->v().size();
    for (int64_t i = 0; i < m; ++i) acc += in->v()[i];
    out[0] = acc / static_cast<double>(m);
    Node* n = make(std::move(out), {in});
    if (n->requires_grad) {
        n->backprop = [in, m](Node& self) {
            if (!in->requires_grad) return;
            in->ensure_grad();
            const double g = self.g()[0] / static_cast<double>(m);
            double* gi = in->g().ptr();
            for (int64_t i = 0; i < m; ++i) gi[i] += g;
        };
    }
    return n;
}

Node* Tape::add_scalar(Node* vec, Node* scalar) {
    require(scalar->v().size() == 1, "add_scalar: scalar must have one element");
    Tensor out(vec->v().shape);
    const double s = scalar->v()[0];
    const int64_t m = out.size();
    for (int64_t i = 0; i < m; ++i) out[i] = vec->v()[i] + s;
    Node* n = make(std::move(out), {vec, scalar});
    if (n->requires_grad) {
        n->backprop = [vec, scalar](Node& self) {
            const double* g = self.g().ptr();
            const int64_t m2 = self.v().size();
            if (vec->requires_grad) {
                vec->ensure_grad();
                double* gv = vec->g().ptr();
                for (int64_t i = 0; i < m2; ++i) gv[i] += g[i];
            }
            if (scalar->requires_grad) {
                scalar->ensure_grad();
                double acc = 0.0;
                for (int64_t i = 0; i < m2; ++i) acc += g[i];
                scalar->g()[0] += acc;
            }
        };
    }
    return n;
}

Node* Tape::sub_scalar(Node* vec, Node* scalar) {
    require(scalar->v().size() == 1, "sub_scalar: scalar must have one element");
    Tensor out(vec->v().shape);
    const double s = scalar->v()[0];
    const int64_t m = out.size();
    for (int64_t i = 0; i < m; ++i) out[i] = vec->v()[i] - s;
    Node* n = make(std::move(out), {vec, scalar});
    if (n->requires_grad) {
        n->backprop = [vec, scalar](Node& self) {
            const double* g = self.g().ptr();
            const int64_t m2 = self.v().size();
            if (vec->requires_grad) {
                vec->ensure_grad();
                double* gv = vec->g().ptr();
                for (int64_t i = 0; i < m2; ++i) gv[i] += g[i];
            }
            if (scalar->requires_grad) {
                scalar->ensure_grad();
                double acc = 0.0;
                for (int64_t i = 0; i < m2; ++i) acc += g[i];
                scalar->g()[0] -= acc;
            }
        };
    }
    return n;
}

Node* Tape::squared_error(Node* pred, const Tensor& target) {
    require(pred->v().same_shape(target), "squared_error: shape mismatch");
    const int64_t m = target.size();
    double acc = 0.0;
    for (int64_t i = 0; i < m; ++i) {
        const double d = pred->v()[i] - target[i];
        acc += d * d;
    }
    Tensor out({1});
    out[0] = acc / static_cast<double>(m);
    Node* n = make(std::move(out), {pred});
    if (n->requires_grad) {
        n->backprop = [pred, tgt = target, m](Node& self) {
            if (!pred->requires_grad) return;
            pred->ensure_grad();
            const double g = self.g()[0] * 2.0 / static_cast<double>(m);
            double* gp = pred->g().ptr();
            for (int64_t i = 0; i < m; ++i) gp[i] += g * (pred->v()[i] - tgt[i]);
        };
    }
    return n;
}

void Tape::backward(Node* scalar_output, double seed) {
    if (!grad_enabled_) throw std::logic_error("Tape::backward: gradients disabled");
    if (scalar_output->v().size() != 1)
        throw std::invalid_argument("Tape::backward: output must be scalar");
    scalar_output->ensure_grad();
    scalar_output->g()[0] += seed;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        Node* n = *it;
        if (n == scalar_output) {
            if (n->backprop) n->backprop(*n);
            continue;
        }
        if (!n->requires_grad || !n->backprop) continue;
        if (!n->grad_live()) continue;  // not on the path to the output
        n->backprop(*n);
    }
}

void Tape::merge_param_grads(double scale) {
    for (Node* leaf : param_leaves_) {
        if (leaf->grad_sink) continue;
        if (leaf->grad.size() != leaf->v().size()) continue;  // untouched
        Parameter& p = *leaf->param;
        const int64_t m = leaf->grad.size();
        for (int64_t i = 0; i < m; ++i) p.grad[i] += scale * leaf->grad[i];
    }
}

LstmState conv_lstm_step(Tape& t, Node* x, LstmState prev, Node* gate_kernels,
                         Node* gate_bias) {
    const int ch = prev.h->v().dim(0);
    Node* z = t.concat_ch(x, prev.h);
    Node* gates = t.conv2d(z, gate_kernels, gate_bias, Padding::Same);
    if (gates->v().dim(0) != 4 * ch)
        throw std::invalid_argument("conv_lstm_step: gate kernels must produce 4*Ch channels");
    Node* i_gate = t.sigmoid_(t.slice_ch(gates, 0, ch));
    Node* f_gate = t.sigmoid_(t.slice_ch(gates, ch, 2 * ch));
    Node* o_gate = t.sigmoid_(t.slice_ch(gates, 2 * ch, 3 * ch));
    Node* g_cand = t.tanh_(t.slice_ch(gates, 3 * ch, 4 * ch));
    Node* c_next = t.add(t.mul(f_gate, prev.c), t.mul(i_gate, g_cand));
    Node* h_next = t.mul(o_gate, t.tanh_(c_next));
    return {h_next, c_next};
}

Node* depthwise_conv2d(Tape& t, Node* in, Node* kernels, Padding pad) {
    return t.tanh_(t.depthwise(in, kernels, pad));
}

Node* separable_conv2d(Tape& t, Node* in, Node* depth_kernels, Node* point_kernels) {
    Node* d = t.depthwise(in, depth_kernels, Padding::Same);
    Node* p = t.conv2d(d, point_kernels, nullptr, Padding::Same);
    return t.tanh_(p);
}

}  // namespace eegrl
