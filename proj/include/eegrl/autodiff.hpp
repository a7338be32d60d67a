#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "eegrl/kernels.hpp"
#include "eegrl/tensor.hpp"

namespace eegrl {

using kernels::Padding;

// Named trainable tensor. max_norm, when positive, caps the L2 norm of every
// dim-0 slice after an optimizer step; weight_decay is a plain L2 coefficient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    double max_norm = 0.0;
    double weight_decay = 0.0;

    Parameter() = default;
    Parameter(std::string n, Tensor v, double mn = 0.0, double wd = 0.0)
        : name(std::move(n)), value(std::move(v)), grad(value.shape, 0.0),
          max_norm(mn), weight_decay(wd) {}

    void zero_grad() { grad.fill(0.0); }
    int filter_count() const { return value.shape.empty() ? 1 : value.shape[0]; }
};

struct Node {
    Tensor owned;                 // op outputs; empty for external leaves
    const Tensor* val = nullptr;  // &owned or an external tensor
    Tensor grad;                  // allocated on demand unless grad_sink set
    Tensor* grad_sink = nullptr;  // shared accumulator (parameter leaves)
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::vector<Node*> inputs;
    std::function<void(Node&)> backprop;

    const Tensor& v() const { return *val; }
    Tensor& g() { return grad_sink ? *grad_sink : grad; }
    bool grad_live() const {
        return grad_sink ? true : grad.size() == v().size();
    }
    void ensure_grad() {
        if (!grad_sink && grad.size() != v().size()) grad = Tensor(v().shape, 0.0);
    }
};

// Reverse-mode tape. Nodes are created in topological order; backward walks
// them in reverse. With grad disabled the same builders run forward only.
class Tape {
  public:
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    bool grad_enabled() const { return grad_enabled_; }

    // Leaves. external leaves reference caller-owned tensors that must
    // outlive the tape; param leaves can route gradients to a sink buffer.
    Node* external(const Tensor& t, bool requires_grad = false);
    Node* value(Tensor t, bool requires_grad = false);
    Node* param(Parameter& p, Tensor* grad_sink = nullptr);

    Node* conv2d(Node* in, Node* kernels, Node* bias, Padding pad);
    Node* depthwise(Node* in, Node* kernels, Padding pad);
    Node* avgpool2x2(Node* in);
    Node* linear(Node* in, Node* weights, Node* bias);
    Node* tanh_(Node* in);
    Node* sigmoid_(Node* in);
    Node* add(Node* a, Node* b);
    Node* mul(Node* a, Node* b);
    Node* concat_ch(Node* a, Node* b);
    Node* slice_ch(Node* in, int c0, int c1);
    Node* flatten(Node* in);
    Node* pick(Node* in, int index);
    Node* mean_all(Node* in);
    // vec op broadcast scalar node ([1])
    Node* add_scalar(Node* vec, Node* scalar);
    Node* sub_scalar(Node* vec, Node* scalar);
    // mean((pred - target)^2); target is constant, gradient flows to pred only
    Node* squared_error(Node* pred, const Tensor& target);

    void backward(Node* scalar_output, double seed = 1.0);

    const std::vector<Node*>& param_leaves() const { return param_leaves_; }

    // Accumulate every parameter leaf's gradient into Parameter::grad.
    // No-op for leaves with a grad sink (those already accumulate in place).
    void merge_param_grads(double scale = 1.0);

  private:
    Node* make(Tensor value, std::vector<Node*> inputs);
    void book_param(Node* n);

    std::deque<Node> nodes_;
    std::vector<Node*> order_;
    std::vector<Node*> param_leaves_;
    bool grad_enabled_;
};

// One conv-LSTM step. Gate pre-activations come from a SAME-padded
// convolution over [x; h] producing 4*Ch channels ordered
// (input, forget, output, candidate). i,f,o are logistic, candidate is tanh.
struct LstmState {
    Node* h;
    Node* c;
};
LstmState conv_lstm_step(Tape& t, Node* x, LstmState prev, Node* gate_kernels,
                         Node* gate_bias);

// Depthwise convolution followed by tanh (valid padding in the backbone).
Node* depthwise_conv2d(Tape& t, Node* in, Node* kernels, Padding pad);
// Depthwise (same padding, no activation) then 1x1 pointwise, then tanh.
Node* separable_conv2d(Tape& t, Node* in, Node* depth_kernels, Node* point_kernels);

}  // namespace eegrl
