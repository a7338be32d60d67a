#include "eegrl/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eegrl/checkpoint.hpp"

namespace eegrl {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Supervised: return "supervised";
        case Variant::Dqn: return "dqn";
        case Variant::Double: return "double";
        case Variant::Dueling: return "dueling";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "supervised") return Variant::Supervised;
    if (name == "dqn") return Variant::Dqn;
    if (name == "double") return Variant::Double;
    if (name == "dueling") return Variant::Dueling;
    throw std::invalid_argument("unknown network variant: " + name);
}

bool is_rl_variant(Variant v) { return v != Variant::Supervised; }

QNetwork::QNetwork(NetworkConfig cfg) : cfg_(cfg) {
    if (cfg_.n_actions < 1) throw std::invalid_argument("QNetwork: n_actions must be positive");
    const int f = cfg_.conv_filters;
    const int ch = cfg_.lstm_channels;
    const int feat = cfg_.feature_size();

    auto add = [this](const std::string& name, std::vector<int> shape, double mn = 0.0,
                      double wd = 0.0) {
        store_.emplace_back(name, Tensor(std::move(shape)), mn, wd);
        return static_cast<int>(store_.size()) - 1;
    };

    conv1_ = add("conv1.kernel", {f, 1, 1, 64});
    dw_ = add("depthwise.kernel", {f, cfg_.channels, 1}, cfg_.depthwise_max_norm);
    sep_d_ = add("separable.depth", {f, 1, 16});
    sep_p_ = add("separable.point", {f, f, 1, 1});
    lstm_k_ = add("lstm.gate_kernel", {4 * ch, f + ch, 1, 8});
    lstm_b_ = add("lstm.gate_bias", {4 * ch});

    const double wd = cfg_.head_weight_decay;
    switch (cfg_.variant) {
        case Variant::Supervised:
            fc1_w_ = add("head.fc1.weight", {cfg_.hidden, feat}, 0.0, wd);
            fc1_b_ = add("head.fc1.bias", {cfg_.hidden});
            out_w_ = add("head.out.weight", {1, cfg_.hidden});
            out_b_ = add("head.out.bias", {1});
            break;
        case Variant::Dqn:
        case Variant::Double:
            fc1_w_ = add("head.fc1.weight", {cfg_.hidden, feat}, 0.0, wd);
            fc1_b_ = add("head.fc1.bias", {cfg_.hidden});
            out_w_ = add("head.out.weight", {cfg_.n_actions, cfg_.hidden});
            out_b_ = add("head.out.bias", {cfg_.n_actions});
            break;
        case Variant::Dueling:
            vfc1_w_ = add("value.fc1.weight", {cfg_.hidden, feat}, 0.0, wd);
            vfc1_b_ = add("value.fc1.bias", {cfg_.hidden});
            vout_w_ = add("value.out.weight", {1, cfg_.hidden});
            vout_b_ = add("value.out.bias", {1});
            afc1_w_ = add("advantage.fc1.weight", {cfg_.hidden, feat}, 0.0, wd);
            afc1_b_ = add("advantage.fc1.bias", {cfg_.hidden});
            aout_w_ = add("advantage.out.weight", {cfg_.n_actions, cfg_.hidden});
            aout_b_ = add("advantage.out.bias", {cfg_.n_actions});
            break;
    }
}

namespace {

void glorot(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    const double lim = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t.data) v = rng.uniform(-lim, lim);
}

}  // namespace

void QNetwork::init(Rng& rng) {
    const int f = cfg_.conv_filters;
    const int ch = cfg_.lstm_channels;
    glorot(store_[conv1_].value, 64, f * 64, rng);
    glorot(store_[dw_].value, cfg_.channels, cfg_.channels, rng);
    glorot(store_[sep_d_].value, 16, 16, rng);
    glorot(store_[sep_p_].value, f, f, rng);
    glorot(store_[lstm_k_].value, (f + ch) * 8, 4 * ch * 8, rng);
    store_[lstm_b_].value.fill(0.0);
    // forget-gate bias starts open
    for (int c = ch; c < 2 * ch; ++c) store_[lstm_b_].value[c] = 1.0;

    auto init_head = [&](int w1, int b1, int w2, int b2) {
        if (w1 < 0) return;
        glorot(store_[w1].value, store_[w1].value.dim(1), store_[w1].value.dim(0), rng);
        store_[b1].value.fill(0.0);
        glorot(store_[w2].value, store_[w2].value.dim(1), store_[w2].value.dim(0), rng);
        store_[b2].value.fill(0.0);
    };
    init_head(fc1_w_, fc1_b_, out_w_, out_b_);
    init_head(vfc1_w_, vfc1_b_, vout_w_, vout_b_);
    init_head(afc1_w_, afc1_b_, aout_w_, aout_b_);
}

std::vector<Parameter*> QNetwork::params() {
    std::vector<Parameter*> out;
    out.reserve(store_.size());
    for (Parameter& p : store_) out.push_back(&p);
    return out;
}

std::vector<const Parameter*> QNetwork::params() const {
    std::vector<const Parameter*> out;
    out.reserve(store_.size());
    for (const Parameter& p : store_) out.push_back(&p);
    return out;
}

GradSinks QNetwork::make_sinks() const {
    GradSinks s;
    s.grads.reserve(store_.size());
    for (const Parameter& p : store_) s.grads.emplace_back(p.value.shape, 0.0);
    return s;
}

Node* QNetwork::leaf(Tape& t, int idx, GradSinks* sinks) {
    return t.param(store_[static_cast<size_t>(idx)],
                   sinks ? &sinks->grads[static_cast<size_t>(idx)] : nullptr);
}

Node* QNetwork::features(Tape& t, const std::array<Tensor, 3>& planes, GradSinks* sinks) {
    for (const Tensor& p : planes)
        if (p.ndim() != 3 || p.dim(0) != 1 || p.dim(1) != cfg_.channels ||
            p.dim(2) != cfg_.samples_per_subsecond)
            throw std::invalid_argument("QNetwork::features: plane shape " + shape_str(p.shape) +
                                        " does not match the configured input");

    // one parameter leaf per tensor, shared across the three sub-second passes
    Node* conv1 = leaf(t, conv1_, sinks);
    Node* dw = leaf(t, dw_, sinks);
    Node* sep_d = leaf(t, sep_d_, sinks);
    Node* sep_p = leaf(t, sep_p_, sinks);
    Node* lstm_k = leaf(t, lstm_k_, sinks);
    Node* lstm_b = leaf(t, lstm_b_, sinks);

    const int w4 = cfg_.feature_width();
    LstmState state{t.value(Tensor({cfg_.lstm_channels, 1, w4}, 0.0)),
                    t.value(Tensor({cfg_.lstm_channels, 1, w4}, 0.0))};
    for (int k = 0; k < 3; ++k) {
        Node* x = t.external(planes[static_cast<size_t>(k)]);
        x = t.conv2d(x, conv1, nullptr, Padding::Same);
        x = depthwise_conv2d(t, x, dw, Padding::Valid);
        x = t.avgpool2x2(x);
        x = separable_conv2d(t, x, sep_d, sep_p);
        x = t.avgpool2x2(x);
        state = conv_lstm_step(t, x, state, lstm_k, lstm_b);
    }
    return t.flatten(state.h);
}

Node* QNetwork::head_pair(Tape& t, Node* in, int fc1_idx, GradSinks* sinks) {
    // indices are laid out (w1,b1,w2,b2) consecutively for every head
    Node* h = t.linear(in, leaf(t, fc1_idx, sinks), leaf(t, fc1_idx + 1, sinks));
    return t.linear(h, leaf(t, fc1_idx + 2, sinks), leaf(t, fc1_idx + 3, sinks));
}

Node* QNetwork::q_values(Tape& t, Node* features, GradSinks* sinks) {
    if (cfg_.variant != Variant::Dqn && cfg_.variant != Variant::Double)
        throw std::logic_error("q_values: network variant is " + variant_name(cfg_.variant));
    return head_pair(t, features, fc1_w_, sinks);
}

Node* QNetwork::dueling_q_values(Tape& t, Node* features, GradSinks* sinks) {
    if (cfg_.variant != Variant::Dueling)
        throw std::logic_error("dueling_q_values: network variant is " +
                               variant_name(cfg_.variant));
    Node* v = head_pair(t, features, vfc1_w_, sinks);
    Node* a = head_pair(t, features, afc1_w_, sinks);
    Node* centred = t.sub_scalar(a, t.mean_all(a));
    return t.add_scalar(centred, v);
}

Node* QNetwork::action_values(Tape& t, Node* features, GradSinks* sinks) {
    if (cfg_.variant == Variant::Dueling) return dueling_q_values(t, features, sinks);
    return q_values(t, features, sinks);
}

Node* QNetwork::predict_raw(Tape& t, Node* features, GradSinks* sinks) {
    if (cfg_.variant != Variant::Supervised)
        throw std::logic_error("predict_raw: network variant is " + variant_name(cfg_.variant));
    return head_pair(t, features, fc1_w_, sinks);
}

std::vector<double> QNetwork::q_of(const std::array<Tensor, 3>& planes) const {
    Tape t(false);
    auto* self = const_cast<QNetwork*>(this);
    Node* q = self->action_values(t, self->features(t, planes));
    return q->v().data;
}

double QNetwork::predict_rt(const std::array<Tensor, 3>& planes) const {
    Tape t(false);
    auto* self = const_cast<QNetwork*>(this);
    Node* y = self->predict_raw(t, self->features(t, planes));
    return std::clamp(y->v()[0], 0.5, 8.0);
}

void QNetwork::sync_from(const QNetwork& online) {
    if (store_.size() != online.store_.size())
        throw std::invalid_argument("sync_from: variant/config mismatch");
    for (size_t i = 0; i < store_.size(); ++i) {
        if (!store_[i].value.same_shape(online.store_[i].value))
            throw std::invalid_argument("sync_from: shape mismatch for " + store_[i].name);
        store_[i].value.data = online.store_[i].value.data;
    }
}

int64_t QNetwork::parameter_count() const {
    int64_t n = 0;
    for (const Parameter& p : store_) n += p.value.size();
    return n;
}

void save_network(const QNetwork& net, const std::string& prefix) {
    const NetworkConfig& c = net.config();
    CheckpointMeta meta;
    meta.fields["variant"] = variant_name(c.variant);
    meta.fields["n_actions"] = std::to_string(c.n_actions);
    meta.fields["channels"] = std::to_string(c.channels);
    meta.fields["samples_per_subsecond"] = std::to_string(c.samples_per_subsecond);
    meta.fields["conv_filters"] = std::to_string(c.conv_filters);
    meta.fields["lstm_channels"] = std::to_string(c.lstm_channels);
    meta.fields["hidden"] = std::to_string(c.hidden);
    save_checkpoint(prefix, net.params(), meta);
}

QNetwork load_network(const std::string& prefix) {
    const LoadedCheckpoint ckpt = load_checkpoint(prefix);
    const auto field = [&](const std::string& key) -> std::string {
        auto it = ckpt.meta.fields.find(key);
        if (it == ckpt.meta.fields.end())
            throw std::runtime_error("checkpoint: manifest lacks meta field '" + key + "'");
        return it->second;
    };
    NetworkConfig cfg;
    cfg.variant = variant_from_name(field("variant"));
    cfg.n_actions = std::stoi(field("n_actions"));
    cfg.channels = std::stoi(field("channels"));
    cfg.samples_per_subsecond = std::stoi(field("samples_per_subsecond"));
    cfg.conv_filters = std::stoi(field("conv_filters"));
    cfg.lstm_channels = std::stoi(field("lstm_channels"));
    cfg.hidden = std::stoi(field("hidden"));

    QNetwork net(cfg);
    for (Parameter& p : net.store_) {
        const Tensor* v = ckpt.find(p.name);
        if (!v) throw std::runtime_error("checkpoint: missing parameter " + p.name);
        if (!v->same_shape(p.value))
            throw std::runtime_error("checkpoint: shape mismatch for " + p.name + ": stored " +
                                     shape_str(v->shape) + ", expected " +
                                     shape_str(p.value.shape));
        p.value = *v;
    }
    return net;
}

}  // namespace eegrl
