#pragma once

#include <array>
#include <string>
#include <vector>

#include "eegrl/autodiff.hpp"
#include "eegrl/preproc.hpp"
#include "eegrl/rng.hpp"

namespace eegrl {

enum class Variant { Supervised, Dqn, Double, Dueling };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);
bool is_rl_variant(Variant v);

struct NetworkConfig {
    Variant variant = Variant::Dueling;
    int n_actions = 16;
    int channels = 30;
    int samples_per_subsecond = 128;
    int conv_filters = 32;
    int lstm_channels = 32;
    int hidden = 512;
    double head_weight_decay = 1e-4;  // L2 on the 512-unit linear weights
    double depthwise_max_norm = 1.0;

    int feature_width() const { return ((samples_per_subsecond + 1) / 2 + 1) / 2; }
    int feature_size() const { return lstm_channels * feature_width(); }
};

// Per-thread gradient accumulators aligned with QNetwork::params() order.
struct GradSinks {
    std::vector<Tensor> grads;
    void zero() {
        for (Tensor& g : grads) g.fill(0.0);
    }
};

// The shared-CNN + conv-LSTM backbone with one head per variant.
// One sub-second plane chain:
//   conv2d(filters,(1,64),same) -> depthwise((channels,1),valid,tanh)
//   -> avgpool(2,2) -> separable((1,16),same,tanh) -> avgpool(2,2)
// then three conv-LSTM steps over the sub-second features; the final hidden
// state flattens into the head input.
class QNetwork {
  public:
    explicit QNetwork(NetworkConfig cfg);

    void init(Rng& rng);

    const NetworkConfig& config() const { return cfg_; }

    std::vector<Parameter*> params();
    std::vector<const Parameter*> params() const;
    GradSinks make_sinks() const;

    Node* features(Tape& t, const std::array<Tensor, 3>& planes,
                   GradSinks* sinks = nullptr);
    // single-stream head; requires dqn or double
    Node* q_values(Tape& t, Node* features, GradSinks* sinks = nullptr);
    // value/advantage streams, Q = V + (A - mean A); requires dueling
    Node* dueling_q_values(Tape& t, Node* features, GradSinks* sinks = nullptr);
    // dispatches on the RL variant
    Node* action_values(Tape& t, Node* features, GradSinks* sinks = nullptr);
    // supervised head, unclipped
    Node* predict_raw(Tape& t, Node* features, GradSinks* sinks = nullptr);

    // no-grad conveniences
    std::vector<double> q_of(const std::array<Tensor, 3>& planes) const;
    double predict_rt(const std::array<Tensor, 3>& planes) const;  // clipped to [0.5, 8]

    // deep parameter copy from a same-config network (target sync)
    void sync_from(const QNetwork& online);

    int64_t parameter_count() const;

  private:
    friend QNetwork load_network(const std::string& prefix);
    Node* head_pair(Tape& t, Node* in, int fc1_idx, GradSinks* sinks);
    Node* leaf(Tape& t, int idx, GradSinks* sinks);

    NetworkConfig cfg_;
    std::vector<Parameter> store_;
    // indices into store_
    int conv1_, dw_, sep_d_, sep_p_, lstm_k_, lstm_b_;
    int fc1_w_ = -1, fc1_b_ = -1, out_w_ = -1, out_b_ = -1;
    int vfc1_w_ = -1, vfc1_b_ = -1, vout_w_ = -1, vout_b_ = -1;
    int afc1_w_ = -1, afc1_b_ = -1, aout_w_ = -1, aout_b_ = -1;
};

// Checkpoint round trip via the manifest + f64 blob format; the manifest
// records the variant and layout so the network can be rebuilt.
void save_network(const QNetwork& net, const std::string& prefix);
QNetwork load_network(const std::string& prefix);

}  // namespace eegrl
