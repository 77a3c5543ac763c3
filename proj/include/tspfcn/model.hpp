#pragma once

/// @file model.hpp
/// @brief Scaled VGG-style fully convolutional network with three skip heads.
///
/// Layout (S = input size, C = channel schedule):
///
///     block b (b = 0..4): convs_per_block[b] x [3x3 conv -> ReLU], then 2x2 max-pool
///     head:  3x3 conv C[4] -> head_channels, ReLU, dropout
///            1x1 conv head_channels -> head_channels, ReLU, dropout
///     score3 / score4 / score5: 1x1 convs on pool3 / pool4 / head output
///     up3 (x8), up4 (x16), up5 (x32): learned transposed convolutions back to S x S
///     fuse:  1x1 conv over the concatenated upsampled scores -> 2 logits z0, z1
///     output: paired sigmoid y_k = sigmoid(z_k - z_other) (default), or an independent
///             sigmoid per channel
///
/// With independent sigmoids the one-hot cross-entropy below only ever pushes the labelled
/// channel up, so "both channels near 1" minimizes it and every pixel binarizes to path.
/// The paired form keeps each channel a sigmoid while making the two compete.
///
/// Activations are CHW tensors with batch size 1. Output channel 0 is background, 1 is path.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "tspfcn/layers.hpp"
#include "tspfcn/raster.hpp"
#include "tspfcn/tensor.hpp"

namespace tspfcn::net {

inline constexpr int kBlocks = 5;

enum class OutputActivation { paired_sigmoid, channel_sigmoid };

std::string to_string(OutputActivation a);
OutputActivation output_activation_from_string(const std::string& s);

struct ArchConfig {
    int input_size = 64;
    std::array<int, kBlocks> channels{8, 16, 32, 64, 128};
    std::array<int, kBlocks> convs_per_block{2, 2, 3, 3, 3};
    int head_channels = 128;
    int score_channels = 8;
    double dropout_rate = 0.5;
    OutputActivation output = OutputActivation::paired_sigmoid;

    /// 224 px input, VGG-16 widths, 1024-deep head, one channel per skip head.
    static ArchConfig paper();
    /// 64 px input, channels {8, 16, 32, 64, 128}, eight channels per skip head.
    static ArchConfig desk();

    /// Throws ConfigError unless input_size is a positive multiple of 32 and all widths > 0.
    void validate() const;

    friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

nlohmann::json to_json(const ArchConfig& cfg);
ArchConfig arch_from_json(const nlohmann::json& j);

template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
};

template <typename T>
class Model {
  public:
    Model() = default;
    /// Allocates every parameter with the declared shapes, all zero.
    explicit Model(const ArchConfig& cfg);

    const ArchConfig& arch() const noexcept { return arch_; }
    std::vector<Param<T>>& params() noexcept { return params_; }
    const std::vector<Param<T>>& params() const noexcept { return params_; }
    std::size_t parameter_count() const;

    /// Index of a named parameter; throws ConfigError if absent.
    std::size_t index_of(const std::string& name) const;
    const Tensor<T>& param(const std::string& name) const { return params_[index_of(name)].value; }
    Tensor<T>& param(const std::string& name) { return params_[index_of(name)].value; }

    template <typename U>
    Model<U> cast() const {
        Model<U> m(arch_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m.params()[i].value = params_[i].value.template cast<U>();
        }
        return m;
    }

  private:
    ArchConfig arch_;
    std::vector<Param<T>> params_;
};

/// Xavier-uniform weights, every bias exactly 0.1.
template <typename T>
Model<T> init_model(const ArchConfig& cfg, std::uint64_t seed);

/// Per-parameter gradients, in the same order as Model::params().
template <typename T>
using Gradients = std::vector<Tensor<T>>;

template <typename T>
Gradients<T> zero_gradients(const Model<T>& model);

/// Activations retained for the backward pass.
template <typename T>
struct ForwardCache {
    Tensor<T> input;
    std::vector<Tensor<T>> conv_in;  // input to every backbone conv
    std::vector<Tensor<T>> conv_out; // post-ReLU output of every backbone conv
    std::array<Tensor<T>, kBlocks> pool_out;
    std::array<std::vector<std::uint32_t>, kBlocks> pool_argmax;
    std::array<Shape, kBlocks> pool_in_shape;
    Tensor<T> head1_out, head2_out; // post-ReLU, post-dropout
    std::vector<T> drop1_mask, drop2_mask;
    Tensor<T> score3, score4, score5;
    Tensor<T> fused_in; // concatenated upsampled scores
    Tensor<T> output;   // probabilities
};

struct ForwardOptions {
    bool training = false;
    layers::Compute compute{};
};

/// Returns {2, S, S} probabilities in (0, 1). Dropout draws from `rng` only when
/// training. Throws ShapeError for a wrong input shape, NumericError on non-finite output.
template <typename T>
Tensor<T> forward(const Model<T>& model, const Tensor<T>& image, const ForwardOptions& opts = {},
                  std::mt19937_64* rng = nullptr, ForwardCache<T>* cache = nullptr);

/// Inference: dropout off, pure.
template <typename T>
Tensor<T> predict(const Model<T>& model, const Tensor<T>& image,
                  const layers::Compute& compute = {}) {
    return forward(model, image, ForwardOptions{false, compute});
}

inline constexpr double kLogClamp = 1e-12;

/// Mean one-hot cross-entropy over both channels:
///     J = -sum_{x,y,k} label * log(clamp(y, eps, 1 - eps)) / (2 w h)
template <typename T>
double loss(const Tensor<T>& probs, const Tensor<T>& label);

/// Gradients of `loss` for the activations in `cache`. The sigmoid/log pair is differentiated
/// analytically, e.g. d/dz[-log sigmoid(z)] = -(1 - sigmoid(z)); the clamp only guards the
/// loss value.
template <typename T>
Gradients<T> backward(const Model<T>& model, const ForwardCache<T>& cache, const Tensor<T>& label,
                      const layers::Compute& compute = {});

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    long step = 0;

    static AdamState zeros(const Model<T>& model);
};

/// One bias-corrected Adam update; increments state.step before use (first call uses t = 1).
template <typename T>
void adam_step(Model<T>& model, const Gradients<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg);

inline constexpr char kCheckpointMagic[8] = {'T', 'S', 'P', 'F', 'C', 'N', '0', '1'};

/// "TSPFCN01", u32 little-endian JSON length, JSON ArchConfig, then every parameter as
/// little-endian f32 in declared order.
void save_checkpoint(const Model<float>& model, const std::string& path);
/// Throws FormatError on wrong magic/version, truncation or trailing bytes.
Model<float> load_checkpoint(const std::string& path);

} // namespace tspfcn::net
