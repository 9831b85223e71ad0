#pragma once

#include "ipnet/core_math.hpp"
#include "ipnet/prototypes.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ipnet {

/// Feature rows with one integer class label per row.
struct LabeledSet {
    Matrix features;
    std::vector<int> labels;
};

enum class EmbedderKind { Identity, FeedForward };

/// `layer_dims` = {D, h_1, ..., M}. Hidden layers use ReLU, the output layer is linear.
struct EmbedderSpec {
    EmbedderKind kind = EmbedderKind::Identity;
    std::vector<std::size_t> layer_dims;

    static EmbedderSpec identity() { return {}; }
    static EmbedderSpec feed_forward(std::vector<std::size_t> dims) {
        return {EmbedderKind::FeedForward, std::move(dims)};
    }

    void validate() const;
    /// "identity" or "feedforward:4,8,4".
    std::string to_string() const;
    static EmbedderSpec parse(const std::string& text);

    friend bool operator==(const EmbedderSpec&, const EmbedderSpec&) = default;
};

/// Affine layer y = W x + b with W stored row-major as out × in.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;
    std::vector<double> bias;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Parameters (or gradients, or velocities) of a feed-forward embedder.
using ParameterSet = std::vector<DenseLayer>;

/// Zero-filled parameter set with the same shapes as `like`.
ParameterSet zeros_like(const ParameterSet& like);
std::size_t parameter_count(const ParameterSet& params);
/// Every scalar of the set in layer order, weights before biases.
std::vector<double> flatten(const ParameterSet& params);
void unflatten(std::span<const double> values, ParameterSet& params);

class Embedder {
public:
    Embedder() = default;

    static Embedder identity() { return Embedder(); }
    /// Glorot-uniform weights (s = sqrt(6 / (fan_in + fan_out))), zero biases.
    static Embedder initialize(const EmbedderSpec& spec, Rng& rng);
    /// Wraps explicit parameters; shapes must chain along spec.layer_dims.
    static Embedder from_parameters(const EmbedderSpec& spec, ParameterSet params);

    const EmbedderSpec& spec() const noexcept { return spec_; }
    const ParameterSet& parameters() const noexcept { return params_; }
    ParameterSet& parameters() noexcept { return params_; }
    bool trainable() const noexcept { return spec_.kind == EmbedderKind::FeedForward; }

    /// Row-wise forward pass. Identity returns the input unchanged.
    Matrix embed(const Matrix& batch) const;

    /// Output width for inputs of width `input_dim`.
    std::size_t output_dim(std::size_t input_dim) const;

    friend bool operator==(const Embedder&, const Embedder&) = default;

private:
    EmbedderSpec spec_;
    ParameterSet params_;
};

/// Negative mean log-likelihood of the query labels under the distance
/// softmax against prototypes built from the embedded support.
double episode_loss(const Embedder& embedder, const LabeledSet& support, const LabeledSet& query,
                    const PrototypeStrategy& strategy);

struct LossGradient {
    double loss = 0.0;
    ParameterSet gradient;  // empty for the identity embedder
};

/// Loss and its exact gradient with respect to every embedder parameter.
/// Prototype weights are computed once from the current embeddings and then
/// held constant; gradients flow through the weighted prototype sums only.
LossGradient backward(const Embedder& embedder, const LabeledSet& support, const LabeledSet& query,
                      const PrototypeStrategy& strategy);

struct OptimizerState {
    double learning_rate = 0.01;
    double momentum = 0.9;
    ParameterSet velocity;  // lazily zero-initialized to the parameter shapes

    void validate() const;
};

/// v <- momentum * v + grad; params <- params - lr * v.
void sgd_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& opt);

/// Plain-text checkpoint; see docs/checkpoint.md for the record layout.
void write_checkpoint(std::ostream& os, const Embedder& embedder);
Embedder read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const Embedder& embedder);
Embedder load_checkpoint(const std::string& path);

}  // namespace ipnet
