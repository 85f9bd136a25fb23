#pragma once

#include "malcraft/feature_space.hpp"
#include "malcraft/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace malcraft {

// Feed-forward ReLU network with a two-way softmax head. Weight matrix l is
// (fan_in x fan_out); logits for input x are
//   a_0 = x,  a_l = relu(W_l^T a_{l-1} + b_l),  z = W_L^T a_{L-1} + b_L
// and the output distribution is softmax(z / temperature).
struct MlpModel {
  FeatureIndex input_dim = 0;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  double temperature = 1.0;

  int layer_count() const { return static_cast<int>(weights.size()); }
  std::vector<FeatureIndex> hidden_sizes() const;
  bool parameters_finite() const;
};

struct TrainConfig {
  std::size_t batch_size = 1000;
  double malware_ratio = 0.5;
  int epochs_per_batch = 10;
  double learning_rate = 0.05;
  double dropout_rate = 0.5;
  std::uint64_t seed = 1;
};

struct OutputDistribution {
  Vector2 probs;
  Vector2 logits;
};

// Weights drawn from N(0, 1/fan_in), biases zero; deterministic in seed.
MlpModel init_model(FeatureIndex input_dim, const std::vector<FeatureIndex>& hidden_layers,
                    std::uint64_t seed);

// Numerically stable temperature softmax (max-subtraction before exp).
Vector2 softmax_with_temperature(const Vector2& logits, double temperature);

struct DropoutSpec {
  double rate = 0.5;
  std::uint64_t seed = 0;
};

// Forward pass over the active-index representation. Pass a DropoutSpec for
// train mode (inverted dropout: surviving hidden units scaled by 1/(1-rate));
// omit it for inference.
OutputDistribution forward(const MlpModel& model, std::span<const FeatureIndex> active,
                           const DropoutSpec* dropout = nullptr);
OutputDistribution forward(const MlpModel& model, const SampleVector& sample,
                           const DropoutSpec* dropout = nullptr);

// Forward pass on the continuous relaxation of the binary input. This is the
// function the input Jacobian differentiates.
OutputDistribution forward_dense(const MlpModel& model, const Vector& x,
                                 const DropoutSpec* dropout = nullptr);

// Per-layer pre-activations and activations of the dense forward pass
// (post-dropout in train mode). Used by the Jacobian and by tests.
struct ForwardTrace {
  std::vector<Vector> pre_activations;  // one per layer, last = logits
  std::vector<Vector> activations;      // hidden layers only
  OutputDistribution output;
};

ForwardTrace forward_trace(const MlpModel& model, const Vector& x,
                           const DropoutSpec* dropout = nullptr);

// Argmax label of the infer-mode distribution at temperature 1 (argmax is
// temperature-invariant; evaluation always happens at T=1). The exact tie
// 0.5/0.5 resolves to benign.
int predict(const MlpModel& model, std::span<const FeatureIndex> active);
int predict(const MlpModel& model, const SampleVector& sample);

// Mean cross-entropy loss and parameter gradients for one batch at the
// model's temperature. Targets are per-sample label distributions; rows
// index into `dataset.samples`. With a DropoutSpec the same mask is used for
// the loss and the gradients.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  double loss = 0.0;
};

Gradients batch_gradients(const MlpModel& model, const Dataset& dataset,
                          std::span<const std::size_t> rows, std::span<const Vector2> targets,
                          const DropoutSpec* dropout = nullptr);

// Batch gradient descent per the stream: epochs_per_batch full-batch steps
// on each batch in order. Targets default to one-hot labels; pass
// `soft_labels` (one distribution per dataset row) to train against soft
// targets. Returns the per-step mean loss trace. Throws if the loss ever
// leaves the finite range.
struct TrainTrace {
  std::vector<double> losses;
};

TrainTrace train_sgd(MlpModel& model, const Dataset& dataset, const BatchStream& stream,
                     const TrainConfig& config,
                     const std::vector<Vector2>* soft_labels = nullptr);

inline Vector2 one_hot_label(int label) {
  return label == kMalicious ? Vector2(0.0, 1.0) : Vector2(1.0, 0.0);
}

}  // namespace malcraft
