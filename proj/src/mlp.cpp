#include "malcraft/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace malcraft {

std::vector<FeatureIndex> MlpModel::hidden_sizes() const {
  std::vector<FeatureIndex> sizes;
  for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
    sizes.push_back(static_cast<FeatureIndex>(weights[l].cols()));
  }
  return sizes;
}

bool MlpModel::parameters_finite() const {
  for (const Matrix& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const Vector& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

MlpModel init_model(FeatureIndex input_dim, const std::vector<FeatureIndex>& hidden_layers,
                    std::uint64_t seed) {
  if (input_dim < 1) {
    throw std::invalid_argument("input_dim must be at least 1");
  }
  if (hidden_layers.empty()) {
    throw std::invalid_argument("at least one hidden layer is required");
  }
  for (FeatureIndex h : hidden_layers) {
    if (h < 1) throw std::invalid_argument("hidden layer sizes must be at least 1");
  }

  std::vector<FeatureIndex> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_layers.begin(), hidden_layers.end());
  dims.push_back(2);

  std::mt19937_64 rng(mix_seed(seed, 0x11217));
  MlpModel model;
  model.input_dim = input_dim;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(dims[l]);
    const auto fan_out = static_cast<Eigen::Index>(dims[l + 1]);
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index j = 0; j < fan_out; ++j) {
      for (Eigen::Index i = 0; i < fan_in; ++i) {
        w(i, j) = dist(rng);
      }
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vector::Zero(fan_out));
  }
  return model;
}

Vector2 softmax_with_temperature(const Vector2& logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  Vector2 scaled = logits / temperature;
  double m = scaled.maxCoeff();
  Vector2 e = (scaled.array() - m).exp();
  return e / e.sum();
}

namespace {

// Dropout multipliers for one layer: 0 with probability rate, else
// 1/(1-rate). Fill order is column-major so masks are stable.
Matrix dropout_multipliers(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  Matrix d(rows, cols);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      d(i, j) = unit(rng) < rate ? 0.0 : keep_scale;
    }
  }
  return d;
}

void check_dropout(const DropoutSpec* dropout) {
  if (dropout != nullptr && (dropout->rate < 0.0 || dropout->rate >= 1.0)) {
    throw std::invalid_argument("dropout rate must lie in [0,1)");
  }
}

// First-layer pre-activation from active indices: b + sum of weight rows.
Vector sparse_first_layer(const MlpModel& model, std::span<const FeatureIndex> active) {
  Vector z = model.biases[0];
  const Matrix& w = model.weights[0];
  for (FeatureIndex i : active) {
    if (i < 0 || i >= model.input_dim) {
      throw std::invalid_argument("feature index out of range for model input");
    }
    z += w.row(i).transpose();
  }
  return z;
}

OutputDistribution finish_forward(const MlpModel& model, Vector z, const DropoutSpec* dropout,
                                  std::mt19937_64* dropout_rng) {
  const int layers = model.layer_count();
  for (int l = 1; l < layers; ++l) {
    Vector a = z.cwiseMax(0.0);
    if (dropout != nullptr && dropout->rate > 0.0) {
      a.array() *= dropout_multipliers(a.size(), 1, dropout->rate, *dropout_rng).col(0).array();
    }
    z = model.weights[static_cast<std::size_t>(l)].transpose() * a +
        model.biases[static_cast<std::size_t>(l)];
  }
  OutputDistribution out;
  out.logits = Vector2(z(0), z(1));
  out.probs = softmax_with_temperature(out.logits, model.temperature);
  return out;
}

}  // namespace

OutputDistribution forward(const MlpModel& model, std::span<const FeatureIndex> active,
                           const DropoutSpec* dropout) {
  check_dropout(dropout);
  std::mt19937_64 rng(dropout != nullptr ? dropout->seed : 0);
  Vector z = sparse_first_layer(model, active);
  return finish_forward(model, std::move(z), dropout, &rng);
}

OutputDistribution forward(const MlpModel& model, const SampleVector& sample,
                           const DropoutSpec* dropout) {
  return forward(model, std::span<const FeatureIndex>(sample.indices), dropout);
}

OutputDistribution forward_dense(const MlpModel& model, const Vector& x, const DropoutSpec* dropout) {
  return forward_trace(model, x, dropout).output;
}

ForwardTrace forward_trace(const MlpModel& model, const Vector& x, const DropoutSpec* dropout) {
  check_dropout(dropout);
  if (x.size() != static_cast<Eigen::Index>(model.input_dim)) {
    throw std::invalid_argument("input dimension mismatch");
  }
  std::mt19937_64 rng(dropout != nullptr ? dropout->seed : 0);
  ForwardTrace trace;
  const int layers = model.layer_count();
  Vector a = x;
  for (int l = 0; l < layers; ++l) {
    Vector z = model.weights[static_cast<std::size_t>(l)].transpose() * a +
               model.biases[static_cast<std::size_t>(l)];
    trace.pre_activations.push_back(z);
    if (l + 1 == layers) {
      trace.output.logits = Vector2(z(0), z(1));
      trace.output.probs = softmax_with_temperature(trace.output.logits, model.temperature);
      break;
    }
    a = z.cwiseMax(0.0);
    if (dropout != nullptr && dropout->rate > 0.0) {
      a.array() *= dropout_multipliers(a.size(), 1, dropout->rate, rng).col(0).array();
    }
    trace.activations.push_back(a);
  }
  return trace;
}

int predict(const MlpModel& model, std::span<const FeatureIndex> active) {
  OutputDistribution out = forward(model, active);
  Vector2 probs = softmax_with_temperature(out.logits, 1.0);
  return probs(1) > probs(0) ? kMalicious : kBenign;
}

int predict(const MlpModel& model, const SampleVector& sample) {
  return predict(model, std::span<const FeatureIndex>(sample.indices));
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

struct BatchWorkspace {
  std::vector<Matrix> pre_activations;   // per layer, h_l x B
  std::vector<Matrix> activations;       // hidden layers, post-dropout
  std::vector<Matrix> dropout_scale;     // empty in infer mode
  Matrix probs;                          // 2 x B
};

// Forward pass over a batch of sparse rows. Returns mean cross-entropy
// against `targets` at the model's temperature.
double batch_forward(const MlpModel& model, const Dataset& dataset,
                     std::span<const std::size_t> rows, std::span<const Vector2> targets,
                     const DropoutSpec* dropout, BatchWorkspace& ws) {
  const auto batch = static_cast<Eigen::Index>(rows.size());
  const int layers = model.layer_count();
  const double temperature = model.temperature;

  ws.pre_activations.assign(static_cast<std::size_t>(layers), Matrix());
  ws.activations.assign(static_cast<std::size_t>(layers - 1), Matrix());
  ws.dropout_scale.clear();

  std::mt19937_64 rng(dropout != nullptr ? dropout->seed : 0);

  // Layer 1 exploits sparsity: only active-index weight rows contribute.
  {
    const Matrix& w = model.weights[0];
    Matrix z = model.biases[0].replicate(1, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const SampleVector& s = dataset.samples[rows[static_cast<std::size_t>(b)]];
      for (FeatureIndex i : s.indices) {
        z.col(b) += w.row(i).transpose();
      }
    }
    ws.pre_activations[0] = std::move(z);
  }

  for (int l = 0; l < layers - 1; ++l) {
    Matrix a = ws.pre_activations[static_cast<std::size_t>(l)].cwiseMax(0.0);
    if (dropout != nullptr && dropout->rate > 0.0) {
      Matrix d = dropout_multipliers(a.rows(), a.cols(), dropout->rate, rng);
      a.array() *= d.array();
      ws.dropout_scale.push_back(std::move(d));
    }
    ws.activations[static_cast<std::size_t>(l)] = a;
    ws.pre_activations[static_cast<std::size_t>(l + 1)] =
        (model.weights[static_cast<std::size_t>(l + 1)].transpose() * a).colwise() +
        model.biases[static_cast<std::size_t>(l + 1)];
  }

  // Softmax + cross-entropy via log-sum-exp.
  const Matrix& logits = ws.pre_activations[static_cast<std::size_t>(layers - 1)];
  ws.probs.resize(2, batch);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    Vector2 scaled = Vector2(logits(0, b), logits(1, b)) / temperature;
    double m = scaled.maxCoeff();
    double lse = m + std::log(std::exp(scaled(0) - m) + std::exp(scaled(1) - m));
    Vector2 logp = scaled.array() - lse;
    const Vector2& y = targets[static_cast<std::size_t>(b)];
    loss -= y(0) * logp(0) + y(1) * logp(1);
    ws.probs(0, b) = std::exp(logp(0));
    ws.probs(1, b) = std::exp(logp(1));
  }
  return loss / static_cast<double>(batch);
}

// Backward pass. Either materializes gradients into `grads` or applies a
// plain gradient-descent update in place with step size `apply_lr` (the
// first-layer update then touches only active-feature rows, which keeps
// large-vocabulary training cheap).
void batch_backward(MlpModel& model, const Dataset& dataset, std::span<const std::size_t> rows,
                    std::span<const Vector2> targets, const BatchWorkspace& ws, Gradients* grads,
                    double apply_lr) {
  const auto batch = static_cast<Eigen::Index>(rows.size());
  const int layers = model.layer_count();
  const double inv_scale = 1.0 / (model.temperature * static_cast<double>(batch));

  Matrix dz = ws.probs;
  for (Eigen::Index b = 0; b < batch; ++b) {
    dz.col(b) -= targets[static_cast<std::size_t>(b)];
  }
  dz *= inv_scale;

  for (int l = layers - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    Vector db = dz.rowwise().sum();
    if (l > 0) {
      Matrix dw = ws.activations[lu - 1] * dz.transpose();
      Matrix da = model.weights[lu] * dz;  // before overwriting weights
      if (grads != nullptr) {
        grads->weights[lu] = std::move(dw);
        grads->biases[lu] = db;
      }
      if (apply_lr != 0.0) {
        if (grads != nullptr) {
          model.weights[lu] -= apply_lr * grads->weights[lu];
        } else {
          model.weights[lu] -= apply_lr * dw;
        }
        model.biases[lu] -= apply_lr * db;
      }
      if (!ws.dropout_scale.empty()) {
        da.array() *= ws.dropout_scale[lu - 1].array();
      }
      dz = da.cwiseProduct(
          (ws.pre_activations[lu - 1].array() > 0.0).cast<double>().matrix());
    } else {
      if (grads != nullptr) {
        grads->biases[0] = db;
        Matrix& dw = grads->weights[0];
        dw = Matrix::Zero(model.weights[0].rows(), model.weights[0].cols());
        for (Eigen::Index b = 0; b < batch; ++b) {
          const SampleVector& s = dataset.samples[rows[static_cast<std::size_t>(b)]];
          for (FeatureIndex i : s.indices) {
            dw.row(i) += dz.col(b).transpose();
          }
        }
        if (apply_lr != 0.0) {
          model.weights[0] -= apply_lr * dw;
          model.biases[0] -= apply_lr * db;
        }
      } else if (apply_lr != 0.0) {
        for (Eigen::Index b = 0; b < batch; ++b) {
          const SampleVector& s = dataset.samples[rows[static_cast<std::size_t>(b)]];
          for (FeatureIndex i : s.indices) {
            model.weights[0].row(i) -= apply_lr * dz.col(b).transpose();
          }
        }
        model.biases[0] -= apply_lr * db;
      }
    }
  }
}

std::vector<Vector2> batch_targets(const Dataset& dataset, std::span<const std::size_t> rows,
                                   const std::vector<Vector2>* soft_labels) {
  std::vector<Vector2> targets;
  targets.reserve(rows.size());
  for (std::size_t row : rows) {
    if (soft_labels != nullptr) {
      targets.push_back((*soft_labels)[row]);
    } else {
      targets.push_back(one_hot_label(dataset.samples[row].label));
    }
  }
  return targets;
}

}  // namespace

Gradients batch_gradients(const MlpModel& model, const Dataset& dataset,
                          std::span<const std::size_t> rows, std::span<const Vector2> targets,
                          const DropoutSpec* dropout) {
  check_dropout(dropout);
  Gradients grads;
  grads.weights.resize(model.weights.size());
  grads.biases.resize(model.biases.size());
  BatchWorkspace ws;
  grads.loss = batch_forward(model, dataset, rows, targets, dropout, ws);
  MlpModel& mutable_model = const_cast<MlpModel&>(model);  // not modified: apply_lr = 0
  batch_backward(mutable_model, dataset, rows, targets, ws, &grads, 0.0);
  return grads;
}

TrainTrace train_sgd(MlpModel& model, const Dataset& dataset, const BatchStream& stream,
                     const TrainConfig& config, const std::vector<Vector2>* soft_labels) {
  if (config.learning_rate < 0.0) {
    throw std::invalid_argument("learning_rate must be non-negative");
  }
  if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0) {
    throw std::invalid_argument("dropout_rate must lie in [0,1)");
  }
  if (soft_labels != nullptr && soft_labels->size() != dataset.samples.size()) {
    throw std::invalid_argument("soft label count must match dataset size");
  }

  TrainTrace trace;
  BatchWorkspace ws;
  std::uint64_t step = 0;
  for (const Batch& batch : stream.batches) {
    std::vector<Vector2> targets = batch_targets(dataset, batch.sample_rows, soft_labels);
    for (int epoch = 0; epoch < config.epochs_per_batch; ++epoch) {
      DropoutSpec spec{config.dropout_rate, mix_seed(config.seed, 0xd0u + step)};
      const DropoutSpec* dropout = config.dropout_rate > 0.0 ? &spec : nullptr;
      double loss = batch_forward(model, dataset, batch.sample_rows, targets, dropout, ws);
      if (!std::isfinite(loss)) {
        throw std::runtime_error(
            "training loss is not finite; the learning rate is likely too high");
      }
      batch_backward(model, dataset, batch.sample_rows, targets, ws, nullptr,
                     config.learning_rate);
      trace.losses.push_back(loss);
      ++step;
    }
  }
  if (!model.parameters_finite()) {
    throw std::runtime_error("model parameters are not finite after training");
  }
  return trace;
}

}  // namespace malcraft
