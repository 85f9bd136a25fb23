#include "malcraft/jacobian.hpp"

#include <stdexcept>

namespace malcraft {

Vector to_dense(const SampleVector& sample, FeatureIndex input_dim) {
  Vector x = Vector::Zero(input_dim);
  for (FeatureIndex i : sample.indices) {
    if (i < 0 || i >= input_dim) {
      throw std::invalid_argument("sample index out of range for model input");
    }
    x(i) = 1.0;
  }
  return x;
}

JacobianMatrix forward_derivative(const MlpModel& model, const SampleVector& sample,
                                  SaliencySpace space) {
  return forward_derivative_dense(model, to_dense(sample, model.input_dim), sample.id, space);
}

JacobianMatrix forward_derivative_dense(const MlpModel& model, const Vector& x,
                                        const std::string& sample_id, SaliencySpace space) {
  ForwardTrace trace = forward_trace(model, x);
  const int layers = model.layer_count();

  // Seed with dp/dz at the output, then pull back through each layer:
  // G <- (G * W_l^T) masked by relu'(z_{l-1}).
  Matrix g;
  if (space == SaliencySpace::probability) {
    const Vector2& p = trace.output.probs;
    g = (Matrix(2, 2) << p(0) * (1.0 - p(0)), -p(0) * p(1),
                         -p(0) * p(1), p(1) * (1.0 - p(1)))
            .finished() /
        model.temperature;
  } else {
    g = Matrix::Identity(2, 2);
  }

  for (int l = layers - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    g = g * model.weights[lu].transpose();
    if (l > 0) {
      Eigen::ArrayXd mask =
          (trace.pre_activations[lu - 1].array() > 0.0).cast<double>();
      g.array().rowwise() *= mask.transpose();
    }
  }

  JacobianMatrix jac;
  jac.rows = std::move(g);
  jac.evaluated_at = sample_id;
  jac.temperature = model.temperature;
  return jac;
}

JacobianMatrix finite_difference_jacobian(const MlpModel& model, const Vector& x, double h,
                                          const std::string& sample_id) {
  if (!(h > 0.0) || h > 0.1) {
    throw std::invalid_argument("finite-difference step must lie in (0, 0.1]");
  }
  JacobianMatrix jac;
  jac.rows.resize(2, x.size());
  jac.evaluated_at = sample_id;
  jac.temperature = model.temperature;
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    Vector2 plus = forward_dense(model, probe).probs;
    probe(i) = x(i) - h;
    Vector2 minus = forward_dense(model, probe).probs;
    probe(i) = x(i);
    jac.rows.col(i) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

}  // namespace malcraft
