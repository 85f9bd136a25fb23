#pragma once

#include "malcraft/feature_space.hpp"
#include "malcraft/mlp.hpp"
#include "malcraft/types.hpp"

#include <string>

namespace malcraft {

// Derivative of the model output with respect to the input, evaluated on the
// continuous relaxation of the binary feature vector. Row i holds
// dF_i/dx_j for j in [0, M). Because F_0 + F_1 = 1 identically, the two rows
// are antisymmetric: row_0 + row_1 = 0.
struct JacobianMatrix {
  Matrix rows;  // 2 x M
  std::string evaluated_at;
  double temperature = 1.0;
};

enum class SaliencySpace {
  probability,  // derivatives of the softmax outputs (default)
  logit,        // derivatives of the raw logits (ablation only)
};

// Exact analytic Jacobian (infer mode, ReLU subgradient at 0 taken as 0),
// evaluated at the model's temperature.
JacobianMatrix forward_derivative(const MlpModel& model, const SampleVector& sample,
                                  SaliencySpace space = SaliencySpace::probability);
JacobianMatrix forward_derivative_dense(const MlpModel& model, const Vector& x,
                                        const std::string& sample_id = {},
                                        SaliencySpace space = SaliencySpace::probability);

// Central-difference oracle: (F(x + h e_i) - F(x - h e_i)) / (2h) per input
// coordinate, infer mode.
JacobianMatrix finite_difference_jacobian(const MlpModel& model, const Vector& x, double h,
                                          const std::string& sample_id = {});

// Dense 0/1 expansion of a sparse sample.
Vector to_dense(const SampleVector& sample, FeatureIndex input_dim);

}  // namespace malcraft
