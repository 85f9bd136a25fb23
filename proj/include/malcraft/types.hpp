#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace malcraft {

// Feature indices are dense and fit comfortably in 32 bits even for the
// largest corpora this library targets (~half a million features).
using FeatureIndex = std::int32_t;

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Vector2 = Eigen::Vector2d;

// Class labels. Malicious is the positive class everywhere.
inline constexpr int kBenign = 0;
inline constexpr int kMalicious = 1;

// Mixes a base seed with a stream counter so that derived RNG streams are
// decorrelated (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace malcraft
