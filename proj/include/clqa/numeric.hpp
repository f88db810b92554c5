#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace clqa {

using Real = double;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using VectorList = std::vector<Vector>;

/// Clamp bound applied to every probability before it enters a square root.
inline constexpr Real kProbabilityEpsilon = 1e-6;

template <typename Scalar>
Scalar std_normal_cdf(Scalar z) {
  using std::erfc;
  return Scalar(0.5) * erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

template <typename Scalar>
Scalar std_normal_pdf(Scalar z) {
  using std::exp;
  return exp(Scalar(-0.5) * z * z) * std::numbers::inv_sqrtpi_v<Scalar> /
         std::numbers::sqrt2_v<Scalar>;
}

template <typename Scalar>
Scalar clamp_probability(Scalar p) {
  const Scalar lo(kProbabilityEpsilon);
  const Scalar hi = Scalar(1) - lo;
  return p < lo ? lo : (p > hi ? hi : p);
}

/// Unit-norm copy of `v`. A zero vector maps to zero and sets `degenerate`.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> normalized(
    const Eigen::MatrixBase<Derived>& v, bool* degenerate = nullptr) {
  using Scalar = typename Derived::Scalar;
  const Scalar norm = v.norm();
  if (degenerate) *degenerate = norm == Scalar(0);
  if (norm == Scalar(0)) {
    return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(v.size());
  }
  return v / norm;
}

}  // namespace clqa
