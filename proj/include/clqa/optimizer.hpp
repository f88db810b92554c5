#pragma once

#include "clqa/numeric.hpp"

#include <cstdint>

namespace clqa {

struct AdamConfig {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  Vector first_moment;
  Vector second_moment;
  std::uint64_t step = 0;

  static OptimizerState zeros(Eigen::Index size, AdamConfig config = {});
};

/// Bias-corrected Adam update restricted to the trainable block
/// [trainable_begin, params.size()); entries before it are left untouched,
/// including their moments.
void optimizer_step(OptimizerState& state, Vector& params, const Vector& grads, Real lr,
                    Eigen::Index trainable_begin = 0);

}  // namespace clqa
