#include "clqa/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace clqa {

OptimizerState OptimizerState::zeros(Eigen::Index size, AdamConfig config) {
  OptimizerState state;
  state.config = config;
  state.first_moment = Vector::Zero(size);
  state.second_moment = Vector::Zero(size);
  return state;
}

void optimizer_step(OptimizerState& state, Vector& params, const Vector& grads, Real lr,
                    Eigen::Index trainable_begin) {
  const auto n = params.size();
  if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw std::invalid_argument("optimizer_step: shape mismatch");
  }
  if (trainable_begin < 0 || trainable_begin > n) {
    throw std::invalid_argument("optimizer_step: trainable block out of range");
  }
  ++state.step;
  const auto& c = state.config;
  const Real t = static_cast<Real>(state.step);
  const Real bias1 = 1.0 - std::pow(c.beta1, t);
  const Real bias2 = 1.0 - std::pow(c.beta2, t);
  const auto len = n - trainable_begin;
  auto m = state.first_moment.segment(trainable_begin, len);
  auto v = state.second_moment.segment(trainable_begin, len);
  const auto g = grads.segment(trainable_begin, len);
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseAbs2();
  params.segment(trainable_begin, len).array() -=
      lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + c.epsilon);
}

}  // namespace clqa
