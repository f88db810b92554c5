#pragma once

#include "clqa/core.hpp"
#include "clqa/model.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace clqa {

/// 1 - sqrt(p p_hat) - sqrt((1 - p)(1 - p_hat)) for probabilities in [0, 1].
template <typename Scalar>
Scalar fidelity_loss(Scalar p, Scalar p_hat) {
  using std::sqrt;
  const auto unit = [](Scalar v) { return v < Scalar(0) ? Scalar(0) : (v > Scalar(1) ? Scalar(1) : v); };
  p = unit(p);
  p_hat = unit(p_hat);
  const Scalar loss = Scalar(1) - sqrt(p * p_hat) - sqrt((Scalar(1) - p) * (Scalar(1) - p_hat));
  return loss < Scalar(0) ? Scalar(0) : loss;
}

/// Partial derivative of fidelity_loss in p_hat; both arguments must lie
/// strictly inside (0, 1).
template <typename Scalar>
Scalar fidelity_loss_gradient(Scalar p, Scalar p_hat) {
  using std::sqrt;
  return Scalar(0.5) * (sqrt((Scalar(1) - p) / (Scalar(1) - p_hat)) - sqrt(p / p_hat));
}

enum class Regularizer { none, lwf, ewc, si, mas };

std::string to_string(Regularizer r);
Regularizer regularizer_from_string(const std::string& name);

struct LossConfig {
  Real lambda = 1;
  Regularizer regularizer = Regularizer::none;
};

/// Recorded predictions of one old head on every pair of the current task.
struct PseudoLabelSet {
  std::size_t task_index = 0;
  std::vector<Real> labels;  // indexed by pair position, clamped
};

/// Per-parameter importance over the plastic trunk block
/// [offset, offset + beta.size()) of the flat parameter vector.
struct ImportanceState {
  Regularizer method = Regularizer::ewc;
  Eigen::Index offset = 0;
  Vector beta;
  Vector anchor;
  Vector accumulators;  // SI path integral for the task in progress
};

inline constexpr Real kSiDamping = 1e-3;

using RegularizerState = std::variant<std::monostate, std::vector<PseudoLabelSet>, ImportanceState>;

/// Pairs of one mini-batch remapped to columns of a gathered input matrix.
struct PairBatch {
  struct Entry {
    Eigen::Index first = 0;
    Eigen::Index second = 0;
    std::size_t pair_index = 0;
    Real p = 0.5;
  };
  std::vector<std::size_t> samples;  // training-set indices, one per column
  std::vector<Entry> pairs;
};

PairBatch gather_batch(std::span<const RankedPair> pairs, std::span<const std::size_t> batch);
Matrix gather_inputs(std::span<const QualitySample> samples, std::span<const std::size_t> indices);

struct ObjectiveValue {
  Real total = 0;
  Real new_term = 0;      // mean fidelity loss of the current head
  Real old_term = 0;      // mean summed fidelity loss of old heads against pseudo-labels
  Real penalty = 0;       // quadratic penalty, before lambda
};

/// Pair-level part of the objective from a T x n score matrix. Writes score
/// seeds of the total pair objective and of the new-task term alone.
ObjectiveValue pair_objective(const Matrix& scores, const PairBatch& batch, std::size_t current_head,
                              const std::vector<PseudoLabelSet>* labels, Real lambda,
                              Matrix* total_seeds = nullptr, Matrix* new_seeds = nullptr);

/// Old-head predictions for every pair, recorded once before a task's first epoch.
/// Returns an empty list when the model has no old heads.
std::vector<PseudoLabelSet> lwf_pseudo_labels(const ContinualModel& model,
                                              std::span<const QualitySample> samples,
                                              std::span<const RankedPair> pairs,
                                              std::size_t old_task_count);

/// Summed fidelity loss of old heads against their labels on one pair.
Real lwf_regularizer(const ContinualModel& model, std::span<const QualitySample> samples,
                     std::span<const RankedPair> pairs, std::size_t pair_index,
                     const std::vector<PseudoLabelSet>& labels);

ImportanceState make_importance_state(Regularizer method, const ContinualModel& model);

/// sum_i beta_i (phi_i - anchor_i)^2, without lambda.
Real quadratic_penalty(const ContinualModel& model, const ImportanceState& state);
/// Flat gradient of quadratic_penalty.
Vector quadratic_penalty_gradient(const ContinualModel& model, const ImportanceState& state);

/// Importance of the current task over the plastic trunk, by method:
/// ewc - mean squared per-pair gradient of the new-task loss;
/// mas - mean absolute per-sample gradient of half the squared current-head score;
/// si  - positive path integral over squared total displacement plus damping.
Vector estimate_importance(Regularizer method, const ContinualModel& model,
                           std::span<const QualitySample> samples,
                           std::span<const RankedPair> pairs, const ImportanceState& state);

/// Adds the current task's importance and re-anchors at the current parameters.
void consolidate_importance(ImportanceState& state, const ContinualModel& model,
                            std::span<const QualitySample> samples,
                            std::span<const RankedPair> pairs);

/// SI bookkeeping after an optimizer step: omega += -g * delta over the plastic trunk.
void si_accumulate(ImportanceState& state, const Vector& new_task_gradient,
                   const Vector& parameter_delta);

struct LossAndGradient {
  ObjectiveValue value;
  Vector gradient;      // flat, full objective
  Vector new_gradient;  // flat, new-task term only
};

/// Mean over the batch of  l_new + lambda * l_old  (lwf), or mean l_new plus
/// lambda times the quadratic penalty (ewc/si/mas). The current head is the last one.
ObjectiveValue minibatch_loss(const ContinualModel& model, std::span<const QualitySample> samples,
                              std::span<const RankedPair> pairs, std::span<const std::size_t> batch,
                              const RegularizerState& state, const LossConfig& config);

LossAndGradient minibatch_loss_and_gradient(const ContinualModel& model,
                                            std::span<const QualitySample> samples,
                                            std::span<const RankedPair> pairs,
                                            std::span<const std::size_t> batch,
                                            const RegularizerState& state, const LossConfig& config,
                                            bool trunk = true);

}  // namespace clqa
