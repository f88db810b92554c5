#include "clqa/objectives.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace clqa {

std::string to_string(Regularizer r) {
  switch (r) {
    case Regularizer::none: return "none";
    case Regularizer::lwf: return "lwf";
    case Regularizer::ewc: return "ewc";
    case Regularizer::si: return "si";
    case Regularizer::mas: return "mas";
  }
  return "unknown";
}

Regularizer regularizer_from_string(const std::string& name) {
  if (name == "none") return Regularizer::none;
  if (name == "lwf") return Regularizer::lwf;
  if (name == "ewc") return Regularizer::ewc;
  if (name == "si") return Regularizer::si;
  if (name == "mas") return Regularizer::mas;
  throw std::invalid_argument("unknown regularizer '" + name + "'");
}

PairBatch gather_batch(std::span<const RankedPair> pairs, std::span<const std::size_t> batch) {
  PairBatch out;
  std::unordered_map<std::size_t, Eigen::Index> column;
  auto column_of = [&](std::size_t sample) {
    auto [it, inserted] = column.try_emplace(sample, static_cast<Eigen::Index>(out.samples.size()));
    if (inserted) out.samples.push_back(sample);
    return it->second;
  };
  out.pairs.reserve(batch.size());
  for (std::size_t index : batch) {
    if (index >= pairs.size()) throw std::out_of_range("batch references a missing pair");
    const auto& pair = pairs[index];
    const auto a = column_of(pair.first);
    const auto b = column_of(pair.second);
    out.pairs.push_back({a, b, index, pair.p});
  }
  return out;
}

Matrix gather_inputs(std::span<const QualitySample> samples, std::span<const std::size_t> indices) {
  if (samples.empty()) throw std::invalid_argument("gather_inputs: no samples");
  Matrix inputs(samples.front().features.size(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    inputs.col(static_cast<Eigen::Index>(i)) = samples[indices[i]].features;
  }
  return inputs;
}

namespace {

struct PreferenceTerm {
  Real loss = 0;
  Real d_score = 0;  // d loss / d (score_first), the negative goes to score_second
};

PreferenceTerm preference_term(Real target, Real score_first, Real score_second) {
  constexpr Real inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  const Real z = (score_first - score_second) * inv_sqrt2;
  const Real raw = std_normal_cdf(z);
  const Real p_hat = clamp_probability(raw);
  const Real p = clamp_probability(target);
  PreferenceTerm term;
  term.loss = fidelity_loss(p, p_hat);
  if (raw == p_hat) {
    term.d_score = fidelity_loss_gradient(p, p_hat) * std_normal_pdf(z) * inv_sqrt2;
  }
  return term;
}

const std::vector<PseudoLabelSet>& labels_of(const RegularizerState& state) {
  if (const auto* labels = std::get_if<std::vector<PseudoLabelSet>>(&state)) return *labels;
  throw std::invalid_argument("lwf objective requires pseudo-label state");
}

const ImportanceState& importance_of(const RegularizerState& state, Regularizer method) {
  const auto* imp = std::get_if<ImportanceState>(&state);
  if (!imp) throw std::invalid_argument(to_string(method) + " objective requires importance state");
  if (imp->method != method) {
    throw std::invalid_argument("importance state method '" + to_string(imp->method) +
                                "' does not match regularizer '" + to_string(method) + "'");
  }
  return *imp;
}

bool is_quadratic(Regularizer r) {
  return r == Regularizer::ewc || r == Regularizer::si || r == Regularizer::mas;
}

void check_plastic_block(const ContinualModel& model, const ImportanceState& state) {
  const auto lay = model.layout();
  if (state.offset != lay.frozen_size || state.beta.size() != lay.plastic_trunk_size() ||
      state.anchor.size() != state.beta.size()) {
    throw std::invalid_argument("importance state shape does not match the plastic trunk");
  }
}

}  // namespace

ObjectiveValue pair_objective(const Matrix& scores, const PairBatch& batch, std::size_t current_head,
                              const std::vector<PseudoLabelSet>* labels, Real lambda,
                              Matrix* total_seeds, Matrix* new_seeds) {
  if (batch.pairs.empty()) throw std::invalid_argument("objective: empty batch");
  if (current_head >= static_cast<std::size_t>(scores.rows())) {
    throw std::out_of_range("objective: current head out of range");
  }
  const Real scale = 1.0 / static_cast<Real>(batch.pairs.size());
  if (total_seeds) total_seeds->setZero(scores.rows(), scores.cols());
  if (new_seeds) new_seeds->setZero(scores.rows(), scores.cols());

  ObjectiveValue value;
  for (const auto& e : batch.pairs) {
    const auto head = static_cast<Eigen::Index>(current_head);
    const auto term = preference_term(e.p, scores(head, e.first), scores(head, e.second));
    value.new_term += term.loss;
    const Real d = term.d_score * scale;
    if (total_seeds) {
      (*total_seeds)(head, e.first) += d;
      (*total_seeds)(head, e.second) -= d;
    }
    if (new_seeds) {
      (*new_seeds)(head, e.first) += d;
      (*new_seeds)(head, e.second) -= d;
    }
    if (!labels) continue;
    for (const auto& set : *labels) {
      if (e.pair_index >= set.labels.size()) {
        throw std::logic_error("pseudo-label missing for pair " + std::to_string(e.pair_index));
      }
      const auto k = static_cast<Eigen::Index>(set.task_index);
      if (k >= scores.rows()) throw std::out_of_range("pseudo-label head out of range");
      const auto old = preference_term(set.labels[e.pair_index], scores(k, e.first), scores(k, e.second));
      value.old_term += old.loss;
      if (total_seeds) {
        const Real od = lambda * old.d_score * scale;
        (*total_seeds)(k, e.first) += od;
        (*total_seeds)(k, e.second) -= od;
      }
    }
  }
  value.new_term *= scale;
  value.old_term *= scale;
  value.total = value.new_term + lambda * value.old_term;
  return value;
}

std::vector<PseudoLabelSet> lwf_pseudo_labels(const ContinualModel& model,
                                              std::span<const QualitySample> samples,
                                              std::span<const RankedPair> pairs,
                                              std::size_t old_task_count) {
  std::vector<PseudoLabelSet> out;
  if (old_task_count == 0) return out;
  if (old_task_count > model.learned_tasks()) {
    throw std::invalid_argument("lwf_pseudo_labels: more old tasks than heads");
  }
  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const BatchForward forward(model, gather_inputs(samples, all));
  for (std::size_t k = 0; k < old_task_count; ++k) {
    PseudoLabelSet set;
    set.task_index = k;
    set.labels.reserve(pairs.size());
    for (const auto& pair : pairs) {
      set.labels.push_back(clamp_probability(forward.preference(
          k, static_cast<Eigen::Index>(pair.first), static_cast<Eigen::Index>(pair.second))));
    }
    out.push_back(std::move(set));
  }
  return out;
}

Real lwf_regularizer(const ContinualModel& model, std::span<const QualitySample> samples,
                     std::span<const RankedPair> pairs, std::size_t pair_index,
                     const std::vector<PseudoLabelSet>& labels) {
  if (pair_index >= pairs.size()) throw std::out_of_range("lwf_regularizer: pair out of range");
  const auto& pair = pairs[pair_index];
  const Embedding ex = embed(model, samples[pair.first].features);
  const Embedding ey = embed(model, samples[pair.second].features);
  Real total = 0;
  for (const auto& set : labels) {
    if (pair_index >= set.labels.size()) {
      throw std::logic_error("pseudo-label missing for pair " + std::to_string(pair_index));
    }
    const Real p_hat = preference_from_scores(head_score(model, set.task_index, ex),
                                              head_score(model, set.task_index, ey));
    total += fidelity_loss(clamp_probability(set.labels[pair_index]), clamp_probability(p_hat));
  }
  return total;
}

ImportanceState make_importance_state(Regularizer method, const ContinualModel& model) {
  if (!is_quadratic(method)) throw std::invalid_argument("unknown importance method '" + to_string(method) + "'");
  const auto lay = model.layout();
  ImportanceState state;
  state.method = method;
  state.offset = lay.frozen_size;
  state.beta = Vector::Zero(lay.plastic_trunk_size());
  state.anchor = model.parameters().segment(lay.frozen_size, lay.plastic_trunk_size());
  state.accumulators = Vector::Zero(lay.plastic_trunk_size());
  return state;
}

Real quadratic_penalty(const ContinualModel& model, const ImportanceState& state) {
  check_plastic_block(model, state);
  const Vector delta = model.parameters().segment(state.offset, state.beta.size()) - state.anchor;
  return state.beta.dot(delta.cwiseAbs2());
}

Vector quadratic_penalty_gradient(const ContinualModel& model, const ImportanceState& state) {
  check_plastic_block(model, state);
  const Vector params = model.parameters();
  Vector grad = Vector::Zero(params.size());
  grad.segment(state.offset, state.beta.size()) =
      2.0 * state.beta.cwiseProduct(params.segment(state.offset, state.beta.size()) - state.anchor);
  return grad;
}

Vector estimate_importance(Regularizer method, const ContinualModel& model,
                           std::span<const QualitySample> samples,
                           std::span<const RankedPair> pairs, const ImportanceState& state) {
  check_plastic_block(model, state);
  if (model.learned_tasks() == 0) throw std::invalid_argument("estimate_importance: model has no heads");
  const auto offset = state.offset;
  const auto size = state.beta.size();
  const std::size_t head = model.learned_tasks() - 1;

  switch (method) {
    case Regularizer::ewc: {
      if (pairs.empty()) throw std::invalid_argument("estimate_importance: no pairs");
      Vector fisher = Vector::Zero(size);
      for (const auto& pair : pairs) {
        const std::size_t idx[] = {pair.first, pair.second};
        const BatchForward forward(model, gather_inputs(samples, idx));
        const auto term = preference_term(pair.p, forward.scores()(static_cast<Eigen::Index>(head), 0),
                                          forward.scores()(static_cast<Eigen::Index>(head), 1));
        Matrix seeds = Matrix::Zero(forward.scores().rows(), 2);
        seeds(static_cast<Eigen::Index>(head), 0) = term.d_score;
        seeds(static_cast<Eigen::Index>(head), 1) = -term.d_score;
        fisher += forward.backward_scores(seeds).segment(offset, size).cwiseAbs2();
      }
      return fisher / static_cast<Real>(pairs.size());
    }
    case Regularizer::mas: {
      if (samples.empty()) throw std::invalid_argument("estimate_importance: no samples");
      Vector sensitivity = Vector::Zero(size);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::size_t idx[] = {i};
        const BatchForward forward(model, gather_inputs(samples, idx));
        Matrix seeds = Matrix::Zero(forward.scores().rows(), 1);
        seeds(static_cast<Eigen::Index>(head), 0) = forward.scores()(static_cast<Eigen::Index>(head), 0);
        sensitivity += forward.backward_scores(seeds).segment(offset, size).cwiseAbs();
      }
      return sensitivity / static_cast<Real>(samples.size());
    }
    case Regularizer::si: {
      const Vector drift = model.parameters().segment(offset, size) - state.anchor;
      return state.accumulators.cwiseMax(0.0).cwiseQuotient(
          (drift.cwiseAbs2().array() + kSiDamping).matrix());
    }
    default:
      throw std::invalid_argument("unknown importance method '" + to_string(method) + "'");
  }
}

void consolidate_importance(ImportanceState& state, const ContinualModel& model,
                            std::span<const QualitySample> samples,
                            std::span<const RankedPair> pairs) {
  state.beta += estimate_importance(state.method, model, samples, pairs, state);
  state.anchor = model.parameters().segment(state.offset, state.beta.size());
  state.accumulators.setZero();
}

void si_accumulate(ImportanceState& state, const Vector& new_task_gradient,
                   const Vector& parameter_delta) {
  const auto size = state.beta.size();
  if (new_task_gradient.size() < state.offset + size || parameter_delta.size() < state.offset + size) {
    throw std::invalid_argument("si_accumulate: shape mismatch");
  }
  state.accumulators -= new_task_gradient.segment(state.offset, size)
                            .cwiseProduct(parameter_delta.segment(state.offset, size));
}

ObjectiveValue minibatch_loss(const ContinualModel& model, std::span<const QualitySample> samples,
                              std::span<const RankedPair> pairs, std::span<const std::size_t> batch,
                              const RegularizerState& state, const LossConfig& config) {
  if (batch.empty()) throw std::invalid_argument("minibatch_loss: empty batch");
  if (config.lambda < 0) throw std::invalid_argument("minibatch_loss: negative lambda");
  const PairBatch gathered = gather_batch(pairs, batch);
  const BatchForward forward(model, gather_inputs(samples, gathered.samples));
  const auto* labels = config.regularizer == Regularizer::lwf ? &labels_of(state) : nullptr;
  auto value = pair_objective(forward.scores(), gathered, model.learned_tasks() - 1, labels,
                              config.lambda);
  if (is_quadratic(config.regularizer)) {
    value.penalty = quadratic_penalty(model, importance_of(state, config.regularizer));
    value.total += config.lambda * value.penalty;
  }
  return value;
}

LossAndGradient minibatch_loss_and_gradient(const ContinualModel& model,
                                            std::span<const QualitySample> samples,
                                            std::span<const RankedPair> pairs,
                                            std::span<const std::size_t> batch,
                                            const RegularizerState& state, const LossConfig& config,
                                            bool trunk) {
  if (batch.empty()) throw std::invalid_argument("minibatch_loss: empty batch");
  if (config.lambda < 0) throw std::invalid_argument("minibatch_loss: negative lambda");
  if (model.learned_tasks() == 0) throw std::invalid_argument("minibatch_loss: model has no heads");
  const PairBatch gathered = gather_batch(pairs, batch);
  const BatchForward forward(model, gather_inputs(samples, gathered.samples));
  const auto* labels = config.regularizer == Regularizer::lwf ? &labels_of(state) : nullptr;
  const bool want_new = config.regularizer == Regularizer::si;

  LossAndGradient out;
  Matrix total_seeds;
  Matrix new_seeds;
  out.value = pair_objective(forward.scores(), gathered, model.learned_tasks() - 1, labels,
                             config.lambda, &total_seeds, want_new ? &new_seeds : nullptr);
  out.gradient = forward.backward_scores(total_seeds, trunk);
  if (want_new) out.new_gradient = forward.backward_scores(new_seeds, trunk);
  if (is_quadratic(config.regularizer)) {
    const auto& imp = importance_of(state, config.regularizer);
    out.value.penalty = quadratic_penalty(model, imp);
    out.value.total += config.lambda * out.value.penalty;
    if (trunk) out.gradient += config.lambda * quadratic_penalty_gradient(model, imp);
  }
  return out;
}

}  // namespace clqa
