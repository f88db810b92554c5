#pragma once

#include "clqa/model.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace clqa {

enum class WeightingMode { adaptive, uniform, hard, oracle, latest };

struct WeightingConfig {
  Real tau = 16;
  WeightingMode mode = WeightingMode::adaptive;
};

std::string to_string(WeightingMode mode);
WeightingMode weighting_mode_from_string(const std::string& name);

struct KMeansResult {
  TaskSummary summary;
  std::vector<Real> objective_trace;  // within-cluster SSE after every assignment step
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding over the columns of `features`.
/// `k` is clamped to the number of columns. Stops when assignments are stable
/// or after `max_iterations`.
KMeansResult kmeans(const Matrix& features, Eigen::Index k, std::uint64_t seed,
                    std::size_t max_iterations = 100);

TaskSummary kmeans_summarize(const Matrix& features, Eigen::Index k, std::uint64_t seed);

/// Smallest Euclidean distance from `point` to any centroid.
Real min_distance(const TaskSummary& summary, const Vector& point);

/// Softmin over distances at temperature tau, evaluated after subtracting the
/// minimum distance.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> adaptive_weights(
    const Eigen::MatrixBase<Derived>& distances, typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  using Out = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (distances.size() == 0) throw std::invalid_argument("adaptive_weights: no distances");
  if (tau < Scalar(0)) throw std::invalid_argument("adaptive_weights: negative temperature");
  const Scalar shift = distances.minCoeff();
  Out w = (-tau * (distances.array() - shift)).exp().matrix();
  return w / w.sum();
}

/// One-hot weights at the smallest distance; ties go to the lowest index.
Vector hard_weights(const Vector& distances);

/// Per-task minimal distances d_t(x) for one stable-feature vector.
Vector task_distances(const ContinualModel& model, const Vector& stable);

/// Head weights for one input under the given weighting rule.
Vector head_weights(const ContinualModel& model, const Vector& stable,
                    const WeightingConfig& config, std::optional<std::size_t> oracle_task);

/// Fused quality score: head scores combined by the weighting rule.
Real predict_quality(const ContinualModel& model, const Vector& x, const WeightingConfig& config,
                     std::optional<std::size_t> oracle_task = std::nullopt);

/// Batched predict_quality over the columns of `inputs`.
Vector predict_quality(const ContinualModel& model, const Matrix& inputs,
                       const WeightingConfig& config,
                       std::optional<std::size_t> oracle_task = std::nullopt);

}  // namespace clqa
