#pragma once

#include "clqa/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace clqa {

/// Strictly increasing rescaling of the latent quality into a dataset's MOS scale.
struct QualityMap {
  enum class Kind { identity, affine, logistic, cube_root };
  Kind kind = Kind::identity;
  Real a = 1;      // affine slope
  Real b = 0;      // affine intercept
  Real scale = 1;  // logistic temperature

  Real operator()(Real g) const;
  void validate() const;
  std::string name() const;
};

struct TaskSpec {
  std::string name;
  std::size_t n_train = 600;
  std::size_t n_test = 150;
  std::size_t n_clusters = 4;
  Real cluster_spread = 0.25;  // per-coordinate std of samples around a cluster center
  Real center_scale = 0.5;     // per-coordinate std of cluster centers around shift_offset
  Eigen::Index feature_dim = 32;
  QualityMap quality_map;
  /// Opinion std in MOS units; when unset, `relative_noise` times the range
  /// of the latent quality g over the task's samples.
  std::optional<Real> noise_std;
  Real relative_noise = 0.05;
  Vector shift_offset;

  void validate() const;
};

/// Shared ground-truth quality g: a frozen random two-layer rectifier network.
struct LatentModel {
  Matrix hidden_weight;
  Vector hidden_bias;
  Vector output_weight;

  Real operator()(const Vector& x) const;
  /// Hidden weights are N(0, gain^2 / d); biases N(0, 1).
  static LatentModel random(Eigen::Index input_dim, Eigen::Index hidden, Real gain, std::uint64_t seed);
};

struct LatentSpec {
  Eigen::Index hidden = 64;
  Real gain = 1;
  std::uint64_t seed = 0;
};

struct SequenceSpec {
  std::vector<TaskSpec> tasks;
  LatentSpec latent;
  std::uint64_t seed = 0;
  std::size_t max_placement_attempts = 100;
};

/// Cluster centers (columns) of a task for a given draw seed.
Matrix task_centers(const TaskSpec& spec, std::uint64_t seed);

TaskDataset generate_task(const TaskSpec& spec, const LatentModel& latent, std::uint64_t seed);

struct GeneratedSequence {
  std::vector<TaskDataset> tasks;
  LatentModel latent;
  std::vector<std::uint64_t> task_seeds;
  std::vector<Real> noise_std;  // resolved per task
  std::string manifest;         // JSON
};

/// Generates every task from one shared latent model, redrawing a task's
/// cluster centers until all inter-task center distances are at least
/// 4 x the larger cluster spread. The latent hidden units are shifted to be
/// centered on the mean shift_offset of the sequence.
GeneratedSequence generate_sequence(const SequenceSpec& spec);

/// Default benchmark: 4 tasks in d = 32 with monotone maps cycling through
/// identity, affine(3, -1), logistic and cube-root.
SequenceSpec default_sequence_spec(std::uint64_t seed, std::size_t tasks = 4);

/// The four evaluation orders: reverse, interleaved, pairwise swapped, rotated.
std::vector<std::vector<std::size_t>> benchmark_orders(std::size_t tasks);

/// Smallest distance between any center of task a and any center of task b.
Real min_center_separation(const Matrix& centers_a, const Matrix& centers_b);

}  // namespace clqa
