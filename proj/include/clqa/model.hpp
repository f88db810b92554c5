#pragma once

#include "clqa/numeric.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace clqa {

enum class Activation { rectifier };

struct TrunkConfig {
  Eigen::Index input_dim = 0;
  std::vector<Eigen::Index> layer_widths{256, 128};
  std::size_t frozen_prefix_layers = 0;
  Activation activation = Activation::rectifier;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;
};

/// K centroids (one per column) of normalized stable features for one task.
struct TaskSummary {
  std::size_t task_index = 0;
  Matrix centroids;

  Eigen::Index k() const { return centroids.cols(); }
  Eigen::Index dim() const { return centroids.rows(); }
};

/// A unit vector, or zero with `degenerate` set when the pre-image was zero.
struct Embedding {
  Vector values;
  bool degenerate = false;
};

/// Offsets of every parameter block inside the flat parameter vector.
/// Frozen layers come first, so the frozen set is the prefix [0, frozen_size).
struct ParameterLayout {
  std::vector<Eigen::Index> layer_offsets;  // weight block start, bias follows
  std::vector<Eigen::Index> head_offsets;
  Eigen::Index frozen_size = 0;
  Eigen::Index trunk_size = 0;
  Eigen::Index total_size = 0;

  Eigen::Index plastic_trunk_size() const { return trunk_size - frozen_size; }
};

/// Trunk of dense rectifier layers, the first `frozen_prefix_layers` of which
/// never change, plus one bias-free linear head per learned task.
class ContinualModel {
 public:
  TrunkConfig config;
  std::vector<DenseLayer> layers;
  std::vector<Vector> heads;
  std::vector<TaskSummary> summaries;

  std::size_t learned_tasks() const { return heads.size(); }
  Eigen::Index input_dim() const { return config.input_dim; }
  /// Embedding width D (the input width for an identity trunk).
  Eigen::Index embedding_dim() const;
  /// Width of the frozen-prefix output.
  Eigen::Index stable_dim() const;

  /// Appends a fan-in scaled random head; its values depend only on the
  /// model seed and the head's index.
  std::size_t add_head();

  ParameterLayout layout() const;
  Vector parameters() const;
  void set_parameters(const Vector& flat);

  /// Heads as columns of a D x T matrix.
  Matrix head_matrix() const;

  void validate() const;
};

ContinualModel init_model(const TrunkConfig& config);

Embedding stable_features(const ContinualModel& model, const Vector& x);
/// Column-wise stable features of a d x n input matrix.
Matrix stable_features(const ContinualModel& model, const Matrix& inputs);

Embedding embed(const ContinualModel& model, const Vector& x);

/// Inner product of head `t` (0-based) with the embedding.
Real head_score(const ContinualModel& model, std::size_t t, const Embedding& e);

/// Thurstone Case V preference of x over y under head `t` with unit prediction variance.
Real predicted_preference(const ContinualModel& model, std::size_t t, const Vector& x,
                          const Vector& y);

/// Preference probability from two head scores.
inline Real preference_from_scores(Real score_x, Real score_y) {
  return std_normal_cdf((score_x - score_y) / std::numbers::sqrt2);
}

/// dL/dp for the preference of column `first` over column `second` under `head`.
struct PairSeed {
  Eigen::Index first = 0;
  Eigen::Index second = 0;
  std::size_t head = 0;
  Real d_loss_d_preference = 0;
};

/// Cached forward pass of a batch of inputs (one per column), reusable for
/// scoring and for reverse-mode gradients.
class BatchForward {
 public:
  BatchForward(const ContinualModel& model, Matrix inputs);

  Eigen::Index size() const { return inputs_.cols(); }
  /// D x n unit embeddings (zero columns where degenerate).
  const Matrix& embeddings() const { return embeddings_; }
  /// T x n head scores.
  const Matrix& scores() const { return scores_; }
  bool degenerate(Eigen::Index column) const { return norms_[column] == 0; }

  Real preference(std::size_t head, Eigen::Index first, Eigen::Index second) const {
    return preference_from_scores(scores_(head, first), scores_(head, second));
  }

  /// Flat gradient of  sum_{k,i} seeds(k,i) * score(k,i)  over all parameters.
  /// Frozen entries are zero. With `trunk` false only head blocks are filled.
  Vector backward_scores(const Matrix& score_seeds, bool trunk = true) const;

  /// Converts preference-level seeds into score seeds (T x n).
  Matrix score_seeds(std::span<const PairSeed> seeds) const;

  Vector backward(std::span<const PairSeed> seeds, bool trunk = true) const;

 private:
  const ContinualModel& model_;
  Matrix inputs_;
  std::vector<Matrix> activations_;  // post-rectifier outputs of every layer
  Vector norms_;
  Matrix embeddings_;
  Matrix scores_;
};

/// Head-only gradient given precomputed embeddings: dL/dpsi_k = E * seeds.row(k)^T.
Vector head_gradient(const ContinualModel& model, const Matrix& embeddings,
                     const Matrix& score_seeds);

}  // namespace clqa
