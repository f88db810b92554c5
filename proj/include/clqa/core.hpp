#pragma once

#include "clqa/numeric.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace clqa {

/// One rated item: a fixed-length feature vector with its opinion statistics.
struct QualitySample {
  std::string id;
  Vector features;
  Real mos = 0;  // mean opinion score, dataset-native scale
  Real std = 0;  // opinion standard deviation, same scale as mos
};

struct TaskDataset {
  std::string name;
  Eigen::Index dim = 0;
  std::vector<QualitySample> train;
  std::vector<QualitySample> test;

  /// Throws std::invalid_argument on dimension, finiteness, std or id-overlap violations.
  void validate() const;
};

/// Ordered pair of training-sample indices with the probability that `first`
/// is perceived better than `second`.
struct RankedPair {
  std::size_t first = 0;
  std::size_t second = 0;
  Real p = 0.5;
};

struct PairConfig {
  std::size_t pairs_per_task = 2000;
  std::uint64_t seed = 0;
};

/// Preference probability under a Gaussian opinion model. When both
/// deviations are zero the result is the step 1 / 0.5 / 0.
Real thurstone_probability(Real mu_x, Real sigma_x, Real mu_y, Real sigma_y);

Real thurstone_probability(const QualitySample& x, const QualitySample& y);

/// Samples `pairs_per_task` distinct unordered pairs uniformly without
/// replacement from the training split, annotated with ground-truth
/// probabilities. Orientation of each pair is a seeded coin flip.
std::vector<RankedPair> build_pairs(const TaskDataset& dataset, const PairConfig& config);

/// Number of unordered pairs over `n` items.
std::size_t pair_count(std::size_t n);

}  // namespace clqa
