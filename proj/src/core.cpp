#include "clqa/core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace clqa {

void TaskDataset::validate() const {
  if (dim <= 0) throw std::invalid_argument("dataset '" + name + "': dimension must be positive");
  std::unordered_set<std::string> train_ids;
  auto check = [&](const QualitySample& s, const char* split) {
    if (s.features.size() != dim) {
      throw std::invalid_argument("dataset '" + name + "': sample '" + s.id + "' in " + split +
                                  " has dimension " + std::to_string(s.features.size()) +
                                  ", expected " + std::to_string(dim));
    }
    if (!s.features.allFinite() || !std::isfinite(s.mos) || !std::isfinite(s.std)) {
      throw std::invalid_argument("dataset '" + name + "': sample '" + s.id + "' is not finite");
    }
    if (s.std < 0) {
      throw std::invalid_argument("dataset '" + name + "': sample '" + s.id + "' has negative std");
    }
  };
  for (const auto& s : train) {
    check(s, "train");
    train_ids.insert(s.id);
  }
  for (const auto& s : test) {
    check(s, "test");
    if (train_ids.count(s.id)) {
      throw std::invalid_argument("dataset '" + name + "': id '" + s.id + "' in both train and test");
    }
  }
}

Real thurstone_probability(Real mu_x, Real sigma_x, Real mu_y, Real sigma_y) {
  if (sigma_x < 0 || sigma_y < 0) throw std::invalid_argument("negative opinion deviation");
  const Real variance = sigma_x * sigma_x + sigma_y * sigma_y;
  if (variance == 0) {
    if (mu_x > mu_y) return 1;
    if (mu_x < mu_y) return 0;
    return 0.5;
  }
  return std_normal_cdf((mu_x - mu_y) / std::sqrt(variance));
}

Real thurstone_probability(const QualitySample& x, const QualitySample& y) {
  return thurstone_probability(x.mos, x.std, y.mos, y.std);
}

std::size_t pair_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

namespace {

// Row-major enumeration of {(i, j) : i < j}; row i starts at row_start[i].
std::pair<std::size_t, std::size_t> decode_pair(const std::vector<std::size_t>& row_start,
                                                std::size_t index) {
  const auto it = std::upper_bound(row_start.begin(), row_start.end(), index);
  const auto i = static_cast<std::size_t>(std::distance(row_start.begin(), it)) - 1;
  return {i, i + 1 + (index - row_start[i])};
}

}  // namespace

std::vector<RankedPair> build_pairs(const TaskDataset& dataset, const PairConfig& config) {
  const std::size_t n = dataset.train.size();
  if (n < 2) throw std::invalid_argument("build_pairs: need at least two training samples");
  const std::size_t total = pair_count(n);
  if (config.pairs_per_task > total) {
    throw std::invalid_argument("build_pairs: requested " + std::to_string(config.pairs_per_task) +
                                " pairs but only " + std::to_string(total) + " exist");
  }

  std::vector<std::size_t> row_start(n - 1);
  std::size_t acc = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    row_start[i] = acc;
    acc += n - 1 - i;
  }

  // Floyd's sampling of distinct linear indices.
  std::mt19937_64 rng(config.seed);
  std::unordered_set<std::size_t> chosen;
  std::vector<std::size_t> order;
  chosen.reserve(config.pairs_per_task * 2);
  order.reserve(config.pairs_per_task);
  for (std::size_t j = total - config.pairs_per_task; j < total; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    std::size_t t = pick(rng);
    if (!chosen.insert(t).second) {
      chosen.insert(j);
      t = j;
    }
    order.push_back(t);
  }

  std::vector<RankedPair> pairs;
  pairs.reserve(order.size());
  std::bernoulli_distribution flip(0.5);
  for (std::size_t index : order) {
    auto [i, j] = decode_pair(row_start, index);
    if (flip(rng)) std::swap(i, j);
    pairs.push_back({i, j, thurstone_probability(dataset.train[i], dataset.train[j])});
  }
  return pairs;
}

}  // namespace clqa
