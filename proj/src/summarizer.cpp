#include "clqa/summarizer.hpp"
#include "clqa/random.hpp"

#include <limits>
#include <stdexcept>

namespace clqa {

std::string to_string(WeightingMode mode) {
  switch (mode) {
    case WeightingMode::adaptive: return "adaptive";
    case WeightingMode::uniform: return "uniform";
    case WeightingMode::hard: return "hard";
    case WeightingMode::oracle: return "oracle";
    case WeightingMode::latest: return "latest";
  }
  return "unknown";
}

WeightingMode weighting_mode_from_string(const std::string& name) {
  if (name == "adaptive") return WeightingMode::adaptive;
  if (name == "uniform") return WeightingMode::uniform;
  if (name == "hard") return WeightingMode::hard;
  if (name == "oracle") return WeightingMode::oracle;
  if (name == "latest") return WeightingMode::latest;
  throw std::invalid_argument("unknown weighting mode '" + name + "'");
}

namespace {

std::vector<Eigen::Index> kmeanspp_seeds(const Matrix& x, Eigen::Index k, Rng& rng) {
  const Eigen::Index n = x.cols();
  std::vector<Eigen::Index> seeds;
  seeds.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  seeds.push_back(first(rng));
  Vector d2 = (x.colwise() - x.col(seeds[0])).colwise().squaredNorm().transpose();
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  taken[static_cast<std::size_t>(seeds[0])] = true;
  while (static_cast<Eigen::Index>(seeds.size()) < k) {
    const Real total = d2.sum();
    Eigen::Index next = -1;
    if (total > 0) {
      std::uniform_real_distribution<Real> u(0.0, total);
      const Real target = u(rng);
      Real acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0 && acc >= target) {
          next = i;
          break;
        }
      }
      if (next < 0) {
        for (Eigen::Index i = n; i-- > 0;) {
          if (d2[i] > 0) {
            next = i;
            break;
          }
        }
      }
    } else {
      // Only duplicates of existing seeds remain.
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) {
          next = i;
          break;
        }
      }
    }
    seeds.push_back(next);
    taken[static_cast<std::size_t>(next)] = true;
    d2 = d2.cwiseMin((x.colwise() - x.col(next)).colwise().squaredNorm().transpose());
  }
  return seeds;
}

}  // namespace

KMeansResult kmeans(const Matrix& features, Eigen::Index k, std::uint64_t seed,
                    std::size_t max_iterations) {
  const Eigen::Index n = features.cols();
  if (n == 0) throw std::invalid_argument("kmeans: empty feature list");
  if (k < 1) throw std::invalid_argument("kmeans: k must be positive");
  if (!features.allFinite()) throw std::invalid_argument("kmeans: non-finite features");
  k = std::min(k, n);

  Rng rng(seed);
  const auto seeds = kmeanspp_seeds(features, k, rng);
  Matrix centroids(features.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) centroids.col(j) = features.col(seeds[static_cast<std::size_t>(j)]);

  KMeansResult result;
  std::vector<Eigen::Index> assignment(static_cast<std::size_t>(n), -1);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    Real sse = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      const Real d = (centroids.colwise() - features.col(i)).colwise().squaredNorm().minCoeff(&best);
      sse += d;
      auto& slot = assignment[static_cast<std::size_t>(i)];
      if (slot != best) {
        slot = best;
        changed = true;
      }
    }
    result.objective_trace.push_back(sse);
    result.iterations = iter + 1;
    if (!changed) break;

    Matrix sums = Matrix::Zero(features.rows(), k);
    Vector counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto j = assignment[static_cast<std::size_t>(i)];
      sums.col(j) += features.col(i);
      counts[j] += 1;
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      if (counts[j] > 0) centroids.col(j) = sums.col(j) / counts[j];
    }
  }
  result.summary.centroids = std::move(centroids);
  return result;
}

TaskSummary kmeans_summarize(const Matrix& features, Eigen::Index k, std::uint64_t seed) {
  return kmeans(features, k, seed).summary;
}

Real min_distance(const TaskSummary& summary, const Vector& point) {
  if (point.size() != summary.dim()) throw std::invalid_argument("min_distance: dimension mismatch");
  if (summary.k() == 0) throw std::invalid_argument("min_distance: empty summary");
  return std::sqrt((summary.centroids.colwise() - point).colwise().squaredNorm().minCoeff());
}

Vector hard_weights(const Vector& distances) {
  if (distances.size() == 0) throw std::invalid_argument("hard_weights: no distances");
  Eigen::Index best = 0;
  for (Eigen::Index t = 1; t < distances.size(); ++t) {
    if (distances[t] < distances[best]) best = t;
  }
  Vector w = Vector::Zero(distances.size());
  w[best] = 1;
  return w;
}

Vector task_distances(const ContinualModel& model, const Vector& stable) {
  Vector d(static_cast<Eigen::Index>(model.summaries.size()));
  for (std::size_t t = 0; t < model.summaries.size(); ++t) {
    d[static_cast<Eigen::Index>(t)] = min_distance(model.summaries[t], stable);
  }
  return d;
}

Vector head_weights(const ContinualModel& model, const Vector& stable,
                    const WeightingConfig& config, std::optional<std::size_t> oracle_task) {
  const auto count = static_cast<Eigen::Index>(model.learned_tasks());
  if (count == 0) throw std::invalid_argument("predict_quality: model has no heads");
  Vector w = Vector::Zero(count);
  switch (config.mode) {
    case WeightingMode::latest:
      w[count - 1] = 1;
      return w;
    case WeightingMode::uniform:
      return Vector::Constant(count, 1.0 / static_cast<Real>(count));
    case WeightingMode::oracle:
      if (!oracle_task) throw std::invalid_argument("oracle weighting requires a task index");
      if (*oracle_task >= model.learned_tasks()) {
        throw std::out_of_range("oracle task index out of range");
      }
      w[static_cast<Eigen::Index>(*oracle_task)] = 1;
      return w;
    case WeightingMode::adaptive:
    case WeightingMode::hard:
      break;
  }
  if (model.summaries.size() != model.heads.size()) {
    throw std::invalid_argument("distance-based weighting needs one summary per head");
  }
  const Vector d = task_distances(model, stable);
  return config.mode == WeightingMode::hard ? hard_weights(d) : adaptive_weights(d, config.tau);
}

Real predict_quality(const ContinualModel& model, const Vector& x, const WeightingConfig& config,
                     std::optional<std::size_t> oracle_task) {
  return predict_quality(model, Matrix(x), config, oracle_task)[0];
}

Vector predict_quality(const ContinualModel& model, const Matrix& inputs,
                       const WeightingConfig& config, std::optional<std::size_t> oracle_task) {
  const BatchForward forward(model, inputs);
  const bool needs_stable =
      config.mode == WeightingMode::adaptive || config.mode == WeightingMode::hard;
  const Matrix stable = needs_stable ? stable_features(model, inputs) : Matrix();
  Vector q(inputs.cols());
  const Vector empty;
  for (Eigen::Index i = 0; i < inputs.cols(); ++i) {
    const Vector w =
        head_weights(model, needs_stable ? Vector(stable.col(i)) : empty, config, oracle_task);
    q[i] = w.dot(forward.scores().col(i));
  }
  return q;
}

}  // namespace clqa
