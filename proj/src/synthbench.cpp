#include "clqa/synthbench.hpp"
#include "clqa/dataset_io.hpp"
#include "clqa/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace clqa {

namespace {

constexpr std::uint64_t kCenterSalt = 0x43454e54;
constexpr std::uint64_t kSampleSalt = 0x53414d50;
constexpr std::uint64_t kNoiseSalt = 0x4e4f4953;
constexpr std::uint64_t kOffsetSalt = 0x4f464653;
constexpr std::uint64_t kTaskSalt = 0x5441534b;

// Default benchmark geometry.
constexpr Real kCommonOffsetNorm = 8.0;
constexpr Real kTaskOffsetNorm = 1.2;

Vector gaussian_vector(Eigen::Index n, Real stddev, Rng& rng) {
  std::normal_distribution<Real> normal(0.0, stddev);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

std::string hex_tag(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%08llx", static_cast<unsigned long long>(value & 0xffffffffULL));
  return buf;
}

}  // namespace

Real QualityMap::operator()(Real g) const {
  switch (kind) {
    case Kind::identity: return g;
    case Kind::affine: return a * g + b;
    case Kind::logistic: return 1.0 / (1.0 + std::exp(-g / scale));
    case Kind::cube_root: return std::cbrt(g);
  }
  return g;
}

void QualityMap::validate() const {
  if (kind == Kind::affine && !(a > 0)) throw std::invalid_argument("affine quality map needs a > 0");
  if (kind == Kind::logistic && !(scale > 0)) throw std::invalid_argument("logistic quality map needs scale > 0");
}

std::string QualityMap::name() const {
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::affine: return "affine";
    case Kind::logistic: return "logistic";
    case Kind::cube_root: return "cube-root";
  }
  return "unknown";
}

void TaskSpec::validate() const {
  quality_map.validate();
  if (n_train < 2 || n_test < 2) throw std::invalid_argument("task '" + name + "': needs >= 2 train and test samples");
  if (n_clusters < 1) throw std::invalid_argument("task '" + name + "': n_clusters must be positive");
  if (!(cluster_spread > 0)) throw std::invalid_argument("task '" + name + "': cluster_spread must be positive");
  if (center_scale < 0) throw std::invalid_argument("task '" + name + "': center_scale must be non-negative");
  if (feature_dim <= 0) throw std::invalid_argument("task '" + name + "': feature_dim must be positive");
  if (noise_std && *noise_std < 0) throw std::invalid_argument("task '" + name + "': negative noise_std");
  if (!(relative_noise >= 0)) throw std::invalid_argument("task '" + name + "': negative relative_noise");
  if (shift_offset.size() != feature_dim) {
    throw std::invalid_argument("task '" + name + "': shift_offset dimension mismatch");
  }
}

Real LatentModel::operator()(const Vector& x) const {
  return output_weight.dot((hidden_weight * x + hidden_bias).cwiseMax(0.0));
}

LatentModel LatentModel::random(Eigen::Index input_dim, Eigen::Index hidden, Real gain,
                                std::uint64_t seed) {
  Rng rng(seed);
  LatentModel g;
  g.hidden_weight = gaussian_vector(hidden * input_dim, gain / std::sqrt(static_cast<Real>(input_dim)), rng)
                        .reshaped(hidden, input_dim);
  g.hidden_bias = gaussian_vector(hidden, 1.0, rng);
  g.output_weight = gaussian_vector(hidden, 1.0 / std::sqrt(static_cast<Real>(hidden)), rng);
  return g;
}

Matrix task_centers(const TaskSpec& spec, std::uint64_t seed) {
  Rng rng(mix_seed(seed, kCenterSalt));
  Matrix centers(spec.feature_dim, static_cast<Eigen::Index>(spec.n_clusters));
  for (Eigen::Index c = 0; c < centers.cols(); ++c) {
    centers.col(c) = spec.shift_offset + gaussian_vector(spec.feature_dim, spec.center_scale, rng);
  }
  return centers;
}

TaskDataset generate_task(const TaskSpec& spec, const LatentModel& latent, std::uint64_t seed) {
  spec.validate();
  if (latent.hidden_weight.cols() != spec.feature_dim) {
    throw std::invalid_argument("task '" + spec.name + "': latent model dimension mismatch");
  }
  const Matrix centers = task_centers(spec, seed);
  Rng rng(mix_seed(seed, kSampleSalt));
  std::uniform_int_distribution<Eigen::Index> pick(0, centers.cols() - 1);
  const std::size_t total = spec.n_train + spec.n_test;

  std::vector<QualitySample> samples(total);
  std::vector<Real> latent_values(total);
  std::vector<Real> clean(total);
  const std::string tag = spec.name + "_" + hex_tag(seed) + "_";
  for (std::size_t i = 0; i < total; ++i) {
    auto& s = samples[i];
    s.id = tag + std::to_string(i);
    s.features = centers.col(pick(rng)) + gaussian_vector(spec.feature_dim, spec.cluster_spread, rng);
    latent_values[i] = latent(s.features);
    clean[i] = spec.quality_map(latent_values[i]);
  }
  const auto [lo, hi] = std::minmax_element(latent_values.begin(), latent_values.end());
  const Real noise = spec.noise_std.value_or(spec.relative_noise * (*hi - *lo));

  Rng noise_rng(mix_seed(seed, kNoiseSalt));
  std::normal_distribution<Real> normal(0.0, 1.0);
  for (std::size_t i = 0; i < total; ++i) {
    samples[i].mos = clean[i] + (noise > 0 ? noise * normal(noise_rng) : 0.0);
    samples[i].std = noise;
  }

  TaskDataset task;
  task.name = spec.name;
  task.dim = spec.feature_dim;
  task.train.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(spec.n_train));
  task.test.assign(samples.begin() + static_cast<std::ptrdiff_t>(spec.n_train), samples.end());
  return task;
}

Real min_center_separation(const Matrix& centers_a, const Matrix& centers_b) {
  Real best = std::numeric_limits<Real>::infinity();
  for (Eigen::Index i = 0; i < centers_a.cols(); ++i) {
    best = std::min(best, (centers_b.colwise() - centers_a.col(i)).colwise().norm().minCoeff());
  }
  return best;
}

GeneratedSequence generate_sequence(const SequenceSpec& spec) {
  if (spec.tasks.size() < 2) throw std::invalid_argument("sequence needs at least two tasks");
  const auto dim = spec.tasks.front().feature_dim;
  for (const auto& t : spec.tasks) {
    t.validate();
    if (t.feature_dim != dim) throw std::invalid_argument("all tasks must share feature_dim");
  }
  for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (spec.tasks[i].name == spec.tasks[j].name) throw std::invalid_argument("duplicate task name");
    }
  }

  GeneratedSequence out;
  out.latent = LatentModel::random(dim, spec.latent.hidden, spec.latent.gain, spec.latent.seed);
  // Center the hidden units on the mean task location so that g bends
  // between tasks instead of being almost linear over the whole sequence.
  Vector anchor = Vector::Zero(dim);
  for (const auto& t : spec.tasks) anchor += t.shift_offset;
  anchor /= static_cast<Real>(spec.tasks.size());
  out.latent.hidden_bias -= out.latent.hidden_weight * anchor;
  std::vector<Matrix> centers;
  for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
    const auto& task = spec.tasks[t];
    bool placed = false;
    for (std::size_t attempt = 0; attempt < spec.max_placement_attempts && !placed; ++attempt) {
      const std::uint64_t seed = mix_seed(spec.seed, kTaskSalt + t * 1000003ULL + attempt);
      Matrix c = task_centers(task, seed);
      placed = true;
      for (std::size_t k = 0; k < t; ++k) {
        const Real needed = 4.0 * std::max(task.cluster_spread, spec.tasks[k].cluster_spread);
        if (min_center_separation(c, centers[k]) < needed) {
          placed = false;
          break;
        }
      }
      if (placed) {
        centers.push_back(std::move(c));
        out.task_seeds.push_back(seed);
      }
    }
    if (!placed) {
      throw std::invalid_argument("task '" + task.name +
                                  "': cannot satisfy the inter-task separation constraint");
    }
  }

  for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
    out.tasks.push_back(generate_task(spec.tasks[t], out.latent, out.task_seeds[t]));
    out.noise_std.push_back(out.tasks.back().train.front().std);
  }

  nlohmann::ordered_json manifest;
  manifest["seed"] = spec.seed;
  manifest["latent"] = {{"hidden", spec.latent.hidden}, {"gain", spec.latent.gain}, {"seed", spec.latent.seed}};
  auto tasks = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
    const auto& ts = spec.tasks[t];
    nlohmann::ordered_json j;
    j["name"] = ts.name;
    j["n_train"] = ts.n_train;
    j["n_test"] = ts.n_test;
    j["n_clusters"] = ts.n_clusters;
    j["cluster_spread"] = ts.cluster_spread;
    j["center_scale"] = ts.center_scale;
    j["feature_dim"] = ts.feature_dim;
    j["quality_map"] = {{"kind", ts.quality_map.name()},
                        {"a", ts.quality_map.a},
                        {"b", ts.quality_map.b},
                        {"scale", ts.quality_map.scale}};
    j["relative_noise"] = ts.relative_noise;
    j["noise_std"] = out.noise_std[t];
    j["shift_offset"] = std::vector<Real>(ts.shift_offset.begin(), ts.shift_offset.end());
    j["task_seed"] = out.task_seeds[t];
    j["train_file"] = ts.name + "_train.csv";
    j["test_file"] = ts.name + "_test.csv";
    tasks.push_back(std::move(j));
  }
  manifest["tasks"] = std::move(tasks);
  out.manifest = manifest.dump(2) + "\n";
  return out;
}

SequenceSpec default_sequence_spec(std::uint64_t seed, std::size_t tasks) {
  constexpr Eigen::Index dim = 32;
  SequenceSpec spec;
  spec.seed = seed;
  spec.latent.seed = mix_seed(seed, 0x4c4154);
  spec.latent.gain = 2;
  Rng rng(mix_seed(seed, kOffsetSalt));
  const Vector common = kCommonOffsetNorm * gaussian_vector(dim, 1.0, rng).normalized();
  for (std::size_t t = 0; t < tasks; ++t) {
    TaskSpec ts;
    ts.name = "synth" + std::to_string(t + 1);
    ts.feature_dim = dim;
    ts.center_scale = 0.2;
    ts.cluster_spread = 0.35;
    ts.shift_offset = common + kTaskOffsetNorm * gaussian_vector(dim, 1.0, rng).normalized();
    switch (t % 4) {
      case 0: ts.quality_map = {QualityMap::Kind::identity}; break;
      case 1: ts.quality_map = {QualityMap::Kind::affine, 3.0, -1.0}; break;
      case 2: ts.quality_map = {QualityMap::Kind::logistic, 1, 0, 1.0}; break;
      case 3: ts.quality_map = {QualityMap::Kind::cube_root}; break;
    }
    spec.tasks.push_back(std::move(ts));
  }
  return spec;
}

std::vector<std::vector<std::size_t>> benchmark_orders(std::size_t tasks) {
  std::vector<std::size_t> reverse(tasks), interleaved, swapped(tasks), rotated(tasks);
  for (std::size_t i = 0; i < tasks; ++i) reverse[i] = tasks - 1 - i;
  for (std::size_t i = 0; i < tasks; i += 2) interleaved.push_back(i);
  for (std::size_t i = 1; i < tasks; i += 2) interleaved.push_back(i);
  for (std::size_t i = 0; i < tasks; ++i) swapped[i] = (i % 2 == 0 && i + 1 < tasks) ? i + 1 : (i % 2 ? i - 1 : i);
  for (std::size_t i = 0; i < tasks; ++i) rotated[i] = (i + tasks / 2) % tasks;
  return {reverse, interleaved, swapped, rotated};
}

}  // namespace clqa
