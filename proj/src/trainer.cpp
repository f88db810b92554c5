#include "clqa/trainer.hpp"
#include "clqa/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace clqa {

namespace {

struct MethodInfo {
  Method method;
  const char* name;
  TrainingFamily family;
  WeightingMode inference;
};

using K = TrainingFamily::Kind;
using R = Regularizer;
using W = WeightingMode;

const MethodInfo kMethods[] = {
    {Method::SL, "SL", {K::separate, R::none}, W::latest},
    {Method::JL, "JL", {K::joint, R::none}, W::latest},
    {Method::SH_CL, "SH-CL", {K::single_head, R::none}, W::latest},
    {Method::MH_CL, "MH-CL", {K::multi_head, R::none}, W::latest},
    {Method::MH_CL_AW, "MH-CL-AW", {K::multi_head, R::none}, W::adaptive},
    {Method::MH_CL_O, "MH-CL-O", {K::multi_head, R::none}, W::oracle},
    {Method::LwF, "LwF", {K::multi_head, R::lwf}, W::latest},
    {Method::LwF_O, "LwF-O", {K::multi_head, R::lwf}, W::oracle},
    {Method::LwF_SW, "LwF-SW", {K::multi_head, R::lwf}, W::uniform},
    {Method::LwF_HW, "LwF-HW", {K::multi_head, R::lwf}, W::hard},
    {Method::LwF_AW, "LwF-AW", {K::multi_head, R::lwf}, W::adaptive},
    {Method::EWC, "EWC", {K::multi_head, R::ewc}, W::latest},
    {Method::EWC_AW, "EWC-AW", {K::multi_head, R::ewc}, W::adaptive},
    {Method::SI, "SI", {K::multi_head, R::si}, W::latest},
    {Method::SI_AW, "SI-AW", {K::multi_head, R::si}, W::adaptive},
    {Method::MAS, "MAS", {K::multi_head, R::mas}, W::latest},
    {Method::MAS_AW, "MAS-AW", {K::multi_head, R::mas}, W::adaptive},
};

const MethodInfo& info(Method method) {
  for (const auto& m : kMethods) {
    if (m.method == method) return m;
  }
  throw std::invalid_argument("unknown method");
}

constexpr std::uint64_t kShuffleSalt = 0x53485546;
constexpr std::uint64_t kKMeansSalt = 0x4b4d4541;
constexpr std::uint64_t kPairSalt = 0x50414952;

std::uint64_t name_hash(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool is_quadratic(Regularizer r) { return r == R::ewc || r == R::si || r == R::mas; }

/// Funnels every dataset read of a run through the access observer.
class TaskStream {
 public:
  TaskStream(std::span<const TaskDataset> tasks, const AccessObserver& observer)
      : tasks_(tasks), observer_(observer) {}

  std::size_t size() const { return tasks_.size(); }

  const TaskDataset& for_training(std::size_t current, std::size_t dataset) const {
    notify(AccessEvent::Phase::training, current, dataset, AccessEvent::Split::train);
    return tasks_[dataset];
  }

  std::span<const TaskDataset> for_evaluation(std::size_t current) const {
    for (std::size_t k = 0; k <= current; ++k) {
      notify(AccessEvent::Phase::evaluation, current, k, AccessEvent::Split::test);
    }
    return tasks_.subspan(0, current + 1);
  }

 private:
  void notify(AccessEvent::Phase phase, std::size_t current, std::size_t dataset,
              AccessEvent::Split split) const {
    if (observer_) observer_({phase, current, dataset, split});
  }

  std::span<const TaskDataset> tasks_;
  const AccessObserver& observer_;
};

Matrix sample_matrix(std::span<const QualitySample> samples) {
  Matrix m(samples.front().features.size(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = samples[i].features;
  return m;
}

}  // namespace

std::string to_string(Method method) { return info(method).name; }

Method method_from_string(const std::string& name) {
  for (const auto& m : kMethods) {
    if (name == m.name) return m.method;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> out;
    for (const auto& m : kMethods) out.push_back(m.method);
    return out;
  }();
  return methods;
}

TrainingFamily training_family(Method method) { return info(method).family; }

WeightingConfig inference_weighting(Method method, Real tau) {
  const auto mode = info(method).inference;
  if (mode == W::uniform) return {0.0, W::uniform};
  return {tau, mode};
}

Real default_lambda(Regularizer regularizer) {
  switch (regularizer) {
    case R::none: return 0;
    case R::lwf: return 1;
    case R::ewc: return 10000;
    case R::si: return 100;
    case R::mas: return 10;
  }
  return 0;
}

Real TrainConfig::effective_lambda() const {
  return lambda.value_or(default_lambda(training_family(method).regularizer));
}

Real TrainConfig::learning_rate(std::size_t epoch) const {
  return lr / std::pow(lr_decay_factor, static_cast<Real>(epoch / lr_decay_every));
}

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("train: epochs must be positive");
  if (warmup_epochs > epochs) throw std::invalid_argument("train: warmup_epochs exceeds epochs");
  if (!(lr > 0)) throw std::invalid_argument("train: lr must be positive");
  if (!(lr_decay_factor >= 1)) throw std::invalid_argument("train: lr_decay_factor must be >= 1");
  if (lr_decay_every == 0) throw std::invalid_argument("train: lr_decay_every must be positive");
  if (batch_warmup == 0 || batch_main == 0) throw std::invalid_argument("train: batch sizes must be positive");
  if (lambda && *lambda < 0) throw std::invalid_argument("train: lambda must be non-negative");
  if (kmeans_k < 1) throw std::invalid_argument("train: kmeans_k must be positive");
  if (tau < 0) throw std::invalid_argument("train: tau must be non-negative");
}

std::vector<EpochRecord> train_task(ContinualModel& model, const TaskDataset& dataset,
                                    std::span<const RankedPair> pairs, const TrainConfig& config,
                                    Regularizer regularizer, RegularizerMemory& memory,
                                    std::size_t task_position, bool new_head) {
  config.validate();
  if (dataset.dim != model.input_dim()) {
    throw std::invalid_argument("train_task: dataset dimension " + std::to_string(dataset.dim) +
                                " does not match model input " + std::to_string(model.input_dim()));
  }
  if (pairs.empty()) throw std::invalid_argument("train_task: no pairs");
  if (new_head || model.learned_tasks() == 0) model.add_head();
  const std::size_t head = model.learned_tasks() - 1;
  const std::span<const QualitySample> samples(dataset.train);

  LossConfig loss{config.effective_lambda(), regularizer};
  if (regularizer == R::none) loss.lambda = 0;
  RegularizerState state;
  if (regularizer == R::lwf) {
    state = lwf_pseudo_labels(model, samples, pairs, head);
  } else if (is_quadratic(regularizer)) {
    if (!memory.importance) memory.importance = make_importance_state(regularizer, model);
    if (memory.importance->method != regularizer) {
      throw std::invalid_argument("train_task: importance state belongs to another method");
    }
    state = std::move(*memory.importance);
    memory.importance.reset();
  }

  const auto layout = model.layout();
  OptimizerState optimizer = OptimizerState::zeros(layout.total_size, config.adam);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochRecord> log;
  Matrix warmup_embeddings;  // trunk is fixed during warm-up
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const bool warmup = epoch < config.warmup_epochs;
    const std::size_t batch_size = warmup ? config.batch_warmup : config.batch_main;
    const Real lr = config.learning_rate(epoch);
    const Eigen::Index trainable_begin = warmup ? layout.trunk_size : layout.frozen_size;

    Rng rng(mix_seed(config.seed, kShuffleSalt + task_position * 1009ULL + epoch));
    std::shuffle(order.begin(), order.end(), rng);

    if (warmup && warmup_embeddings.size() == 0) {
      warmup_embeddings = BatchForward(model, sample_matrix(samples)).embeddings();
    }
    Real loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::span<const std::size_t> batch(order.data() + start,
                                               std::min(batch_size, order.size() - start));
      Vector params = model.parameters();
      if (warmup) {
        const PairBatch gathered = gather_batch(pairs, batch);
        Matrix embeddings(warmup_embeddings.rows(), static_cast<Eigen::Index>(gathered.samples.size()));
        for (std::size_t i = 0; i < gathered.samples.size(); ++i) {
          embeddings.col(static_cast<Eigen::Index>(i)) =
              warmup_embeddings.col(static_cast<Eigen::Index>(gathered.samples[i]));
        }
        const Matrix scores = model.head_matrix().transpose() * embeddings;
        Matrix seeds;
        const auto* labels = std::get_if<std::vector<PseudoLabelSet>>(&state);
        auto value = pair_objective(scores, gathered, head, regularizer == R::lwf ? labels : nullptr,
                                    loss.lambda, &seeds);
        if (const auto* imp = std::get_if<ImportanceState>(&state)) {
          value.total += loss.lambda * quadratic_penalty(model, *imp);
        }
        loss_sum += value.total;
        optimizer_step(optimizer, params, head_gradient(model, embeddings, seeds), lr, trainable_begin);
        model.set_parameters(params);
      } else {
        const auto result = minibatch_loss_and_gradient(model, samples, pairs, batch, state, loss, true);
        loss_sum += result.value.total;
        const Vector before = params;
        optimizer_step(optimizer, params, result.gradient, lr, trainable_begin);
        model.set_parameters(params);
        if (regularizer == R::si) {
          si_accumulate(std::get<ImportanceState>(state), result.new_gradient, params - before);
        }
      }
      ++batches;
    }
    log.push_back({task_position, epoch, warmup ? "warmup" : "main",
                   loss_sum / static_cast<Real>(batches), lr});
  }

  if (auto* imp = std::get_if<ImportanceState>(&state)) {
    consolidate_importance(*imp, model, samples, pairs);
    memory.importance = std::move(*imp);
  }

  TaskSummary summary = kmeans_summarize(stable_features(model, sample_matrix(samples)),
                                         config.kmeans_k,
                                         mix_seed(config.seed, kKMeansSalt + task_position));
  summary.task_index = head;
  if (model.summaries.size() > head) {
    model.summaries[head] = std::move(summary);
  } else {
    model.summaries.push_back(std::move(summary));
  }
  return log;
}

std::vector<RankedPair> task_pairs(const TaskDataset& task, const PairConfig& config) {
  return build_pairs(task, {config.pairs_per_task, mix_seed(config.seed, kPairSalt ^ name_hash(task.name))});
}

RunResult run_family(std::span<const TaskDataset> tasks, const RunSetup& setup,
                     TrainingFamily family, std::span<const WeightingConfig> weightings,
                     const RunHooks& hooks) {
  if (tasks.empty()) throw std::invalid_argument("run: no tasks");
  if (weightings.empty()) throw std::invalid_argument("run: no weighting rules requested");
  setup.train.validate();
  for (const auto& t : tasks) {
    if (t.dim != setup.trunk.input_dim) {
      throw std::invalid_argument("run: task '" + t.name + "' dimension does not match the trunk");
    }
  }
  const TaskStream stream(tasks, hooks.observer);
  const std::size_t count = tasks.size();

  RunResult result;
  std::vector<SrccMatrix> matrices(weightings.size(), SrccMatrix(count));
  std::vector<std::vector<std::string>> flags(weightings.size());
  auto evaluate = [&](const ContinualModel& model, std::size_t t) {
    const auto visible = stream.for_evaluation(t);
    for (std::size_t w = 0; w < weightings.size(); ++w) {
      const auto row = evaluate_row(model, visible, weightings[w], &flags[w]);
      for (std::size_t k = 0; k <= t; ++k) matrices[w].set(t, k, row[k]);
    }
  };

  if (family.kind == TrainingFamily::Kind::joint) {
    TaskDataset joint;
    joint.name = "joint";
    joint.dim = setup.trunk.input_dim;
    std::vector<RankedPair> pairs;
    for (std::size_t k = 0; k < count; ++k) {
      const auto& task = stream.for_training(count - 1, k);
      const std::size_t base = joint.train.size();
      for (auto p : task_pairs(task, setup.pairs)) {
        p.first += base;
        p.second += base;
        pairs.push_back(p);
      }
      joint.train.insert(joint.train.end(), task.train.begin(), task.train.end());
    }
    result.model = init_model(setup.trunk);
    result.log = train_task(result.model, joint, pairs, setup.train, R::none, result.memory, 0);
    for (std::size_t t = 0; t < count; ++t) evaluate(result.model, t);
    if (hooks.on_task) hooks.on_task(count - 1, result.model, result.memory);
  } else {
    if (family.kind != TrainingFamily::Kind::separate) result.model = init_model(setup.trunk);
    for (std::size_t t = 0; t < count; ++t) {
      const auto& task = stream.for_training(t, t);
      const auto pairs = task_pairs(task, setup.pairs);
      bool new_head = true;
      switch (family.kind) {
        case TrainingFamily::Kind::separate:
          result.model = init_model(setup.trunk);
          break;
        case TrainingFamily::Kind::single_head:
          new_head = t == 0;
          break;
        default:
          break;
      }
      auto log = train_task(result.model, task, pairs, setup.train, family.regularizer,
                            result.memory, t, new_head);
      result.log.insert(result.log.end(), log.begin(), log.end());
      evaluate(result.model, t);
      if (hooks.on_task) hooks.on_task(t, result.model, result.memory);
    }
  }

  std::vector<std::size_t> sizes;
  for (const auto& t : tasks) sizes.push_back(t.test.size());
  for (std::size_t w = 0; w < weightings.size(); ++w) {
    result.records.push_back(make_record(std::move(matrices[w]), sizes, std::move(flags[w])));
  }
  return result;
}

RunResult run_sequence(std::span<const TaskDataset> tasks, const RunSetup& setup,
                       const RunHooks& hooks) {
  const auto weighting = inference_weighting(setup.train.method, setup.train.tau);
  return run_family(tasks, setup, training_family(setup.train.method),
                    std::span<const WeightingConfig>(&weighting, 1), hooks);
}

TrainConfig benchmark_train_config(Method method, std::uint64_t seed) {
  TrainConfig config;
  config.method = method;
  config.seed = seed;
  config.lr = 1e-2;
  config.lr_decay_factor = 3;
  config.batch_warmup = 128;
  config.batch_main = 32;
  return config;
}

RunSetup replicate_setup(RunSetup base, Method method, std::uint64_t seed) {
  base.trunk.seed = mix_seed(seed, 0x5452554e4b);
  base.pairs.seed = mix_seed(seed, 0x5041495253);
  base.train.seed = mix_seed(seed, 0x545241494e);
  base.train.method = method;
  return base;
}

RunSetup benchmark_setup(Method method, std::uint64_t seed, Eigen::Index input_dim) {
  RunSetup base;
  base.trunk.input_dim = input_dim;
  base.pairs.pairs_per_task = 2000;
  base.train = benchmark_train_config(method, 0);
  return replicate_setup(std::move(base), method, seed);
}

}  // namespace clqa
