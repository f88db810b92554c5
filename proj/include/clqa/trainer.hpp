#pragma once

#include "clqa/core.hpp"
#include "clqa/metrics.hpp"
#include "clqa/model.hpp"
#include "clqa/objectives.hpp"
#include "clqa/optimizer.hpp"
#include "clqa/summarizer.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace clqa {

enum class Method {
  SL, JL, SH_CL, MH_CL, MH_CL_AW, MH_CL_O,
  LwF, LwF_O, LwF_SW, LwF_HW, LwF_AW,
  EWC, EWC_AW, SI, SI_AW, MAS, MAS_AW,
};

std::string to_string(Method method);
Method method_from_string(const std::string& name);
const std::vector<Method>& all_methods();

/// How a method trains; methods sharing a TrainingFamily differ only at inference.
struct TrainingFamily {
  enum class Kind { separate, joint, single_head, multi_head };
  Kind kind = Kind::multi_head;
  Regularizer regularizer = Regularizer::none;

  bool operator==(const TrainingFamily&) const = default;
};

TrainingFamily training_family(Method method);
/// Inference rule of a method; `tau` is used by adaptive weighting.
WeightingConfig inference_weighting(Method method, Real tau);

/// Lambda used when TrainConfig::lambda is unset.
Real default_lambda(Regularizer regularizer);

struct TrainConfig {
  Method method = Method::LwF_AW;
  std::size_t epochs = 9;
  std::size_t warmup_epochs = 3;
  Real lr = 3e-4;
  Real lr_decay_factor = 10;
  std::size_t lr_decay_every = 3;
  std::size_t batch_warmup = 128;
  std::size_t batch_main = 32;
  std::optional<Real> lambda;
  std::uint64_t seed = 0;
  AdamConfig adam;
  Eigen::Index kmeans_k = 128;
  Real tau = 16;

  Real effective_lambda() const;
  Real learning_rate(std::size_t epoch) const;
  void validate() const;
};

struct EpochRecord {
  std::size_t task = 0;  // 0-based position in the stream
  std::size_t epoch = 0;
  std::string phase;     // "warmup" or "main"
  Real mean_loss = 0;
  Real lr = 0;
};

/// What persists between tasks besides the model itself.
struct RegularizerMemory {
  std::optional<ImportanceState> importance;
};

/// Trains one task. With `new_head` a head is appended first, otherwise the
/// last head is fine-tuned. Warm-up epochs update heads only; later epochs
/// update the plastic trunk and heads. A K-means summary of the training
/// split's stable features is recorded afterwards.
std::vector<EpochRecord> train_task(ContinualModel& model, const TaskDataset& dataset,
                                    std::span<const RankedPair> pairs, const TrainConfig& config,
                                    Regularizer regularizer, RegularizerMemory& memory,
                                    std::size_t task_position, bool new_head = true);

struct AccessEvent {
  enum class Phase { training, evaluation };
  enum class Split { train, test };
  Phase phase = Phase::training;
  std::size_t current_task = 0;  // task being trained or just learned
  std::size_t dataset = 0;       // task whose data was read
  Split split = Split::train;
};

using AccessObserver = std::function<void(const AccessEvent&)>;

struct RunSetup {
  TrunkConfig trunk;
  PairConfig pairs;
  TrainConfig train;
};

struct RunHooks {
  AccessObserver observer;
  /// Called after every task with the updated model.
  std::function<void(std::size_t task, const ContinualModel&, const RegularizerMemory&)> on_task;
};

struct RunResult {
  std::vector<MetricsRecord> records;  // one per requested weighting
  ContinualModel model;                // final model (last separate model for SL)
  RegularizerMemory memory;
  std::vector<EpochRecord> log;
};

/// Runs one training family over the task stream and evaluates every
/// requested weighting rule after each task.
RunResult run_family(std::span<const TaskDataset> tasks, const RunSetup& setup,
                     TrainingFamily family, std::span<const WeightingConfig> weightings,
                     const RunHooks& hooks = {});

/// run_family for `setup.train.method` alone.
RunResult run_sequence(std::span<const TaskDataset> tasks, const RunSetup& setup,
                       const RunHooks& hooks = {});

/// Per-task pair sets; each task's seed depends on the task name, not its position.
std::vector<RankedPair> task_pairs(const TaskDataset& task, const PairConfig& config);

/// Protocol tuned for the synthetic benchmark (larger steps than the
/// image-scale defaults of TrainConfig).
TrainConfig benchmark_train_config(Method method, std::uint64_t seed);
/// `base` with trunk, pair and training seeds derived from one replicate seed.
RunSetup replicate_setup(RunSetup base, Method method, std::uint64_t seed);
RunSetup benchmark_setup(Method method, std::uint64_t seed, Eigen::Index input_dim);

}  // namespace clqa
