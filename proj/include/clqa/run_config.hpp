#pragma once

#include "clqa/core.hpp"
#include "clqa/model.hpp"
#include "clqa/summarizer.hpp"
#include "clqa/synthbench.hpp"
#include "clqa/trainer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace clqa {

/// Where the task stream comes from. With `synthetic` set, `gen` writes the
/// generated tables into `dir`; `run` always reads tables from `dir`.
struct DataSource {
  std::filesystem::path dir = "data";
  std::optional<SequenceSpec> synthetic;
  std::vector<std::string> tasks;  // stream order; empty means the synthetic order
};

/// Experiment description. Relative paths resolve against the --out directory.
struct RunConfig {
  DataSource data;
  TrunkConfig trunk;  // input_dim is taken from the data
  PairConfig pairs;   // seed is derived per replicate
  TrainConfig train;  // method and seed are set per cell
  WeightingConfig weighting;
  std::filesystem::path output_dir = "results";
  std::vector<Method> methods{Method::LwF_AW};
  std::vector<std::uint64_t> seeds{0};

  /// Names of the tasks in stream order.
  std::vector<std::string> task_names() const;
  void validate() const;
};

/// Parses a JSON document. Unknown keys are rejected so typos cannot pass
/// silently. Missing sections keep their defaults.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);

/// The configuration the acceptance suite uses: default synthetic sequence
/// and the benchmark training protocol.
RunConfig benchmark_run_config(std::uint64_t data_seed);

/// Setup of one (method, seed) cell for input width `input_dim`.
RunSetup cell_setup(const RunConfig& config, Method method, std::uint64_t seed,
                    Eigen::Index input_dim);

std::string sequence_spec_to_json(const SequenceSpec& spec);
SequenceSpec sequence_spec_from_json(const std::string& text);

}  // namespace clqa
