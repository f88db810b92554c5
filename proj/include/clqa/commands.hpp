#pragma once

#include "clqa/metrics.hpp"
#include "clqa/run_config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace clqa {

/// Writes `<task>_train.csv`, `<task>_test.csv` for every synthetic task and
/// `manifest.json` into `out / config.data.dir`. Returns the written paths.
std::vector<std::filesystem::path> cmd_gen(const RunConfig& config, const std::filesystem::path& out);

struct RunOptions {
  std::vector<Method> methods;        // empty: the config's list
  std::vector<std::uint64_t> seeds;   // empty: the config's list
  bool checkpoints = true;
};

struct CellResult {
  Method method = Method::LwF_AW;
  std::uint64_t seed = 0;
  MetricsRecord record;
  std::filesystem::path metrics_path;
};

/// Trains every (method, seed) cell on the tables in `out / config.data.dir`.
/// Methods that share a training family share one training run. Per cell it
/// writes `<method>_seed<s>.json` and `<method>_seed<s>_srcc.csv` under
/// `out / config.output_dir`, plus per-task checkpoints and a line-delimited
/// run log per training run.
std::vector<CellResult> cmd_run(const RunConfig& config, const std::filesystem::path& out,
                                const RunOptions& options = {});

struct ReportRow {
  std::string method;
  std::size_t seeds = 0;
  Real mpsr_mean = 0, mpsr_min = 0, mpsr_max = 0;
  Real wsrcc_mean = 0, wsrcc_min = 0, wsrcc_max = 0;
  std::vector<Real> psr_mean;  // per task, averaged over seeds
};

struct Report {
  std::vector<ReportRow> rows;
  std::string table;
  std::string svg;
};

/// Summarizes every metrics document in `dir`. MPSR and weighted SRCC are
/// recomputed from the stored SRCC matrices.
Report build_report(const std::filesystem::path& dir);

/// build_report plus `report.txt` and `psr.svg` written into `out`.
Report cmd_report(const std::filesystem::path& dir, const std::filesystem::path& out);

/// Human-readable description of a checkpoint.
std::string cmd_inspect(const std::filesystem::path& checkpoint);

/// Line plot of PSR_t per row, one series per method.
std::string psr_plot_svg(const std::vector<ReportRow>& rows);

}  // namespace clqa
