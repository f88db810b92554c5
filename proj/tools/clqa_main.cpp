#include "clqa/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>

namespace {

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void configure_logging() {
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("CLQA_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to off; only accept it when asked for.
    if (parsed != spdlog::level::off || std::string(level) == "off") spdlog::set_level(parsed);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Continual learning for pairwise-supervised quality prediction"};
  app.require_subcommand(1);
  std::string out = ".";
  app.add_option("--out", out, "Base directory for every relative path")->capture_default_str();

  std::string config_path;
  auto* gen = app.add_subcommand("gen", "Generate the synthetic task stream");
  gen->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);

  std::string methods_csv, seeds_csv;
  bool no_checkpoints = false;
  auto* run = app.add_subcommand("run", "Train and evaluate methods");
  run->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--methods", methods_csv, "Comma-separated methods, e.g. SL,LwF-AW");
  run->add_option("--seeds", seeds_csv, "Comma-separated replicate seeds");
  run->add_flag("--no-checkpoints", no_checkpoints, "Skip per-task checkpoints");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Summarize metrics documents");
  report->add_option("--dir", report_dir, "Directory with metrics documents")->required();

  std::string checkpoint;
  auto* inspect = app.add_subcommand("inspect", "Describe a checkpoint");
  inspect->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  const std::filesystem::path base(out);
  auto under_out = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  try {
    if (*gen) {
      clqa::cmd_gen(clqa::load_run_config(config_path), base);
    } else if (*run) {
      clqa::RunOptions options;
      for (const auto& m : split_csv(methods_csv)) options.methods.push_back(clqa::method_from_string(m));
      for (const auto& s : split_csv(seeds_csv)) options.seeds.push_back(std::stoull(s));
      options.checkpoints = !no_checkpoints;
      const auto cells = clqa::cmd_run(clqa::load_run_config(config_path), base, options);
      for (const auto& c : cells) std::cout << c.metrics_path.string() << "\n";
    } else if (*report) {
      const auto dir = under_out(report_dir);
      std::cout << clqa::cmd_report(dir, dir).table;
    } else if (*inspect) {
      std::cout << clqa::cmd_inspect(under_out(checkpoint));
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
