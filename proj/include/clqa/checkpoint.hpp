#pragma once

#include "clqa/model.hpp"
#include "clqa/objectives.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace clqa {

/// A model plus whatever regularizer state must survive between tasks.
struct Checkpoint {
  ContinualModel model;
  std::optional<ImportanceState> importance;
  std::size_t tasks_seen = 0;
};

/// Self-describing JSON; doubles use shortest round-trip formatting, so
/// save/load reproduces every parameter bit for bit.
std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Writes `contents` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace clqa
