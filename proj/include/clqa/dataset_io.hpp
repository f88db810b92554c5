#pragma once

#include "clqa/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace clqa {

/// Thrown on malformed feature tables; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message, const std::string& source = {});
  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t line_;
  std::string message_;
};

struct FeatureTable {
  Eigen::Index dim = 0;
  std::vector<QualitySample> samples;
};

/// Reads `id,mos,std,f0,...,f{d-1}` tables; d is inferred from the header.
FeatureTable read_feature_table(std::istream& in);
FeatureTable read_feature_table(const std::filesystem::path& path);

/// Writes with shortest round-trip formatting, so output is byte-stable.
void write_feature_table(std::ostream& out, const std::vector<QualitySample>& samples,
                         Eigen::Index dim);
void write_feature_table(const std::filesystem::path& path,
                         const std::vector<QualitySample>& samples, Eigen::Index dim);

/// Loads `<stem>_train.csv` and `<stem>_test.csv` from `dir`.
TaskDataset load_task(const std::filesystem::path& dir, const std::string& name);
void save_task(const std::filesystem::path& dir, const TaskDataset& task);

std::string format_real(Real value);

}  // namespace clqa
