#include "clqa/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace clqa {

ParseError::ParseError(std::size_t line, const std::string& message, const std::string& source)
    : std::runtime_error((source.empty() ? "line " : source + ":") + std::to_string(line) + ": " +
                         message),
      line_(line),
      message_(message) {}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

Real parse_real(std::string_view field, std::size_t line, const char* what) {
  field = trim(field);
  Real value = 0;
  const auto* end = field.data() + field.size();
  const auto result = std::from_chars(field.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw ParseError(line, std::string("invalid ") + what + " value '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

FeatureTable read_feature_table(std::istream& in) {
  FeatureTable table;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  ++line_no;
  const auto header = split_commas(trim(line));
  if (header.size() < 4 || trim(header[0]) != "id" || trim(header[1]) != "mos" ||
      trim(header[2]) != "std") {
    throw ParseError(line_no, "header must be id,mos,std,f0,...");
  }
  for (std::size_t i = 3; i < header.size(); ++i) {
    if (trim(header[i]) != "f" + std::to_string(i - 3)) {
      throw ParseError(line_no, "expected column f" + std::to_string(i - 3));
    }
  }
  table.dim = static_cast<Eigen::Index>(header.size() - 3);

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(trim(line));
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    QualitySample s;
    s.id = std::string(trim(fields[0]));
    if (s.id.empty()) throw ParseError(line_no, "empty id");
    s.mos = parse_real(fields[1], line_no, "mos");
    s.std = parse_real(fields[2], line_no, "std");
    if (s.std < 0) throw ParseError(line_no, "std must be non-negative");
    s.features.resize(table.dim);
    for (Eigen::Index j = 0; j < table.dim; ++j) {
      s.features[j] = parse_real(fields[static_cast<std::size_t>(j) + 3], line_no, "feature");
    }
    if (!s.features.allFinite() || !std::isfinite(s.mos) || !std::isfinite(s.std)) {
      throw ParseError(line_no, "non-finite value");
    }
    table.samples.push_back(std::move(s));
  }
  return table;
}

FeatureTable read_feature_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_feature_table(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.message(), path.string());
  }
}

std::string format_real(Real value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

void write_feature_table(std::ostream& out, const std::vector<QualitySample>& samples,
                         Eigen::Index dim) {
  out << "id,mos,std";
  for (Eigen::Index j = 0; j < dim; ++j) out << ",f" << j;
  out << '\n';
  for (const auto& s : samples) {
    if (s.features.size() != dim) throw std::invalid_argument("sample dimension mismatch");
    out << s.id << ',' << format_real(s.mos) << ',' << format_real(s.std);
    for (Eigen::Index j = 0; j < dim; ++j) out << ',' << format_real(s.features[j]);
    out << '\n';
  }
}

void write_feature_table(const std::filesystem::path& path,
                         const std::vector<QualitySample>& samples, Eigen::Index dim) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_feature_table(out, samples, dim);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

TaskDataset load_task(const std::filesystem::path& dir, const std::string& name) {
  auto train = read_feature_table(dir / (name + "_train.csv"));
  auto test = read_feature_table(dir / (name + "_test.csv"));
  if (train.dim != test.dim) {
    throw std::invalid_argument("task '" + name + "': train/test dimensions differ");
  }
  TaskDataset task{name, train.dim, std::move(train.samples), std::move(test.samples)};
  task.validate();
  return task;
}

void save_task(const std::filesystem::path& dir, const TaskDataset& task) {
  write_feature_table(dir / (task.name + "_train.csv"), task.train, task.dim);
  write_feature_table(dir / (task.name + "_test.csv"), task.test, task.dim);
}

}  // namespace clqa
