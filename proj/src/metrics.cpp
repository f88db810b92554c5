#include "clqa/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace clqa {

Vector fractional_ranks(const Vector& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  Vector ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && values[order[static_cast<std::size_t>(j + 1)]] ==
                            values[order[static_cast<std::size_t>(i)]]) {
      ++j;
    }
    const Real rank = 0.5 * static_cast<Real>(i + j) + 1.0;
    for (Eigen::Index m = i; m <= j; ++m) ranks[order[static_cast<std::size_t>(m)]] = rank;
    i = j + 1;
  }
  return ranks;
}

Real srcc(const Vector& predictions, const Vector& targets, bool* degenerate) {
  if (predictions.size() != targets.size()) throw std::invalid_argument("srcc: length mismatch");
  if (predictions.size() < 2) throw std::invalid_argument("srcc: need at least two values");
  if (!predictions.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("srcc: non-finite input");
  }
  const Vector a = fractional_ranks(predictions);
  const Vector b = fractional_ranks(targets);
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const Real saa = da.squaredNorm();
  const Real sbb = db.squaredNorm();
  if (degenerate) *degenerate = saa == 0 || sbb == 0;
  if (saa == 0 || sbb == 0) return 0;
  return std::clamp(da.dot(db) / std::sqrt(saa * sbb), -1.0, 1.0);
}

SrccMatrix::SrccMatrix(std::size_t tasks)
    : values_(Matrix::Constant(static_cast<Eigen::Index>(tasks), static_cast<Eigen::Index>(tasks),
                               std::numeric_limits<Real>::quiet_NaN())) {}

Real SrccMatrix::at(std::size_t t, std::size_t k) const {
  if (t >= tasks() || k > t) throw std::out_of_range("SrccMatrix: entry outside lower triangle");
  const Real v = values_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
  if (std::isnan(v)) throw std::logic_error("SrccMatrix: entry not yet filled");
  return v;
}

void SrccMatrix::set(std::size_t t, std::size_t k, Real value) {
  if (t >= tasks() || k > t) throw std::out_of_range("SrccMatrix: entry outside lower triangle");
  if (!(value >= -1.0 && value <= 1.0)) throw std::invalid_argument("SrccMatrix: value outside [-1, 1]");
  values_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = value;
}

bool SrccMatrix::row_complete(std::size_t t) const {
  if (t >= tasks()) return false;
  for (std::size_t k = 0; k <= t; ++k) {
    if (std::isnan(values_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)))) return false;
  }
  return true;
}

Real psr(const SrccMatrix& matrix, std::size_t t, bool* clamped) {
  if (clamped) *clamped = false;
  const Real current = matrix.diagonal(t);
  if (t == 0) return current;
  Real ratio_sum = 0;
  for (std::size_t k = 0; k < t; ++k) {
    Real denom = matrix.diagonal(k);
    if (denom < kPsrDenominatorFloor) {
      denom = kPsrDenominatorFloor;
      if (clamped) *clamped = true;
    }
    ratio_sum += matrix.at(t, k) / denom;
  }
  return ratio_sum / static_cast<Real>(t) * current;
}

Real mpsr(std::span<const Real> psr_values) {
  if (psr_values.empty()) throw std::invalid_argument("mpsr: empty input");
  return std::accumulate(psr_values.begin(), psr_values.end(), 0.0) /
         static_cast<Real>(psr_values.size());
}

Real weighted_srcc(std::span<const Real> per_task_srcc, std::span<const std::size_t> sizes) {
  if (per_task_srcc.size() != sizes.size()) throw std::invalid_argument("weighted_srcc: length mismatch");
  if (sizes.empty()) throw std::invalid_argument("weighted_srcc: empty input");
  Real num = 0;
  Real den = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw std::invalid_argument("weighted_srcc: zero test-set size");
    num += static_cast<Real>(sizes[i]) * per_task_srcc[i];
    den += static_cast<Real>(sizes[i]);
  }
  return num / den;
}

MetricsRecord make_record(SrccMatrix matrix, std::vector<std::size_t> test_set_sizes,
                          std::vector<std::string> flags) {
  const std::size_t tasks = matrix.tasks();
  if (tasks == 0) throw std::invalid_argument("make_record: empty matrix");
  if (test_set_sizes.size() != tasks) throw std::invalid_argument("make_record: size list mismatch");
  MetricsRecord record;
  for (std::size_t t = 0; t < tasks; ++t) {
    if (!matrix.row_complete(t)) throw std::invalid_argument("make_record: incomplete matrix");
    bool clamped = false;
    record.psr.push_back(psr(matrix, t, &clamped));
    if (clamped) flags.push_back("psr_denominator_clamped@task" + std::to_string(t + 1));
  }
  record.mpsr = mpsr(record.psr);
  std::vector<Real> last_row;
  for (std::size_t k = 0; k < tasks; ++k) last_row.push_back(matrix.at(tasks - 1, k));
  record.weighted_srcc = weighted_srcc(last_row, test_set_sizes);
  record.srcc = std::move(matrix);
  record.test_set_sizes = std::move(test_set_sizes);
  record.flags = std::move(flags);
  return record;
}

std::vector<Real> evaluate_row(const ContinualModel& model, std::span<const TaskDataset> tasks,
                               const WeightingConfig& config, std::vector<std::string>* flags) {
  std::vector<Real> row;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const auto& test = tasks[k].test;
    if (test.size() < 2) {
      throw std::invalid_argument("evaluate: task '" + tasks[k].name + "' has no usable test split");
    }
    Matrix inputs(model.input_dim(), static_cast<Eigen::Index>(test.size()));
    Vector mos(static_cast<Eigen::Index>(test.size()));
    for (std::size_t i = 0; i < test.size(); ++i) {
      inputs.col(static_cast<Eigen::Index>(i)) = test[i].features;
      mos[static_cast<Eigen::Index>(i)] = test[i].mos;
    }
    const auto oracle = config.mode == WeightingMode::oracle ? std::optional<std::size_t>(k)
                                                             : std::nullopt;
    bool degenerate = false;
    row.push_back(srcc(predict_quality(model, inputs, config, oracle), mos, &degenerate));
    if (degenerate && flags) flags->push_back("constant_predictions@" + tasks[k].name);
  }
  return row;
}

MetricsRecord evaluate_stream(std::span<const ContinualModel> snapshots,
                              std::span<const TaskDataset> tasks, const WeightingConfig& config) {
  if (snapshots.empty()) throw std::invalid_argument("evaluate_stream: no learned tasks");
  if (snapshots.size() > tasks.size()) throw std::invalid_argument("evaluate_stream: missing test split");
  SrccMatrix matrix(snapshots.size());
  std::vector<std::string> flags;
  for (std::size_t t = 0; t < snapshots.size(); ++t) {
    const auto row = evaluate_row(snapshots[t], tasks.subspan(0, t + 1), config, &flags);
    for (std::size_t k = 0; k <= t; ++k) matrix.set(t, k, row[k]);
  }
  std::vector<std::size_t> sizes;
  for (std::size_t k = 0; k < snapshots.size(); ++k) sizes.push_back(tasks[k].test.size());
  return make_record(std::move(matrix), std::move(sizes), std::move(flags));
}

void write_srcc_table(std::ostream& out, const SrccMatrix& matrix,
                      std::span<const std::string> task_names) {
  out << "after_task";
  for (std::size_t k = 0; k < matrix.tasks(); ++k) {
    out << ',' << (k < task_names.size() ? task_names[k] : "task" + std::to_string(k + 1));
  }
  out << '\n';
  char buf[32];
  for (std::size_t t = 0; t < matrix.tasks(); ++t) {
    out << (t < task_names.size() ? task_names[t] : "task" + std::to_string(t + 1));
    for (std::size_t k = 0; k <= t; ++k) {
      std::snprintf(buf, sizeof(buf), "%.6f", matrix.at(t, k));
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::string metrics_to_json(const MetricsRecord& record,
                            std::span<const std::pair<std::string, std::string>> metadata) {
  nlohmann::ordered_json doc;
  for (const auto& [key, value] : metadata) doc[key] = value;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < record.srcc.tasks(); ++t) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k <= t; ++k) row.push_back(record.srcc.at(t, k));
    rows.push_back(std::move(row));
  }
  doc["srcc_matrix"] = std::move(rows);
  doc["psr"] = record.psr;
  doc["mpsr"] = record.mpsr;
  doc["weighted_srcc"] = record.weighted_srcc;
  doc["test_set_sizes"] = record.test_set_sizes;
  doc["flags"] = record.flags;
  return doc.dump(2) + "\n";
}

MetricsRecord metrics_from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  for (const char* key : {"srcc_matrix", "psr", "mpsr", "weighted_srcc", "flags"}) {
    if (!doc.contains(key)) throw std::invalid_argument(std::string("metrics document lacks '") + key + "'");
  }
  const auto& rows = doc.at("srcc_matrix");
  SrccMatrix matrix(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != t + 1) throw std::invalid_argument("metrics document: ragged srcc_matrix");
    for (std::size_t k = 0; k <= t; ++k) matrix.set(t, k, rows[t][k].get<Real>());
  }
  MetricsRecord record;
  record.srcc = std::move(matrix);
  record.psr = doc.at("psr").get<std::vector<Real>>();
  record.mpsr = doc.at("mpsr").get<Real>();
  record.weighted_srcc = doc.at("weighted_srcc").get<Real>();
  if (doc.contains("test_set_sizes")) {
    record.test_set_sizes = doc.at("test_set_sizes").get<std::vector<std::size_t>>();
  }
  record.flags = doc.at("flags").get<std::vector<std::string>>();
  if (record.psr.size() != record.srcc.tasks()) {
    throw std::invalid_argument("metrics document: psr length does not match matrix");
  }
  return record;
}

}  // namespace clqa
