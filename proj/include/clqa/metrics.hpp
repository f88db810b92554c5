#pragma once

#include "clqa/core.hpp"
#include "clqa/summarizer.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace clqa {

/// Denominator floor for stability ratios.
inline constexpr Real kPsrDenominatorFloor = 0.05;

/// Average ranks (1-based), ties receive the mean of the ranks they span.
Vector fractional_ranks(const Vector& values);

/// Spearman correlation as the Pearson correlation of fractional ranks.
/// Returns 0 and sets `degenerate` when either argument is constant.
Real srcc(const Vector& predictions, const Vector& targets, bool* degenerate = nullptr);

/// Lower-triangular T x T matrix; entry (t, k), k <= t, is the correlation on
/// task k's test set right after learning task t (both 0-based).
class SrccMatrix {
 public:
  SrccMatrix() = default;
  explicit SrccMatrix(std::size_t tasks);

  std::size_t tasks() const { return static_cast<std::size_t>(values_.rows()); }
  Real at(std::size_t t, std::size_t k) const;
  void set(std::size_t t, std::size_t k, Real value);
  /// Diagonal entry SRCC_t.
  Real diagonal(std::size_t t) const { return at(t, t); }
  bool row_complete(std::size_t t) const;
  const Matrix& raw() const { return values_; }

 private:
  Matrix values_;  // NaN above the diagonal and where unset
};

/// Plasticity-stability ratio after task `t` (0-based). Old-task denominators
/// below the floor are clamped to it and reported through `clamped`.
Real psr(const SrccMatrix& matrix, std::size_t t, bool* clamped = nullptr);

Real mpsr(std::span<const Real> psr_values);

Real weighted_srcc(std::span<const Real> per_task_srcc, std::span<const std::size_t> sizes);

struct MetricsRecord {
  SrccMatrix srcc;
  std::vector<Real> psr;
  Real mpsr = 0;
  Real weighted_srcc = 0;
  std::vector<std::size_t> test_set_sizes;
  std::vector<std::string> flags;
};

/// Fills psr, mpsr and weighted_srcc from a complete matrix.
MetricsRecord make_record(SrccMatrix matrix, std::vector<std::size_t> test_set_sizes,
                          std::vector<std::string> flags = {});

/// Correlations of the model's predictions on each test set. In oracle mode
/// test set k is scored with head k.
std::vector<Real> evaluate_row(const ContinualModel& model, std::span<const TaskDataset> tasks,
                               const WeightingConfig& config,
                               std::vector<std::string>* flags = nullptr);

/// `snapshots[t]` is the model right after learning task t.
MetricsRecord evaluate_stream(std::span<const ContinualModel> snapshots,
                              std::span<const TaskDataset> tasks, const WeightingConfig& config);

/// Lower-triangular text table, one row per learned task.
void write_srcc_table(std::ostream& out, const SrccMatrix& matrix,
                      std::span<const std::string> task_names);

/// JSON document with keys srcc_matrix, psr, mpsr, weighted_srcc, flags,
/// test_set_sizes plus caller-supplied string metadata.
std::string metrics_to_json(const MetricsRecord& record,
                            std::span<const std::pair<std::string, std::string>> metadata = {});
MetricsRecord metrics_from_json(const std::string& text);

}  // namespace clqa
