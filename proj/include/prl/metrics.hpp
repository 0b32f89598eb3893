#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "prl/tensor.hpp"

namespace prl {

inline constexpr const char* kMetricsHeader = "experiment_hash,phase,step,objective,metric,split,value";

/// One long-format metrics record. metric is "ce_loss", "accuracy" or "f1".
struct MetricsRow {
  std::string experiment_hash;
  std::string phase;  // "train" for training history, "eval" for probes
  std::size_t step = 0;
  std::string objective;
  std::string metric;
  std::string split;  // "train" or "test"
  double value = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Values are written with 17 significant digits so they round-trip.
std::string format_metrics_row(const MetricsRow& row);
MetricsRow parse_metrics_row(const std::string& line);

/// Append-only CSV sink; the header is written when the file is created.
class MetricsSink {
 public:
  explicit MetricsSink(const std::string& path);
  void append(const MetricsRow& row);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

/// Reads a metrics file, checking the header.
std::vector<MetricsRow> read_metrics(const std::string& path);

/// Fraction of rows whose argmax prediction matches the one-hot truth.
double accuracy(const Matrix& y, const Matrix& yhat);
/// Binary problems: F1 of class 1. More classes: unweighted mean over
/// classes of the per-class F1 (a class never predicted nor present scores 0).
double f1_score(const Matrix& y, const Matrix& yhat);
/// Majority-class rate and prior entropy of one-hot labels.
double majority_rate(const Matrix& y);
double prior_entropy(const Matrix& y);

}  // namespace prl
