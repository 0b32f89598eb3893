#include "prl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "prl/datasets.hpp"
#include "prl/errors.hpp"

namespace prl {

std::string format_metrics_row(const MetricsRow& row) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", row.value);
  std::ostringstream os;
  os << row.experiment_hash << ',' << row.phase << ',' << row.step << ',' << row.objective << ',' << row.metric << ','
     << row.split << ',' << buf;
  return os.str();
}

MetricsRow parse_metrics_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) f.push_back(item);
  if (f.size() != 7) throw DataError("metrics row has " + std::to_string(f.size()) + " fields: '" + line + "'");
  MetricsRow r;
  r.experiment_hash = f[0];
  r.phase = f[1];
  try {
    r.step = std::stoull(f[2]);
    r.value = std::stod(f[6]);
  } catch (const std::exception&) {
    throw DataError("metrics row has malformed numbers: '" + line + "'");
  }
  r.objective = f[3];
  r.metric = f[4];
  r.split = f[5];
  return r;
}

MetricsSink::MetricsSink(const std::string& path) : path_(path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw DataError("cannot open metrics file '" + path + "'");
  if (fresh) out_ << kMetricsHeader << '\n';
}

void MetricsSink::append(const MetricsRow& row) {
  if (row.experiment_hash.empty()) throw std::invalid_argument("metrics row without experiment hash");
  out_ << format_metrics_row(row) << '\n';
  out_.flush();
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open metrics file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw DataError("metrics file '" + path + "' has a bad header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(parse_metrics_row(line));
  return rows;
}

double accuracy(const Matrix& y, const Matrix& yhat) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols() || y.rows() == 0)
    throw ShapeError("accuracy: labels " + y.shape_string() + " vs predictions " + yhat.shape_string());
  const auto t = argmax_rows(y);
  const auto p = argmax_rows(yhat);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < t.size(); ++i) hit += t[i] == p[i];
  return static_cast<double>(hit) / static_cast<double>(t.size());
}

double f1_score(const Matrix& y, const Matrix& yhat) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols() || y.rows() == 0)
    throw ShapeError("f1_score: labels " + y.shape_string() + " vs predictions " + yhat.shape_string());
  const auto t = argmax_rows(y);
  const auto p = argmax_rows(yhat);
  auto f1_of = [&](std::size_t c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      tp += (p[i] == c && t[i] == c);
      fp += (p[i] == c && t[i] != c);
      fn += (p[i] != c && t[i] == c);
    }
    return tp == 0.0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  };
  if (y.cols() == 2) return f1_of(1);
  double s = 0.0;
  for (std::size_t c = 0; c < y.cols(); ++c) s += f1_of(c);
  return s / static_cast<double>(y.cols());
}

double majority_rate(const Matrix& y) {
  const auto p = class_proportions(y);
  double m = 0.0;
  for (double v : p) m = std::max(m, v);
  return m;
}

double prior_entropy(const Matrix& y) {
  double h = 0.0;
  for (double v : class_proportions(y))
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

}  // namespace prl
