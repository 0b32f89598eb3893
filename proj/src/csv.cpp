#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <set>

#include "prl/datasets.hpp"
#include "prl/errors.hpp"

namespace prl {

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  char c = 0;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // a bare newline yields one empty field; skip blank lines
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_record();
    } else if (c == '\n') {
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::size_t column_of(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("csv: schema column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

LabeledDataset load_csv(std::istream& in, const CsvSchema& schema, CsvReport* report) {
  auto records = parse_csv(in);
  if (records.empty()) throw DataError("csv: missing header row");
  std::vector<std::string> header = records.front();
  if (schema.trim_whitespace)
    for (auto& h : header) h = trim(h);
  if (schema.objectives.empty()) throw DataError("csv: schema declares no objectives");

  std::vector<std::size_t> numeric_cols;
  std::vector<std::size_t> categorical_cols;
  std::vector<std::size_t> objective_cols;
  for (const auto& n : schema.numeric) numeric_cols.push_back(column_of(header, n));
  for (const auto& n : schema.categorical) categorical_cols.push_back(column_of(header, n));
  for (const auto& o : schema.objectives) objective_cols.push_back(column_of(header, o.column));

  auto is_missing = [&](const std::string& v) {
    return std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), v) != schema.missing_tokens.end();
  };

  CsvReport rep;
  std::vector<std::vector<std::string>> kept;
  std::vector<std::size_t> kept_lines;
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    const std::size_t line = r + 1;
    ++rep.rows_read;
    if (rec.size() != header.size()) {
      throw DataError("csv: line " + std::to_string(line) + " has " + std::to_string(rec.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    if (schema.trim_whitespace)
      for (auto& f : rec) f = trim(f);
    if (std::any_of(objective_cols.begin(), objective_cols.end(), [&](std::size_t c) { return is_missing(rec[c]); })) {
      ++rep.dropped_missing_objective;
      continue;
    }
    bool missing_feature = false;
    for (auto c : numeric_cols) missing_feature |= is_missing(rec[c]);
    for (auto c : categorical_cols) missing_feature |= is_missing(rec[c]);
    if (missing_feature) {
      if (!schema.drop_missing_features) {
        throw DataError("csv: line " + std::to_string(line) + " has a missing feature value");
      }
      ++rep.dropped_missing_feature;
      continue;
    }
    kept.push_back(std::move(rec));
    kept_lines.push_back(line);
  }

  std::vector<std::vector<std::string>> levels(categorical_cols.size());
  for (std::size_t i = 0; i < categorical_cols.size(); ++i) {
    std::set<std::string> s;
    for (const auto& rec : kept) s.insert(rec[categorical_cols[i]]);
    levels[i].assign(s.begin(), s.end());
  }

  LabeledDataset ds;
  for (const auto& n : schema.numeric) ds.feature_names.push_back(n);
  for (std::size_t i = 0; i < categorical_cols.size(); ++i)
    for (const auto& lv : levels[i]) ds.feature_names.push_back(schema.categorical[i] + "=" + lv);

  const std::size_t n = kept.size();
  const std::size_t d = ds.feature_names.size();
  ds.X = Matrix(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t col = 0;
    for (std::size_t i = 0; i < numeric_cols.size(); ++i, ++col) {
      const auto& s = kept[r][numeric_cols[i]];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw DataError("csv: line " + std::to_string(kept_lines[r]) + " column '" + schema.numeric[i] +
                        "' is not numeric: '" + s + "'");
      }
      ds.X(r, col) = v;
    }
    for (std::size_t i = 0; i < categorical_cols.size(); ++i) {
      const auto& lv = levels[i];
      const auto pos = std::lower_bound(lv.begin(), lv.end(), kept[r][categorical_cols[i]]) - lv.begin();
      ds.X(r, col + static_cast<std::size_t>(pos)) = 1.0;
      col += lv.size();
    }
  }

  for (std::size_t o = 0; o < schema.objectives.size(); ++o) {
    const auto& obj = schema.objectives[o];
    std::set<std::string> names;
    for (const auto& [raw, cls] : obj.classes) names.insert(cls);
    LabelSet ls;
    ls.name = obj.name;
    ls.role = obj.role;
    ls.class_names.assign(names.begin(), names.end());
    if (ls.class_names.size() < 2) throw DataError("csv: objective '" + obj.name + "' needs at least two classes");
    std::vector<std::size_t> idx(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto& raw = kept[r][objective_cols[o]];
      auto it = obj.classes.find(raw);
      if (it == obj.classes.end()) {
        throw DataError("csv: line " + std::to_string(kept_lines[r]) + " objective '" + obj.name +
                        "' has unknown class value '" + raw + "'");
      }
      idx[r] = static_cast<std::size_t>(
          std::lower_bound(ls.class_names.begin(), ls.class_names.end(), it->second) - ls.class_names.begin());
    }
    ls.onehot = onehot_from_indices(idx, ls.class_names.size());
    ds.labels.push_back(std::move(ls));
  }
  if (report) *report = rep;
  return ds;
}

LabeledDataset load_csv(const std::string& path, const CsvSchema& schema, CsvReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("csv: cannot open '" + path + "'");
  return load_csv(in, schema, report);
}

}  // namespace prl
