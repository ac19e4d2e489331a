#include "survdsa/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "survdsa/format.hpp"
#include "survdsa/rng.hpp"

namespace survdsa {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
    out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto res = std::from_chars(begin, end, *out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(*out);
}

}  // namespace

SurvivalDataset::SurvivalDataset(std::vector<Covariate> schema,
                                 std::vector<Subject> subjects)
    : schema_(std::move(schema)), subjects_(std::move(subjects)) {
  validate();
}

void SurvivalDataset::validate() const {
  std::set<std::string> names;
  for (const auto& cov : schema_) {
    if (!names.insert(cov.name).second)
      throw std::invalid_argument("duplicate covariate name: " + cov.name);
    if (cov.kind == CovariateKind::Categorical) {
      if (cov.levels.empty())
        throw std::invalid_argument("categorical covariate " + cov.name +
                                    " has no levels");
      std::set<std::string> lv(cov.levels.begin(), cov.levels.end());
      if (lv.size() != cov.levels.size())
        throw std::invalid_argument("categorical covariate " + cov.name +
                                    " has duplicate levels");
    }
  }
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    const Subject& s = subjects_[i];
    if (!(s.followup_time > 0.0) || !std::isfinite(s.followup_time))
      throw std::invalid_argument("subject " + std::to_string(i + 1) +
                                  ": followup_time must be positive");
    if (s.covariates.size() != schema_.size())
      throw std::invalid_argument("subject " + std::to_string(i + 1) +
                                  ": covariate vector length mismatch");
    for (std::size_t j = 0; j < schema_.size(); ++j) {
      if (schema_[j].kind == CovariateKind::Categorical) {
        double v = s.covariates[j];
        long idx = std::lround(v);
        if (v != static_cast<double>(idx) || idx < 0 ||
            idx >= static_cast<long>(schema_[j].levels.size()))
          throw std::invalid_argument(
              "subject " + std::to_string(i + 1) + ": value for " +
              schema_[j].name + " outside declared levels");
      } else if (!std::isfinite(s.covariates[j])) {
        throw std::invalid_argument("subject " + std::to_string(i + 1) +
                                    ": non-finite value for " +
                                    schema_[j].name);
      }
    }
  }
}

std::size_t SurvivalDataset::event_count() const {
  std::size_t n = 0;
  for (const auto& s : subjects_)
    if (s.event) ++n;
  return n;
}

void SurvivalDataset::require_events() const {
  if (event_count() == 0)
    throw std::invalid_argument(
        "dataset has no observed events; at least one subject with event = 1 "
        "is required for fitting");
}

int SurvivalDataset::covariate_index(std::string_view name) const {
  for (std::size_t j = 0; j < schema_.size(); ++j)
    if (schema_[j].name == name) return static_cast<int>(j);
  return -1;
}

SurvivalDataset SurvivalDataset::subset(
    const std::vector<std::size_t>& indices) const {
  std::vector<Subject> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(subjects_[i]);
  return SurvivalDataset(schema_, std::move(picked));
}

SurvivalDataset load_csv(const std::string& path, const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  if (mapping.time_column.empty() || mapping.event_column.empty())
    throw std::invalid_argument("mapping must name a time and an event column");

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty file (header row required)");
  std::vector<std::string> header = split_line(line);

  auto column_of = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return static_cast<int>(c);
    throw std::invalid_argument(path + ": column not found: " + name);
  };

  int time_col = column_of(mapping.time_column);
  int event_col = column_of(mapping.event_column);
  if (time_col == event_col)
    throw std::invalid_argument("time and event must be distinct columns");

  std::vector<std::string> cov_names = mapping.covariate_columns;
  if (cov_names.empty()) {
    for (const auto& h : header)
      if (h != mapping.time_column && h != mapping.event_column)
        cov_names.push_back(h);
  }
  std::vector<int> cov_cols;
  for (const auto& name : cov_names) {
    if (name == mapping.time_column || name == mapping.event_column)
      throw std::invalid_argument("column " + name +
                                  " mapped both as covariate and time/event");
    cov_cols.push_back(column_of(name));
  }

  // First pass: collect raw cells row by row.
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error(path + ": row " + std::to_string(lineno) +
                               ": expected " + std::to_string(header.size()) +
                               " fields, got " + std::to_string(fields.size()));
    rows.push_back(std::move(fields));
  }

  // Infer covariate kinds.
  std::vector<Covariate> schema(cov_names.size());
  for (std::size_t j = 0; j < cov_names.size(); ++j) {
    schema[j].name = cov_names[j];
    auto declared = mapping.declared_levels.find(cov_names[j]);
    if (declared != mapping.declared_levels.end()) {
      schema[j].kind = CovariateKind::Categorical;
      schema[j].levels = declared->second;
      continue;
    }
    bool numeric = true;
    for (const auto& row : rows) {
      const std::string& cell = row[cov_cols[j]];
      if (cell.empty()) continue;  // reported as missing below
      double v;
      if (!parse_double(cell, &v)) {
        numeric = false;
        break;
      }
    }
    if (numeric) {
      schema[j].kind = CovariateKind::Numeric;
    } else {
      schema[j].kind = CovariateKind::Categorical;
      std::set<std::string> seen;
      for (const auto& row : rows)
        if (!row[cov_cols[j]].empty()) seen.insert(row[cov_cols[j]]);
      schema[j].levels.assign(seen.begin(), seen.end());
    }
  }

  std::vector<Subject> subjects;
  subjects.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string rowname = "row " + std::to_string(r + 1);
    Subject s;

    const std::string& tcell = row[time_col];
    if (tcell.empty())
      throw std::runtime_error(path + ": " + rowname +
                               ": missing value in time column");
    double t;
    if (!parse_double(tcell, &t))
      throw std::runtime_error(path + ": " + rowname +
                               ": non-numeric time value '" + tcell + "'");
    if (!(t > 0.0))
      throw std::runtime_error(path + ": " + rowname +
                               ": followup time must be positive, got " + tcell);
    s.followup_time = t;

    const std::string& ecell = row[event_col];
    if (ecell.empty())
      throw std::runtime_error(path + ": " + rowname +
                               ": missing value in event column");
    if (ecell == "0") {
      s.event = false;
    } else if (ecell == "1") {
      s.event = true;
    } else {
      throw std::runtime_error(path + ": " + rowname +
                               ": event value outside {0,1}: '" + ecell + "'");
    }

    s.covariates.resize(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const std::string& cell = row[cov_cols[j]];
      if (cell.empty())
        throw std::runtime_error(path + ": " + rowname +
                                 ": missing value for covariate " +
                                 schema[j].name);
      if (schema[j].kind == CovariateKind::Numeric) {
        double v;
        if (!parse_double(cell, &v))
          throw std::runtime_error(path + ": " + rowname +
                                   ": non-numeric value for covariate " +
                                   schema[j].name + ": '" + cell + "'");
        s.covariates[j] = v;
      } else {
        auto it = std::find(schema[j].levels.begin(), schema[j].levels.end(),
                            cell);
        if (it == schema[j].levels.end())
          throw std::runtime_error(path + ": " + rowname + ": value '" + cell +
                                   "' not among declared levels of " +
                                   schema[j].name);
        s.covariates[j] =
            static_cast<double>(it - schema[j].levels.begin());
      }
    }
    subjects.push_back(std::move(s));
  }

  return SurvivalDataset(std::move(schema), std::move(subjects));
}

void write_csv(const SurvivalDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  std::vector<std::string> fields;
  for (const auto& cov : data.schema()) fields.push_back(cov.name);
  fields.push_back("time");
  fields.push_back("event");
  out << csv_join(fields) << '\n';
  for (const auto& s : data.subjects()) {
    fields.clear();
    for (std::size_t j = 0; j < data.schema().size(); ++j) {
      const Covariate& cov = data.schema()[j];
      if (cov.kind == CovariateKind::Categorical)
        fields.push_back(cov.levels[static_cast<std::size_t>(s.covariates[j])]);
      else
        fields.push_back(format_double(s.covariates[j]));
    }
    fields.push_back(format_double(s.followup_time));
    fields.push_back(s.event ? "1" : "0");
    out << csv_join(fields) << '\n';
  }
}

std::vector<int> split_folds(const SurvivalDataset& data, int v,
                             std::uint64_t seed) {
  const int n = static_cast<int>(data.size());
  if (v < 2 || v > n)
    throw std::invalid_argument("fold count must satisfy 2 <= v <= n (v=" +
                                std::to_string(v) + ", n=" + std::to_string(n) +
                                ")");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0x0f01d5ULL));
  rng.shuffle(order);
  std::vector<int> fold(n);
  for (int pos = 0; pos < n; ++pos) fold[order[pos]] = pos % v;
  return fold;
}

}  // namespace survdsa
