#include "survdsa/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "survdsa/format.hpp"

namespace survdsa {

bool Constraint::contains(double v) const {
  if (categorical())
    return std::binary_search(levels.begin(), levels.end(),
                              static_cast<int>(std::lround(v)));
  return range.contains(v);
}

bool Clause::contains(std::span<const double> w) const {
  for (const auto& [covariate, c] : constraints)
    if (!c.contains(w[static_cast<std::size_t>(covariate)])) return false;
  return true;
}

const Constraint* Clause::find(int covariate) const {
  for (const auto& [j, c] : constraints)
    if (j == covariate) return &c;
  return nullptr;
}

void Clause::set(int covariate, Constraint c) {
  for (auto& [j, existing] : constraints) {
    if (j == covariate) {
      existing = std::move(c);
      return;
    }
  }
  constraints.emplace_back(covariate, std::move(c));
  std::sort(constraints.begin(), constraints.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
}

PartitionModel::PartitionModel(std::vector<Covariate> schema,
                               std::vector<Region> regions,
                               std::vector<double> prediction_times)
    : schema_(std::move(schema)),
      regions_(std::move(regions)),
      prediction_times_(std::move(prediction_times)) {
  if (regions_.empty())
    throw std::invalid_argument("partition model needs at least one region");
  for (const auto& r : regions_)
    if (r.clauses.empty())
      throw std::invalid_argument("region with no clauses");
}

PartitionModel PartitionModel::root(std::vector<Covariate> schema) {
  Region whole;
  whole.clauses.emplace_back();  // no constraints: the entire space
  whole.predictions = {0.0};
  return PartitionModel(std::move(schema), {std::move(whole)});
}

int PartitionModel::assign(std::span<const double> w) const {
  for (std::size_t r = 0; r < regions_.size(); ++r)
    for (const auto& clause : regions_[r].clauses)
      if (clause.contains(w)) return static_cast<int>(r);
  throw std::logic_error(
      "partition invariant violated: covariate vector matches no region");
}

double PartitionModel::predict(std::span<const double> w) const {
  return regions_[static_cast<std::size_t>(assign(w))].predictions.at(0);
}

std::span<const double> PartitionModel::predict_vector(
    std::span<const double> w) const {
  return regions_[static_cast<std::size_t>(assign(w))].predictions;
}

std::vector<std::string> PartitionModel::variables_used() const {
  std::vector<bool> used(schema_.size(), false);
  for (const auto& region : regions_)
    for (const auto& clause : region.clauses)
      for (const auto& [j, c] : clause.constraints) {
        (void)c;
        used[static_cast<std::size_t>(j)] = true;
      }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < schema_.size(); ++j)
    if (used[j]) names.push_back(schema_[j].name);
  return names;
}

std::vector<int> assign_all(const PartitionModel& model,
                            const SurvivalDataset& data) {
  std::vector<int> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    out[i] = model.assign(data.covariates(i));
  return out;
}

PartitionModel refit_predictions(const PartitionModel& model,
                                 const SurvivalDataset& data,
                                 const LossTable& table) {
  if (table.n != data.size())
    throw std::invalid_argument("refit_predictions: table/data size mismatch");
  std::vector<int> region_of = assign_all(model, data);
  std::vector<GroupStats> stats(model.size(), GroupStats(table.cols));
  for (std::size_t i = 0; i < data.size(); ++i)
    stats[static_cast<std::size_t>(region_of[i])].add(table, i);

  PartitionModel out = model;
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (!stats[r].fittable())
      throw std::runtime_error("refit_predictions: region " + std::to_string(r) +
                               " has zero total weight");
    auto& pred = out.regions()[r].predictions;
    pred.assign(table.cols, 0.0);
    for (std::size_t c = 0; c < table.cols; ++c) {
      double v = stats[r].swy[c] / stats[r].sw[c];
      if (table.clip_unit) v = std::min(1.0, std::max(0.0, v));
      pred[c] = v;
    }
  }
  return out;
}

PartitionModel refit_predictions(const PartitionModel& model,
                                 const SurvivalDataset& data,
                                 const LossSpec& loss, const CensoringModel& g) {
  PartitionModel out = refit_predictions(model, data, build_loss_table(data, g, loss));
  out.set_prediction_times(loss.kind == LossKind::Brier ? loss.brier_times
                                                        : std::vector<double>{});
  return out;
}

namespace {

using nlohmann::ordered_json;

ordered_json constraint_to_json(const Covariate& cov, const Constraint& c) {
  ordered_json j;
  j["covariate"] = cov.name;
  if (c.categorical()) {
    ordered_json levels = ordered_json::array();
    for (int idx : c.levels) levels.push_back(cov.levels.at(static_cast<std::size_t>(idx)));
    j["levels"] = levels;
  } else {
    if (std::isfinite(c.range.lower)) j["lower"] = c.range.lower;
    if (std::isfinite(c.range.upper)) j["upper"] = c.range.upper;
  }
  return j;
}

std::string render_constraint(const Covariate& cov, const Constraint& c) {
  std::ostringstream os;
  if (c.categorical()) {
    os << "in {";
    for (std::size_t k = 0; k < c.levels.size(); ++k) {
      if (k) os << ",";
      os << cov.levels[static_cast<std::size_t>(c.levels[k])];
    }
    os << "}";
    return os.str();
  }
  const bool lo = std::isfinite(c.range.lower);
  const bool hi = std::isfinite(c.range.upper);
  if (lo && hi)
    os << "(" << format_double(c.range.lower) << ", "
       << format_double(c.range.upper) << "]";
  else if (lo)
    os << "> " << format_double(c.range.lower);
  else if (hi)
    os << "<= " << format_double(c.range.upper);
  else
    os << "any";
  return os.str();
}

}  // namespace

std::string PartitionModel::to_json() const {
  ordered_json j;
  j["schema"] = ordered_json::array();
  for (const auto& cov : schema_) {
    ordered_json c;
    c["name"] = cov.name;
    c["kind"] = cov.kind == CovariateKind::Numeric ? "numeric" : "categorical";
    if (cov.kind == CovariateKind::Categorical) c["levels"] = cov.levels;
    j["schema"].push_back(c);
  }
  if (!prediction_times_.empty()) j["prediction_times"] = prediction_times_;
  j["regions"] = ordered_json::array();
  for (const auto& region : regions_) {
    ordered_json r;
    r["clauses"] = ordered_json::array();
    for (const auto& clause : region.clauses) {
      ordered_json cl;
      cl["constraints"] = ordered_json::array();
      for (const auto& [cov_idx, c] : clause.constraints)
        cl["constraints"].push_back(
            constraint_to_json(schema_[static_cast<std::size_t>(cov_idx)], c));
      r["clauses"].push_back(cl);
    }
    r["predictions"] = region.predictions;
    j["regions"].push_back(r);
  }
  return j.dump(2);
}

PartitionModel PartitionModel::from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  std::vector<Covariate> schema;
  for (const auto& c : j.at("schema")) {
    Covariate cov;
    cov.name = c.at("name").get<std::string>();
    const std::string kind = c.at("kind").get<std::string>();
    if (kind == "numeric") {
      cov.kind = CovariateKind::Numeric;
    } else if (kind == "categorical") {
      cov.kind = CovariateKind::Categorical;
      cov.levels = c.at("levels").get<std::vector<std::string>>();
    } else {
      throw std::runtime_error("model json: unknown covariate kind " + kind);
    }
    schema.push_back(std::move(cov));
  }
  auto covariate_of = [&](const std::string& name) {
    for (std::size_t k = 0; k < schema.size(); ++k)
      if (schema[k].name == name) return static_cast<int>(k);
    throw std::runtime_error("model json: unknown covariate " + name);
  };
  std::vector<double> times;
  if (j.contains("prediction_times"))
    times = j.at("prediction_times").get<std::vector<double>>();
  std::vector<Region> regions;
  for (const auto& r : j.at("regions")) {
    Region region;
    for (const auto& cl : r.at("clauses")) {
      Clause clause;
      for (const auto& cj : cl.at("constraints")) {
        const int cov_idx = covariate_of(cj.at("covariate").get<std::string>());
        const Covariate& cov = schema[static_cast<std::size_t>(cov_idx)];
        Constraint c;
        if (cj.contains("levels")) {
          for (const auto& lv : cj.at("levels")) {
            auto it = std::find(cov.levels.begin(), cov.levels.end(),
                                lv.get<std::string>());
            if (it == cov.levels.end())
              throw std::runtime_error("model json: unknown level for " + cov.name);
            c.levels.push_back(static_cast<int>(it - cov.levels.begin()));
          }
          std::sort(c.levels.begin(), c.levels.end());
        } else {
          if (cj.contains("lower")) c.range.lower = cj.at("lower").get<double>();
          if (cj.contains("upper")) c.range.upper = cj.at("upper").get<double>();
        }
        clause.set(cov_idx, std::move(c));
      }
      region.clauses.push_back(std::move(clause));
    }
    region.predictions = r.at("predictions").get<std::vector<double>>();
    regions.push_back(std::move(region));
  }
  return PartitionModel(std::move(schema), std::move(regions), std::move(times));
}

std::string PartitionModel::risk_table_text() const {
  // Regions ordered by first fitted value, best outcome first.
  std::vector<std::size_t> order(regions_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return regions_[a].predictions.at(0) > regions_[b].predictions.at(0);
  });

  std::vector<int> shown;
  {
    std::vector<bool> used(schema_.size(), false);
    for (const auto& region : regions_)
      for (const auto& clause : region.clauses)
        for (const auto& [j, c] : clause.constraints) {
          (void)c;
          used[static_cast<std::size_t>(j)] = true;
        }
    for (std::size_t j = 0; j < schema_.size(); ++j)
      if (used[j]) shown.push_back(static_cast<int>(j));
  }

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> head = {"group", "value"};
  for (int j : shown) head.push_back(schema_[static_cast<std::size_t>(j)].name);
  table.push_back(head);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Region& region = regions_[order[rank]];
    for (std::size_t k = 0; k < region.clauses.size(); ++k) {
      std::vector<std::string> row;
      row.push_back(k == 0 ? std::to_string(rank + 1) : "");
      row.push_back(k == 0 ? format_double(region.predictions.at(0)) : "");
      for (int j : shown) {
        const Constraint* c = region.clauses[k].find(j);
        row.push_back(c ? render_constraint(schema_[static_cast<std::size_t>(j)], *c)
                        : "");
      }
      table.push_back(std::move(row));
    }
  }

  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : table)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << row[c] << std::string(width[c] - row[c].size(), ' ');
      os << (c + 1 == row.size() ? "" : "  ");
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace survdsa
