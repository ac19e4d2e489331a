#include "survdsa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace survdsa {

Concordance concordance(std::span<const double> observed,
                        std::span<const double> predicted) {
  const std::size_t n = observed.size();
  if (n != predicted.size())
    throw std::invalid_argument("concordance: length mismatch");
  if (n < 2) throw std::invalid_argument("concordance: need at least 2 subjects");

  // group subject outcomes by predicted value
  std::map<double, std::vector<double>> groups;
  for (std::size_t i = 0; i < n; ++i)
    groups[predicted[i]].push_back(observed[i]);
  std::vector<std::vector<double>> by_pred;
  by_pred.reserve(groups.size());
  for (auto& [pred, outcomes] : groups) {
    (void)pred;
    std::sort(outcomes.begin(), outcomes.end());
    by_pred.push_back(std::move(outcomes));
  }

  auto equal_pairs_within = [](const std::vector<double>& sorted) {
    double pairs = 0.0;
    std::size_t k = 0;
    while (k < sorted.size()) {
      std::size_t run = 1;
      while (k + run < sorted.size() && sorted[k + run] == sorted[k]) ++run;
      pairs += 0.5 * static_cast<double>(run) * static_cast<double>(run - 1);
      k += run;
    }
    return pairs;
  };

  // lower-prediction group first: count (i in a, j in b) with obs_a < obs_b,
  // and outcome ties across the pair
  double untied_concordant = 0.0, untied_total = 0.0, tied_pred_distinct = 0.0;
  for (std::size_t a = 0; a < by_pred.size(); ++a) {
    const auto& ga = by_pred[a];
    tied_pred_distinct += 0.5 * static_cast<double>(ga.size()) *
                              static_cast<double>(ga.size() - 1) -
                          equal_pairs_within(ga);
    for (std::size_t b = a + 1; b < by_pred.size(); ++b) {
      const auto& gb = by_pred[b];
      double less = 0.0, equal = 0.0;
      std::size_t lo = 0, eq_hi = 0;
      for (const double y : gb) {
        while (lo < ga.size() && ga[lo] < y) ++lo;
        while (eq_hi < ga.size() && ga[eq_hi] <= y) ++eq_hi;
        less += static_cast<double>(lo);
        equal += static_cast<double>(eq_hi - lo);
      }
      const double total = static_cast<double>(ga.size()) *
                           static_cast<double>(gb.size());
      untied_total += total - equal;
      untied_concordant += less;
    }
  }

  const double distinct_outcome_pairs = untied_total + tied_pred_distinct;
  if (distinct_outcome_pairs <= 0.0)
    throw std::domain_error(
        "concordance: all observed outcomes are equal; the index is undefined");
  if (untied_total <= 0.0)
    throw std::domain_error(
        "concordance: all predicted values are tied; c_p is undefined");

  const double c_p = untied_concordant / untied_total;
  // ties-as-concordant variant over every distinct-outcome pair
  const double c_tied =
      (untied_concordant + tied_pred_distinct) / distinct_outcome_pairs;
  return Concordance{c_p, 0.5 * (c_p + c_tied)};
}

namespace {

std::vector<double> region_test_means(const PartitionModel& model,
                                      const SurvivalDataset& test,
                                      const std::vector<int>& assignment) {
  std::vector<double> sum(model.size(), 0.0);
  std::vector<std::size_t> count(model.size(), 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (!test.event(i)) continue;  // uncensored outcomes only
    sum[static_cast<std::size_t>(assignment[i])] += test.time(i);
    count[static_cast<std::size_t>(assignment[i])]++;
  }
  std::vector<double> mean(model.size());
  for (std::size_t r = 0; r < model.size(); ++r) {
    if (count[r] == 0)
      throw std::runtime_error("region " + std::to_string(r) +
                               " holds no uncensored test subjects");
    mean[r] = sum[r] / static_cast<double>(count[r]);
  }
  return mean;
}

}  // namespace

double prediction_error(const PartitionModel& truth,
                        const PartitionModel& estimate,
                        const SurvivalDataset& test) {
  if (test.size() == 0) throw std::invalid_argument("prediction_error: empty test set");
  const std::vector<int> at = assign_all(truth, test);
  const std::vector<int> ae = assign_all(estimate, test);
  const std::vector<double> mt = region_test_means(truth, test, at);
  const std::vector<double> me = region_test_means(estimate, test, ae);
  double sum = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double d = mt[static_cast<std::size_t>(at[i])] -
                     me[static_cast<std::size_t>(ae[i])];
    sum += d * d;
  }
  return sum / static_cast<double>(test.size());
}

double pairwise_similarity(const PartitionModel& truth,
                           const PartitionModel& estimate,
                           const SurvivalDataset& test) {
  const std::size_t n = test.size();
  if (n < 2) throw std::invalid_argument("pairwise_similarity: need >= 2 subjects");
  const std::vector<int> at = assign_all(truth, test);
  const std::vector<int> ae = assign_all(estimate, test);

  // contingency counts make the pair sums O(cells)
  std::map<std::pair<int, int>, double> cell;
  std::map<int, double> row, col;
  for (std::size_t i = 0; i < n; ++i) {
    cell[{at[i], ae[i]}] += 1.0;
    row[at[i]] += 1.0;
    col[ae[i]] += 1.0;
  }
  auto choose2 = [](double m) { return 0.5 * m * (m - 1.0); };
  double same_truth = 0.0, same_est = 0.0, same_both = 0.0;
  for (const auto& [r, m] : row) {
    (void)r;
    same_truth += choose2(m);
  }
  for (const auto& [c, m] : col) {
    (void)c;
    same_est += choose2(m);
  }
  for (const auto& [rc, m] : cell) {
    (void)rc;
    same_both += choose2(m);
  }
  const double disagreements = (same_truth - same_both) + (same_est - same_both);
  const double total = choose2(static_cast<double>(n));
  return 1.0 - disagreements / total;
}

std::vector<double> region_ipcw_mean_time(const PartitionModel& model,
                                          const SurvivalDataset& train,
                                          const CensoringModel& g) {
  const std::vector<double> w = ipcw_weights(train, g);
  const std::vector<int> assignment = assign_all(model, train);
  std::vector<double> num(model.size(), 0.0), den(model.size(), 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    num[static_cast<std::size_t>(assignment[i])] += w[i] * train.time(i);
    den[static_cast<std::size_t>(assignment[i])] += w[i];
  }
  std::vector<double> out(model.size());
  for (std::size_t r = 0; r < model.size(); ++r) {
    if (!(den[r] > 0.0))
      throw std::runtime_error("region " + std::to_string(r) +
                               " has zero IPCW weight in the training set");
    out[r] = num[r] / den[r];
  }
  return out;
}

RankedCurves region_survival_curves(const PartitionModel& model,
                                    const SurvivalDataset& test) {
  const std::vector<int> assignment = assign_all(model, test);
  std::vector<std::vector<double>> times(model.size());
  std::vector<std::vector<int>> events(model.size());
  std::vector<double> mean(model.size(), 0.0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto r = static_cast<std::size_t>(assignment[i]);
    times[r].push_back(test.time(i));
    events[r].push_back(test.event(i) ? 1 : 0);
    mean[r] += test.time(i);
  }
  std::vector<std::size_t> order(model.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t r = 0; r < model.size(); ++r) {
    if (times[r].empty())
      throw std::runtime_error("region " + std::to_string(r) +
                               " holds no test subjects");
    mean[r] /= static_cast<double>(times[r].size());
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mean[a] < mean[b]; });
  RankedCurves out;
  for (std::size_t r : order)
    out.curves.push_back(kaplan_meier(times[r], events[r]));
  return out;
}

PointwiseBands pointwise_bands(const std::vector<std::vector<double>>& values) {
  if (values.empty())
    throw std::invalid_argument("pointwise_bands: no replicates");
  const std::size_t points = values.front().size();
  for (const auto& v : values)
    if (v.size() != points)
      throw std::invalid_argument("pointwise_bands: ragged replicate values");
  const std::size_t m = values.size();
  auto order_stat = [&](std::vector<double>& sorted, double p) {
    std::size_t k = static_cast<std::size_t>(
        std::ceil(p * static_cast<double>(m) - 1e-12));
    if (k < 1) k = 1;
    if (k > m) k = m;
    return sorted[k - 1];
  };
  PointwiseBands out;
  out.mean.resize(points);
  out.lower.resize(points);
  out.upper.resize(points);
  std::vector<double> column(m);
  for (std::size_t p = 0; p < points; ++p) {
    for (std::size_t r = 0; r < m; ++r) column[r] = values[r][p];
    out.mean[p] = std::accumulate(column.begin(), column.end(), 0.0) /
                  static_cast<double>(m);
    std::sort(column.begin(), column.end());
    out.lower[p] = order_stat(column, 0.025);
    out.upper[p] = order_stat(column, 0.975);
  }
  return out;
}

StratificationBands stratification_bands(const std::vector<RankedCurves>& replicates,
                                         const std::vector<double>& grid) {
  if (replicates.empty())
    throw std::runtime_error("stratification_bands: no replicates of the requested size");
  const std::size_t ranks = replicates.front().curves.size();
  for (const auto& r : replicates)
    if (r.curves.size() != ranks)
      throw std::invalid_argument(
          "stratification_bands: replicates disagree on region count");
  StratificationBands out;
  out.grid = grid;
  for (std::size_t rank = 0; rank < ranks; ++rank) {
    std::vector<std::vector<double>> values(replicates.size());
    for (std::size_t r = 0; r < replicates.size(); ++r) {
      values[r].resize(grid.size());
      for (std::size_t p = 0; p < grid.size(); ++p)
        values[r][p] = replicates[r].curves[rank].at(grid[p]);
    }
    out.by_rank.push_back(pointwise_bands(values));
  }
  return out;
}

}  // namespace survdsa
