#ifndef SURVDSA_PARTITION_HPP_
#define SURVDSA_PARTITION_HPP_

#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "survdsa/dataset.hpp"
#include "survdsa/loss.hpp"

namespace survdsa {

// Half-open numeric interval (lower, upper]; either end may be infinite.
struct NumericRange {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return v > lower && v <= upper; }
  bool empty() const { return !(lower < upper); }
};

// Constraint on one covariate: a range for numeric kinds, a sorted level-index
// subset for categorical kinds.
struct Constraint {
  NumericRange range;
  std::vector<int> levels;  // non-empty => categorical constraint

  bool categorical() const { return !levels.empty(); }
  bool contains(double v) const;
};

// Conjunction of per-covariate constraints; unconstrained covariates are
// simply absent.
struct Clause {
  std::vector<std::pair<int, Constraint>> constraints;  // sorted by covariate

  bool contains(std::span<const double> w) const;
  const Constraint* find(int covariate) const;
  void set(int covariate, Constraint c);
};

// One risk group: a union ("or") of pairwise-disjoint clauses plus one fitted
// value per loss column.
struct Region {
  std::vector<Clause> clauses;
  std::vector<double> predictions;
};

// Ordered, pairwise-disjoint, jointly exhaustive regions over the covariate
// space.  Models are immutable in spirit: fitting operations return copies.
class PartitionModel {
 public:
  PartitionModel() = default;
  PartitionModel(std::vector<Covariate> schema, std::vector<Region> regions,
                 std::vector<double> prediction_times = {});

  static PartitionModel root(std::vector<Covariate> schema);

  std::size_t size() const { return regions_.size(); }
  const std::vector<Region>& regions() const { return regions_; }
  std::vector<Region>& regions() { return regions_; }
  const std::vector<Covariate>& schema() const { return schema_; }
  const std::vector<double>& prediction_times() const { return prediction_times_; }
  void set_prediction_times(std::vector<double> t) { prediction_times_ = std::move(t); }

  int assign(std::span<const double> w) const;
  double predict(std::span<const double> w) const;  // first prediction column
  std::span<const double> predict_vector(std::span<const double> w) const;

  // Distinct covariate names appearing in any clause constraint.
  std::vector<std::string> variables_used() const;

  std::string to_json() const;
  static PartitionModel from_json(const std::string& text);

  // Risk-group table: one block per region ordered by fitted value, one row
  // per clause, one column per constrained variable.
  std::string risk_table_text() const;

 private:
  std::vector<Covariate> schema_;
  std::vector<Region> regions_;
  std::vector<double> prediction_times_;  // non-empty for Brier-grid models
};

// Region indices for every subject.
std::vector<int> assign_all(const PartitionModel& model,
                            const SurvivalDataset& data);

// Sets every region's predictions to the loss-minimizing constants (weighted
// means per column; weighted survival proportions for the Brier kind).
// Throws when a region has zero total weight in some column.
PartitionModel refit_predictions(const PartitionModel& model,
                                 const SurvivalDataset& data,
                                 const LossSpec& loss, const CensoringModel& g);

// Same, from a prebuilt table (avoids recomputing IPCW weights in the search).
PartitionModel refit_predictions(const PartitionModel& model,
                                 const SurvivalDataset& data,
                                 const LossTable& table);

}  // namespace survdsa

#endif  // SURVDSA_PARTITION_HPP_
