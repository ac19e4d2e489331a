#ifndef SURVDSA_DSA_HPP_
#define SURVDSA_DSA_HPP_

#include <map>
#include <optional>
#include <vector>

#include "survdsa/dataset.hpp"
#include "survdsa/loss.hpp"
#include "survdsa/partition.hpp"
#include "survdsa/survival.hpp"

namespace survdsa {

struct DsaConfig {
  int max_regions = 10;          // cap on the number of risk groups
  int min_per_clause = 15;       // minimum training subjects per clause (MB)
  double min_percent_difference = 0.05;  // relative gate for deletion/substitution (MPD)
  LossSpec loss;
};

// A binary split of one region: a half-open cut for numeric covariates, a
// level subset (the left side) for categorical ones.
struct SplitChoice {
  int covariate = -1;
  double cut = 0.0;
  std::vector<int> left_levels;
  bool categorical() const { return !left_levels.empty(); }
};

struct BestSplit {
  SplitChoice choice;
  double improvement = 0.0;  // training-risk decrease, (1/n)-scale
};

// Candidate splits that reduce the weighted SSE by less than this relative
// tolerance are treated as non-improving; this keeps constant-outcome regions
// split-free under floating-point roundoff.
inline constexpr double kSplitImprovementTol = 1e-12;

// Intersects a clause with one side of a split ({x <= cut} / {x > cut}, or a
// level subset and its complement).  Empty optional when the side is
// structurally empty.
std::optional<Clause> restrict_clause(const Clause& clause,
                                      const SplitChoice& choice, bool left_side,
                                      const std::vector<Covariate>& schema);

// Exhaustive scan over covariates and candidate cut points (midpoints between
// consecutive distinct observed values; capped at 200 quantile-spaced cuts),
// minimizing the post-split training risk subject to every resulting clause
// holding at least min_per_clause subjects and every side having positive
// weight in every loss column.  Ties break to the earlier covariate in schema
// order, then the smaller cut.  Empty when no legal improving split exists or
// the region holds fewer than 2 * min_per_clause subjects.
std::optional<BestSplit> best_split(const std::vector<Clause>& region_clauses,
                                    const SurvivalDataset& data,
                                    const CensoringModel& g,
                                    const DsaConfig& config);

// Best single-region split over all regions; the split-off part is appended
// as a new region.  Requires model.size() < max_regions.
std::optional<PartitionModel> addition_move(const PartitionModel& model,
                                            const SurvivalDataset& data,
                                            const CensoringModel& g,
                                            const DsaConfig& config);

// Merges the region pair whose union raises the training risk least; the
// merged region keeps both clause lists ("or").  Requires model.size() >= 2.
std::optional<PartitionModel> deletion_move(const PartitionModel& model,
                                            const SurvivalDataset& data,
                                            const CensoringModel& g,
                                            const DsaConfig& config);

// For every region pair, splits each side at its best split and evaluates the
// six unique two-region recombinations of the four parts (two when only one
// side splits), keeping the best.  Returns a model only when it beats the
// input risk by min_percent_difference (relative).  Requires size >= 2.
std::optional<PartitionModel> substitution_move(const PartitionModel& model,
                                                const SurvivalDataset& data,
                                                const CensoringModel& g,
                                                const DsaConfig& config);

struct SizedCandidate {
  PartitionModel model;
  double train_risk = 0.0;
};

// Best candidate per model size, training risk non-increasing in size.
class CandidateList {
 public:
  bool offer(int size, PartitionModel model, double train_risk);  // keep-best
  const SizedCandidate* at(int size) const;
  // Entry at `size`, or the nearest smaller size present.
  const SizedCandidate* at_or_smaller(int size) const;
  int max_size() const;
  bool empty() const { return by_size_.empty(); }
  const std::map<int, SizedCandidate>& entries() const { return by_size_; }
  // Drops entries whose risk exceeds the best at any smaller size.
  void enforce_monotone();

 private:
  std::map<int, SizedCandidate> by_size_;
};

// The deletion/substitution/addition search.  Starting from the root model,
// repeatedly applies the first move that fires under a shrink-first schedule:
// deletion when the merge beats the incumbent at the smaller size by MPD,
// else substitution under the same rule at the current size, else addition on
// any strict improvement.  Records the best model seen at every size.
CandidateList fit_dsa(const SurvivalDataset& data, const CensoringModel& g,
                      const DsaConfig& config);

}  // namespace survdsa

#endif  // SURVDSA_DSA_HPP_
