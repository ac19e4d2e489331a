#ifndef SURVDSA_EVALUATION_HPP_
#define SURVDSA_EVALUATION_HPP_

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "survdsa/dataset.hpp"
#include "survdsa/partition.hpp"
#include "survdsa/survival.hpp"

namespace survdsa {

struct Concordance {
  double c_p = 0.0;      // tied predicted pairs excluded
  double c_bar_p = 0.0;  // average of c_p and the ties-as-concordant variant
};

// Harrell-style concordance over pairs with distinct observed outcomes.
// Throws when every pair is tied on the observed outcome or on predictions.
Concordance concordance(std::span<const double> observed,
                        std::span<const double> predicted);

// Mean squared difference between the two models' per-subject predictions on
// the test set, with every region's value replaced by the mean uncensored
// test outcome of its co-assigned subjects.  Zero iff the models induce the
// same test-set grouping.
double prediction_error(const PartitionModel& truth,
                        const PartitionModel& estimate,
                        const SurvivalDataset& test);

// 1 - (pairs grouped differently by the two models) / C(n,2).
double pairwise_similarity(const PartitionModel& truth,
                           const PartitionModel& estimate,
                           const SurvivalDataset& test);

// Region-level IPCW-weighted mean follow-up time from training data; the
// predicted outcome used for concordance.
std::vector<double> region_ipcw_mean_time(const PartitionModel& model,
                                          const SurvivalDataset& train,
                                          const CensoringModel& g);

// Per-region Kaplan-Meier curves on the test set, ranked by ascending region
// mean observed time (rank 0 = shortest survival).
struct RankedCurves {
  std::vector<StepSurvivalCurve> curves;
};
RankedCurves region_survival_curves(const PartitionModel& model,
                                    const SurvivalDataset& test);

// Pointwise mean and order-statistic 0.025/0.975 percentiles across
// replicates: values[replicate][point].  With one replicate the bands
// collapse onto the curve.
struct PointwiseBands {
  std::vector<double> mean, lower, upper;
};
PointwiseBands pointwise_bands(const std::vector<std::vector<double>>& values);

// Replicate curve collections of a common region count, evaluated on a grid
// and aggregated rank by rank.
struct StratificationBands {
  std::vector<double> grid;
  std::vector<PointwiseBands> by_rank;
};
StratificationBands stratification_bands(const std::vector<RankedCurves>& replicates,
                                         const std::vector<double>& grid);

struct MetricReport {
  int size = 0;
  double c_p = std::numeric_limits<double>::quiet_NaN();
  double c_bar_p = std::numeric_limits<double>::quiet_NaN();
  double l_p = std::numeric_limits<double>::quiet_NaN();
  double d_p = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> variables_used;
};

}  // namespace survdsa

#endif  // SURVDSA_EVALUATION_HPP_
