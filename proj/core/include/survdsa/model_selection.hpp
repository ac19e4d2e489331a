#ifndef SURVDSA_MODEL_SELECTION_HPP_
#define SURVDSA_MODEL_SELECTION_HPP_

#include <functional>
#include <string>
#include <vector>

#include "survdsa/dataset.hpp"
#include "survdsa/dsa.hpp"
#include "survdsa/loss.hpp"
#include "survdsa/partition.hpp"
#include "survdsa/survival.hpp"

namespace survdsa {

struct CvCurve {
  std::vector<double> cv_risk;  // index k-1 holds size k
  int chosen_size = 1;
};

using CandidateFitter =
    std::function<CandidateList(const SurvivalDataset&, const CensoringModel&)>;
using CensoringRefitter = std::function<CensoringModel(const SurvivalDataset&)>;

// Smallest k with cv_risk(k) <= cv_risk(k+1); the largest size when the curve
// is strictly decreasing.
int first_minimum(const std::vector<double>& cv_risk);

// v-fold cross-validated risk curve.  Per fold: refit the censoring model on
// the training part, fit candidates, and score each size on the held-out part
// with the training-fold censoring model; sizes a fold never reached reuse
// its nearest smaller candidate.  Fold risks are averaged per size.
CvCurve cross_validate(const SurvivalDataset& data, const std::vector<int>& folds,
                       const CandidateFitter& fitter,
                       const CensoringRefitter& censoring_refitter,
                       const LossSpec& loss);

struct FinalFitResult {
  PartitionModel model;
  double train_risk = 0.0;
  int requested_size = 0;
  bool fallback = false;  // chosen size missing; nearest smaller used
};

// Refits candidates on the full dataset and returns the one at chosen_size
// (nearest smaller with a warning when absent).
FinalFitResult final_fit(const SurvivalDataset& data, int chosen_size,
                         const CandidateFitter& fitter, const LossSpec& loss,
                         const CensoringModel& g);

void write_cv_curve_csv(const CvCurve& curve, const std::string& path);

}  // namespace survdsa

#endif  // SURVDSA_MODEL_SELECTION_HPP_
