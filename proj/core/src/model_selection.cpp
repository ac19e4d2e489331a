#include "survdsa/model_selection.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "survdsa/format.hpp"

namespace survdsa {

int first_minimum(const std::vector<double>& cv_risk) {
  if (cv_risk.empty()) throw std::invalid_argument("first_minimum: empty curve");
  for (std::size_t k = 0; k + 1 < cv_risk.size(); ++k)
    if (cv_risk[k] <= cv_risk[k + 1]) return static_cast<int>(k + 1);
  return static_cast<int>(cv_risk.size());
}

CvCurve cross_validate(const SurvivalDataset& data, const std::vector<int>& folds,
                       const CandidateFitter& fitter,
                       const CensoringRefitter& censoring_refitter,
                       const LossSpec& loss) {
  if (folds.size() != data.size())
    throw std::invalid_argument("cross_validate: fold assignment size mismatch");
  int v = 0;
  for (int f : folds) v = std::max(v, f + 1);
  if (v < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");

  struct FoldFit {
    SurvivalDataset heldout;
    CensoringModel g;
    CandidateList candidates;
  };
  std::vector<FoldFit> fits;
  fits.reserve(static_cast<std::size_t>(v));
  int max_size = 1;
  for (int f = 0; f < v; ++f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < data.size(); ++i)
      (folds[i] == f ? test_idx : train_idx).push_back(i);
    SurvivalDataset train = data.subset(train_idx);
    if (train.event_count() == 0)
      throw std::runtime_error("cross_validate: training part of fold " +
                               std::to_string(f) + " has no events");
    CensoringModel g = censoring_refitter(train);
    CandidateList candidates = fitter(train, g);
    if (candidates.empty())
      throw std::runtime_error("cross_validate: fitter returned no candidates");
    max_size = std::max(max_size, candidates.max_size());
    fits.push_back(FoldFit{data.subset(test_idx), std::move(g),
                           std::move(candidates)});
  }

  CvCurve curve;
  curve.cv_risk.resize(static_cast<std::size_t>(max_size));
  for (int k = 1; k <= max_size; ++k) {
    double sum = 0.0;
    for (const FoldFit& fit : fits) {
      const SizedCandidate* cand = fit.candidates.at_or_smaller(k);
      sum += observed_risk(cand->model, fit.heldout, fit.g, loss);
    }
    curve.cv_risk[static_cast<std::size_t>(k - 1)] =
        sum / static_cast<double>(v);
  }
  curve.chosen_size = first_minimum(curve.cv_risk);
  return curve;
}

FinalFitResult final_fit(const SurvivalDataset& data, int chosen_size,
                         const CandidateFitter& fitter, const LossSpec& loss,
                         const CensoringModel& g) {
  (void)loss;
  CandidateList candidates = fitter(data, g);
  if (candidates.empty())
    throw std::runtime_error("final_fit: fitter returned no candidates");
  const SizedCandidate* cand = candidates.at_or_smaller(chosen_size);
  if (!cand)
    throw std::runtime_error("final_fit: no candidate at or below size " +
                             std::to_string(chosen_size));
  FinalFitResult out{cand->model, cand->train_risk, chosen_size, false};
  if (static_cast<int>(cand->model.size()) != chosen_size) {
    out.fallback = true;
    std::cerr << "warning: no size-" << chosen_size
              << " candidate on the full data; using size "
              << cand->model.size() << " instead\n";
  }
  return out;
}

void write_cv_curve_csv(const CvCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "size,cv_risk\n";
  for (std::size_t k = 0; k < curve.cv_risk.size(); ++k)
    out << (k + 1) << ',' << format_double(curve.cv_risk[k]) << '\n';
}

}  // namespace survdsa
