#ifndef SURVDSA_SURVIVAL_HPP_
#define SURVDSA_SURVIVAL_HPP_

#include <span>
#include <string>
#include <vector>

#include "survdsa/dataset.hpp"

namespace survdsa {

// Right-continuous step function with S(t) = 1 before the first jump.
class StepSurvivalCurve {
 public:
  StepSurvivalCurve() = default;
  StepSurvivalCurve(std::vector<double> jump_times, std::vector<double> values);

  // S(t), right-continuous.
  double at(double t) const;
  // Left limit S(t-).
  double before(double t) const;

  const std::vector<double>& jump_times() const { return jump_times_; }
  const std::vector<double>& values() const { return values_; }
  double final_value() const { return values_.empty() ? 1.0 : values_.back(); }

  void write_csv(const std::string& path) const;  // columns: time,survival

 private:
  std::vector<double> jump_times_;  // strictly increasing
  std::vector<double> values_;      // value after each jump, non-increasing
};

// Product-limit estimator; jumps only at event times.
StepSurvivalCurve kaplan_meier(const std::vector<double>& times,
                               const std::vector<int>& events);

enum class CensoringKind { ProductLimit, ProportionalHazards };

// Estimator of the censoring survival function G(t|w) = P(C >= t | W = w).
// The product-limit kind ignores covariates entirely.  The proportional-
// hazards kind stores a baseline curve at centered covariates; predictions
// are exp(-Lambda0(t) * exp(beta' (w - mean))), i.e. baseline^exp(eta).
class CensoringModel {
 public:
  static CensoringModel product_limit(StepSurvivalCurve baseline);
  static CensoringModel proportional_hazards(StepSurvivalCurve baseline,
                                             std::vector<int> covariate_indices,
                                             std::vector<double> coefficients,
                                             std::vector<double> centering);

  CensoringKind kind() const { return kind_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<int>& covariate_indices() const { return covariate_indices_; }
  const StepSurvivalCurve& baseline() const { return baseline_; }

  // Right-continuous evaluation and the left limit.  IPCW weights use the
  // left limit so a subject's own censoring jump does not zero its weight.
  double survival(double t, std::span<const double> w) const;
  double survival_before(double t, std::span<const double> w) const;

 private:
  CensoringKind kind_ = CensoringKind::ProductLimit;
  StepSurvivalCurve baseline_;
  std::vector<int> covariate_indices_;
  std::vector<double> coefficients_;
  std::vector<double> centering_;
};

// Fits G on (followup, 1 - event).  covariate_subset is required (non-empty)
// for the proportional-hazards kind and ignored for the product-limit kind.
// Cox fitting uses the Breslow tie convention and Breslow baseline, Newton
// iteration with step halving (max 50 steps, gradient tolerance 1e-8).
CensoringModel fit_censoring_model(const SurvivalDataset& data,
                                   CensoringKind kind,
                                   const std::vector<std::string>& covariate_subset = {});

struct TruncationResult {
  double tau = 0.0;
  SurvivalDataset dataset;
};

// Sample-dependent truncation: tau is the ceil((1-f)*n)-th order statistic of
// the follow-up times; times above tau are clamped to tau and marked as
// events.  Requires f*n >= 1.
TruncationResult truncate(const SurvivalDataset& data, double exceed_fraction);

// G evaluations at or below this floor raise instead of producing huge
// weights; the remedy is truncation.
inline constexpr double kCensoringSurvivalFloor = 1e-8;

// weight_i = event_i / G(t_i - | w_i); censored subjects get weight 0.
std::vector<double> ipcw_weights(const SurvivalDataset& data,
                                 const CensoringModel& g);

}  // namespace survdsa

#endif  // SURVDSA_SURVIVAL_HPP_
