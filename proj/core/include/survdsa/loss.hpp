#ifndef SURVDSA_LOSS_HPP_
#define SURVDSA_LOSS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "survdsa/dataset.hpp"
#include "survdsa/survival.hpp"

namespace survdsa {

class PartitionModel;

enum class LossKind { FullL2, IpcwL2, Brier };
enum class TimeScale { RawTime, LogTime };

// Which observed-data loss to minimize.  L2 kinds predict the (possibly
// log-transformed) survival time; the Brier kind predicts survival status at
// each grid time, with a composite risk sum_r weight_r * BS(t_r).
struct LossSpec {
  LossKind kind = LossKind::IpcwL2;
  TimeScale scale = TimeScale::LogTime;  // L2 kinds only
  std::vector<double> brier_times;       // strictly increasing
  std::vector<double> brier_weights;     // same length as brier_times

  static LossSpec full_l2(TimeScale scale = TimeScale::LogTime);
  static LossSpec ipcw_l2(TimeScale scale = TimeScale::LogTime);
  static LossSpec brier(std::vector<double> times, std::vector<double> weights);
  // Weights |t_r / t_p| relative to the last grid time, emphasizing later
  // survival differences.
  static LossSpec brier_ratio_weighted(std::vector<double> times);

  std::size_t columns() const {
    return kind == LossKind::Brier ? brier_times.size() : 1;
  }
  void validate() const;
};

// Maps (followup, event) to the time-t working observation: the time is
// min(followup, t); a subject still at risk at t (followup >= t) counts as an
// observed outcome with status 1, anyone else keeps their own event flag and
// has status 0.
struct BrierTransform {
  double t = 0.0;
  struct Result {
    double time;
    int event;
    double status;  // I(followup >= t)
  };
  Result apply(double followup, bool event) const {
    if (followup >= t) return {t, 1, 1.0};
    return {followup, event ? 1 : 0, 0.0};
  }
};

// (1/n) sum_i weight_i (outcome_i - prediction_i)^2; n counts zero-weight
// entries too.
double empirical_risk_l2(std::span<const double> predictions,
                         std::span<const double> outcomes,
                         std::span<const double> weights);

// Eq.-style IPCW risk: (1/n) sum_i event_i / G(t_i - | w_i) *
// (z_i - psi(w_i))^2 with z per the time scale.
double ipcw_l2_risk(const PartitionModel& model, const SurvivalDataset& data,
                    const CensoringModel& g, TimeScale scale);

// Censoring-adjusted Brier score at time t via the transformed-IPCW form,
// with an internal recomputation of the three-group form (censored-before-t
// subjects drop out; events before t contribute (0 - psi)^2 / G(t_i -);
// subjects at risk at t contribute (1 - psi)^2 / G(t -)).  The two routes
// must agree to near machine precision or a logic_error is thrown.
double brier_risk(const PartitionModel& model, const SurvivalDataset& data,
                  const CensoringModel& g, double t);

double composite_brier_risk(const PartitionModel& model,
                            const SurvivalDataset& data,
                            const CensoringModel& g,
                            std::span<const double> times,
                            std::span<const double> weights);

// Dispatches to the matching risk for the spec (used for training-risk
// reporting and held-out fold evaluation).
double observed_risk(const PartitionModel& model, const SurvivalDataset& data,
                     const CensoringModel& g, const LossSpec& loss);

enum class TimeGridKind { OneFixed, FiveEven, FiveKm };

struct TimeGridStrategy {
  TimeGridKind kind = TimeGridKind::FiveEven;
  double fixed_time = 0.0;  // OneFixed only
};

// FiveEven: {tau j/6, j=1..5}.  FiveKm: earliest marginal Kaplan-Meier jump
// times reaching survival 0.85/0.70/0.55/0.40/0.25 (duplicates collapsed).
// OneFixed echoes the given time.
std::vector<double> select_time_grid(const SurvivalDataset& data,
                                     const TimeGridStrategy& strategy,
                                     double tau);

// Per-subject outcome/weight columns for one loss spec: a single column of
// (log-)times with IPCW weights for the L2 kinds, or one status column per
// grid time for the Brier kind.  This is what the partitioning search
// actually optimizes over.
struct LossTable {
  std::size_t n = 0;
  std::size_t cols = 1;
  std::vector<double> outcome;     // n * cols, subject-major
  std::vector<double> weight;      // n * cols
  std::vector<double> col_weight;  // cols
  bool clip_unit = false;          // clip fitted region values into [0,1]

  double outcome_at(std::size_t i, std::size_t r) const {
    return outcome[i * cols + r];
  }
  double weight_at(std::size_t i, std::size_t r) const {
    return weight[i * cols + r];
  }
};

LossTable build_loss_table(const SurvivalDataset& data, const CensoringModel& g,
                           const LossSpec& loss);

// Per-column weighted sufficient statistics of a subject set; enough to read
// off loss-minimizing constants and their weighted SSE.
struct GroupStats {
  std::vector<double> sw, swy, swyy;

  explicit GroupStats(std::size_t cols = 1)
      : sw(cols, 0.0), swy(cols, 0.0), swyy(cols, 0.0) {}

  void add(const LossTable& t, std::size_t i) {
    for (std::size_t r = 0; r < t.cols; ++r) {
      const double w = t.weight_at(i, r), y = t.outcome_at(i, r);
      sw[r] += w;
      swy[r] += w * y;
      swyy[r] += w * y * y;
    }
  }
  void add(const GroupStats& o) {
    for (std::size_t r = 0; r < sw.size(); ++r) {
      sw[r] += o.sw[r];
      swy[r] += o.swy[r];
      swyy[r] += o.swyy[r];
    }
  }
  void subtract(const GroupStats& o) {
    for (std::size_t r = 0; r < sw.size(); ++r) {
      sw[r] -= o.sw[r];
      swy[r] -= o.swy[r];
      swyy[r] -= o.swyy[r];
    }
  }
  // True when every column has positive total weight (fitted values defined).
  bool fittable() const {
    for (double v : sw)
      if (!(v > 0.0)) return false;
    return true;
  }
  // sum_r col_weight_r * (swyy_r - swy_r^2 / sw_r); the subject-set
  // contribution to n * risk under the optimal constants.
  double sse(const LossTable& t) const {
    double total = 0.0;
    for (std::size_t r = 0; r < sw.size(); ++r)
      if (sw[r] > 0.0)
        total += t.col_weight[r] * (swyy[r] - swy[r] * swy[r] / sw[r]);
    return total;
  }
};

}  // namespace survdsa

#endif  // SURVDSA_LOSS_HPP_
