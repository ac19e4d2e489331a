#include "survdsa/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "survdsa/format.hpp"
#include "survdsa/partition.hpp"

namespace survdsa {

LossSpec LossSpec::full_l2(TimeScale scale) {
  LossSpec s;
  s.kind = LossKind::FullL2;
  s.scale = scale;
  return s;
}

LossSpec LossSpec::ipcw_l2(TimeScale scale) {
  LossSpec s;
  s.kind = LossKind::IpcwL2;
  s.scale = scale;
  return s;
}

LossSpec LossSpec::brier(std::vector<double> times, std::vector<double> weights) {
  LossSpec s;
  s.kind = LossKind::Brier;
  s.brier_times = std::move(times);
  s.brier_weights = std::move(weights);
  s.validate();
  return s;
}

LossSpec LossSpec::brier_ratio_weighted(std::vector<double> times) {
  std::vector<double> weights;
  if (times.empty()) throw std::invalid_argument("brier grid is empty");
  const double last = times.back();
  for (double t : times) weights.push_back(std::fabs(t / last));
  return brier(std::move(times), std::move(weights));
}

void LossSpec::validate() const {
  if (kind != LossKind::Brier) return;
  if (brier_times.empty())
    throw std::invalid_argument("brier loss needs at least one time");
  if (brier_times.size() != brier_weights.size())
    throw std::invalid_argument("brier times/weights length mismatch");
  for (std::size_t r = 0; r < brier_times.size(); ++r) {
    if (!(brier_times[r] > 0.0))
      throw std::invalid_argument("brier times must be positive");
    if (r > 0 && !(brier_times[r] > brier_times[r - 1]))
      throw std::invalid_argument("brier times must be strictly increasing");
    if (brier_weights[r] < 0.0)
      throw std::invalid_argument("brier weights must be nonnegative");
  }
}

double empirical_risk_l2(std::span<const double> predictions,
                         std::span<const double> outcomes,
                         std::span<const double> weights) {
  if (predictions.size() != outcomes.size() ||
      outcomes.size() != weights.size())
    throw std::invalid_argument("empirical_risk_l2: length mismatch");
  if (predictions.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = outcomes[i] - predictions[i];
    sum += weights[i] * d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

namespace {

double outcome_on_scale(double t, TimeScale scale) {
  return scale == TimeScale::LogTime ? std::log(t) : t;
}

double checked_g(double g) {
  if (g <= kCensoringSurvivalFloor)
    throw std::runtime_error(
        "censoring survival below floor (" + format_double(g) +
        "); truncate follow-up times first");
  return g;
}

// Fitted value for time t: grid models use the matching grid component,
// scalar models their single value.
std::size_t brier_component(const PartitionModel& model, double t) {
  const auto& times = model.prediction_times();
  if (times.empty()) {
    for (const auto& region : model.regions())
      if (region.predictions.size() != 1)
        throw std::invalid_argument(
            "brier_risk: model has multiple prediction columns but no "
            "prediction time grid");
    return 0;
  }
  for (std::size_t r = 0; r < times.size(); ++r)
    if (std::fabs(times[r] - t) <= 1e-12 * std::max(1.0, std::fabs(t)))
      return r;
  throw std::invalid_argument("brier_risk: time " + format_double(t) +
                              " is not on the model's prediction grid");
}

}  // namespace

double ipcw_l2_risk(const PartitionModel& model, const SurvivalDataset& data,
                    const CensoringModel& g, TimeScale scale) {
  const std::vector<double> w = ipcw_weights(data, g);
  const std::size_t n = data.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    const double z = outcome_on_scale(data.time(i), scale);
    const double d = z - model.predict(data.covariates(i));
    sum += w[i] * d * d;
  }
  return sum / static_cast<double>(n);
}

double brier_risk(const PartitionModel& model, const SurvivalDataset& data,
                  const CensoringModel& g, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("brier_risk: t must be positive");
  const std::size_t component = brier_component(model, t);
  const std::size_t n = data.size();
  const BrierTransform transform{t};

  // Transformed-IPCW route.
  double ipcw_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto obs = transform.apply(data.time(i), data.event(i));
    if (!obs.event) continue;
    const double gi = checked_g(g.survival_before(obs.time, data.covariates(i)));
    const double psi = model.predict_vector(data.covariates(i))[component];
    const double d = obs.status - psi;
    ipcw_sum += (d * d) / gi;
  }
  const double ipcw_form = ipcw_sum / static_cast<double>(n);

  // Three-group route, recomputed as a consistency check.
  double group_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = data.time(i);
    const double psi = model.predict_vector(data.covariates(i))[component];
    if (ti >= t) {
      // still at risk at t
      const double d = 1.0 - psi;
      group_sum += (d * d) / checked_g(g.survival_before(t, data.covariates(i)));
    } else if (data.event(i)) {
      // event before t
      const double d = 0.0 - psi;
      group_sum += (d * d) / checked_g(g.survival_before(ti, data.covariates(i)));
    }
    // censored before t: drops out
  }
  const double group_form = group_sum / static_cast<double>(n);

  if (std::fabs(ipcw_form - group_form) >
      1e-10 * std::max({1.0, std::fabs(ipcw_form), std::fabs(group_form)}))
    throw std::logic_error("brier_risk: IPCW and three-group forms disagree");
  return ipcw_form;
}

double composite_brier_risk(const PartitionModel& model,
                            const SurvivalDataset& data,
                            const CensoringModel& g,
                            std::span<const double> times,
                            std::span<const double> weights) {
  if (times.size() != weights.size())
    throw std::invalid_argument("composite_brier_risk: times/weights mismatch");
  double total = 0.0;
  for (std::size_t r = 0; r < times.size(); ++r) {
    if (weights[r] == 0.0) continue;
    total += weights[r] * brier_risk(model, data, g, times[r]);
  }
  return total;
}

double observed_risk(const PartitionModel& model, const SurvivalDataset& data,
                     const CensoringModel& g, const LossSpec& loss) {
  switch (loss.kind) {
    case LossKind::FullL2: {
      const std::size_t n = data.size();
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double z = outcome_on_scale(data.time(i), loss.scale);
        const double d = z - model.predict(data.covariates(i));
        sum += d * d;
      }
      return n == 0 ? 0.0 : sum / static_cast<double>(n);
    }
    case LossKind::IpcwL2:
      return ipcw_l2_risk(model, data, g, loss.scale);
    case LossKind::Brier:
      return composite_brier_risk(model, data, g, loss.brier_times,
                                  loss.brier_weights);
  }
  throw std::logic_error("observed_risk: unknown loss kind");
}

std::vector<double> select_time_grid(const SurvivalDataset& data,
                                     const TimeGridStrategy& strategy,
                                     double tau) {
  switch (strategy.kind) {
    case TimeGridKind::OneFixed:
      if (!(strategy.fixed_time > 0.0))
        throw std::invalid_argument("select_time_grid: fixed time must be positive");
      return {strategy.fixed_time};
    case TimeGridKind::FiveEven: {
      if (!(tau > 0.0))
        throw std::invalid_argument("select_time_grid: tau must be positive");
      std::vector<double> grid;
      for (int j = 1; j <= 5; ++j)
        grid.push_back(tau * static_cast<double>(j) / 6.0);
      return grid;
    }
    case TimeGridKind::FiveKm: {
      std::vector<double> times(data.size());
      std::vector<int> events(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        times[i] = data.time(i);
        events[i] = data.event(i) ? 1 : 0;
      }
      const StepSurvivalCurve km = kaplan_meier(times, events);
      static constexpr double kTargets[] = {0.85, 0.70, 0.55, 0.40, 0.25};
      if (km.final_value() > kTargets[4]) {
        throw std::runtime_error(
            "select_time_grid: Kaplan-Meier curve only reaches " +
            format_double(km.final_value()) +
            "; the 0.25 survival level is unreachable");
      }
      std::vector<double> grid;
      for (double target : kTargets) {
        for (std::size_t k = 0; k < km.jump_times().size(); ++k) {
          if (km.values()[k] <= target) {
            const double t = km.jump_times()[k];
            if (grid.empty() || t > grid.back()) grid.push_back(t);
            break;
          }
        }
      }
      return grid;
    }
  }
  throw std::logic_error("select_time_grid: unknown strategy");
}

LossTable build_loss_table(const SurvivalDataset& data, const CensoringModel& g,
                           const LossSpec& loss) {
  loss.validate();
  LossTable t;
  t.n = data.size();
  t.cols = loss.columns();
  t.outcome.assign(t.n * t.cols, 0.0);
  t.weight.assign(t.n * t.cols, 0.0);

  switch (loss.kind) {
    case LossKind::FullL2: {
      t.col_weight = {1.0};
      for (std::size_t i = 0; i < t.n; ++i) {
        t.outcome[i] = outcome_on_scale(data.time(i), loss.scale);
        t.weight[i] = 1.0;
      }
      break;
    }
    case LossKind::IpcwL2: {
      t.col_weight = {1.0};
      const std::vector<double> w = ipcw_weights(data, g);
      for (std::size_t i = 0; i < t.n; ++i) {
        t.outcome[i] = outcome_on_scale(data.time(i), loss.scale);
        t.weight[i] = w[i];
      }
      break;
    }
    case LossKind::Brier: {
      t.col_weight = loss.brier_weights;
      t.clip_unit = true;
      for (std::size_t i = 0; i < t.n; ++i) {
        for (std::size_t r = 0; r < t.cols; ++r) {
          const BrierTransform transform{loss.brier_times[r]};
          const auto obs = transform.apply(data.time(i), data.event(i));
          t.outcome[i * t.cols + r] = obs.status;
          t.weight[i * t.cols + r] =
              obs.event
                  ? 1.0 / checked_g(g.survival_before(obs.time, data.covariates(i)))
                  : 0.0;
        }
      }
      break;
    }
  }
  return t;
}

}  // namespace survdsa
