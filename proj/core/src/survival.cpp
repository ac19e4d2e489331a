#include "survdsa/survival.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "survdsa/format.hpp"

namespace survdsa {

StepSurvivalCurve::StepSurvivalCurve(std::vector<double> jump_times,
                                     std::vector<double> values)
    : jump_times_(std::move(jump_times)), values_(std::move(values)) {
  if (jump_times_.size() != values_.size())
    throw std::invalid_argument("curve: times/values length mismatch");
  double prev_t = 0.0, prev_v = 1.0;
  for (std::size_t i = 0; i < jump_times_.size(); ++i) {
    if (!(jump_times_[i] > prev_t))
      throw std::invalid_argument("curve: jump times must be strictly increasing and positive");
    if (values_[i] < 0.0 || values_[i] > prev_v + 1e-12)
      throw std::invalid_argument("curve: values must be non-increasing in [0,1]");
    prev_t = jump_times_[i];
    prev_v = values_[i];
  }
}

double StepSurvivalCurve::at(double t) const {
  // value after the last jump time <= t
  auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

double StepSurvivalCurve::before(double t) const {
  // value after the last jump time < t
  auto it = std::lower_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

void StepSurvivalCurve::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "time,survival\n";
  for (std::size_t i = 0; i < jump_times_.size(); ++i)
    out << format_double(jump_times_[i]) << ',' << format_double(values_[i])
        << '\n';
}

StepSurvivalCurve kaplan_meier(const std::vector<double>& times,
                               const std::vector<int>& events) {
  if (times.empty()) throw std::invalid_argument("kaplan_meier: empty input");
  if (times.size() != events.size())
    throw std::invalid_argument("kaplan_meier: times/events length mismatch");
  const std::size_t n = times.size();
  for (double t : times)
    if (!(t > 0.0)) throw std::invalid_argument("kaplan_meier: times must be positive");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  std::vector<double> jump_times, values;
  double surv = 1.0;
  std::size_t at_risk = n;
  std::size_t i = 0;
  while (i < n) {
    const double t = times[order[i]];
    std::size_t deaths = 0, total = 0;
    while (i < n && times[order[i]] == t) {
      if (events[order[i]]) ++deaths;
      ++total;
      ++i;
    }
    if (deaths > 0) {
      surv *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      jump_times.push_back(t);
      values.push_back(surv);
    }
    at_risk -= total;
  }
  return StepSurvivalCurve(std::move(jump_times), std::move(values));
}

CensoringModel CensoringModel::product_limit(StepSurvivalCurve baseline) {
  CensoringModel m;
  m.kind_ = CensoringKind::ProductLimit;
  m.baseline_ = std::move(baseline);
  return m;
}

CensoringModel CensoringModel::proportional_hazards(
    StepSurvivalCurve baseline, std::vector<int> covariate_indices,
    std::vector<double> coefficients, std::vector<double> centering) {
  if (covariate_indices.size() != coefficients.size() ||
      coefficients.size() != centering.size())
    throw std::invalid_argument("censoring model: coefficient layout mismatch");
  CensoringModel m;
  m.kind_ = CensoringKind::ProportionalHazards;
  m.baseline_ = std::move(baseline);
  m.covariate_indices_ = std::move(covariate_indices);
  m.coefficients_ = std::move(coefficients);
  m.centering_ = std::move(centering);
  return m;
}

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

double risk_score(const std::vector<int>& idx, const std::vector<double>& beta,
                  const std::vector<double>& center, std::span<const double> w) {
  double eta = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k)
    eta += beta[k] * (w[static_cast<std::size_t>(idx[k])] - center[k]);
  return std::exp(eta);
}

}  // namespace

double CensoringModel::survival(double t, std::span<const double> w) const {
  double base = baseline_.at(t);
  if (kind_ == CensoringKind::ProductLimit) return base;
  return clamp01(std::pow(base, risk_score(covariate_indices_, coefficients_,
                                           centering_, w)));
}

double CensoringModel::survival_before(double t, std::span<const double> w) const {
  double base = baseline_.before(t);
  if (kind_ == CensoringKind::ProductLimit) return base;
  return clamp01(std::pow(base, risk_score(covariate_indices_, coefficients_,
                                           centering_, w)));
}

namespace {

struct CoxData {
  // sorted ascending by time
  std::vector<double> time;
  std::vector<int> event;              // censoring indicator here
  std::vector<std::vector<double>> x;  // centered covariates, per subject
};

double cox_loglik(const CoxData& d, const Eigen::VectorXd& beta,
                  Eigen::VectorXd* grad, Eigen::MatrixXd* info) {
  const int n = static_cast<int>(d.time.size());
  const int p = static_cast<int>(beta.size());
  double loglik = 0.0;
  if (grad) grad->setZero();
  if (info) info->setZero();

  // Walk times in descending order, accumulating risk-set sums.
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  int i = n - 1;
  while (i >= 0) {
    const double t = d.time[static_cast<std::size_t>(i)];
    int j = i;
    while (j >= 0 && d.time[static_cast<std::size_t>(j)] == t) --j;
    // subjects (j, i] enter the risk set at time t
    for (int k = i; k > j; --k) {
      Eigen::Map<const Eigen::VectorXd> xk(d.x[static_cast<std::size_t>(k)].data(), p);
      const double r = std::exp(beta.dot(xk));
      s0 += r;
      s1 += r * xk;
      s2 += r * xk * xk.transpose();
    }
    // Breslow: all events at t share the full risk-set denominator.
    int deaths = 0;
    for (int k = i; k > j; --k) {
      if (!d.event[static_cast<std::size_t>(k)]) continue;
      ++deaths;
      Eigen::Map<const Eigen::VectorXd> xk(d.x[static_cast<std::size_t>(k)].data(), p);
      loglik += beta.dot(xk);
      if (grad) *grad += xk;
    }
    if (deaths > 0) {
      loglik -= deaths * std::log(s0);
      Eigen::VectorXd mean = s1 / s0;
      if (grad) *grad -= deaths * mean;
      if (info) *info += deaths * (s2 / s0 - mean * mean.transpose());
    }
    i = j;
  }
  return loglik;
}

}  // namespace

CensoringModel fit_censoring_model(const SurvivalDataset& data,
                                   CensoringKind kind,
                                   const std::vector<std::string>& covariate_subset) {
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("fit_censoring_model: empty dataset");

  std::vector<double> times(n);
  std::vector<int> censored(n);
  std::size_t n_censor_events = 0;
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = data.time(i);
    censored[i] = data.event(i) ? 0 : 1;
    n_censor_events += static_cast<std::size_t>(censored[i]);
  }

  if (kind == CensoringKind::ProductLimit)
    return CensoringModel::product_limit(kaplan_meier(times, censored));

  if (covariate_subset.empty())
    throw std::invalid_argument(
        "proportional-hazards censoring model needs a covariate subset");
  if (n_censor_events == 0)
    throw std::invalid_argument(
        "no censoring events; the proportional-hazards censoring model is "
        "degenerate -- use the product-limit kind");

  std::vector<int> idx;
  for (const auto& name : covariate_subset) {
    int j = data.covariate_index(name);
    if (j < 0)
      throw std::invalid_argument("unknown covariate in censoring model: " + name);
    if (data.schema()[static_cast<std::size_t>(j)].kind != CovariateKind::Numeric)
      throw std::invalid_argument(
          "proportional-hazards censoring covariates must be numeric: " + name);
    idx.push_back(j);
  }
  const int p = static_cast<int>(idx.size());

  // Center covariates at sample means for numerical stability.
  std::vector<double> center(static_cast<std::size_t>(p), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < p; ++k)
      center[static_cast<std::size_t>(k)] +=
          data.covariates(i)[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
  for (int k = 0; k < p; ++k) center[static_cast<std::size_t>(k)] /= static_cast<double>(n);

  CoxData d;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  d.time.resize(n);
  d.event.resize(n);
  d.x.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t i = order[r];
    d.time[r] = times[i];
    d.event[r] = censored[i];
    d.x[r].resize(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k)
      d.x[r][static_cast<std::size_t>(k)] =
          data.covariates(i)[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] -
          center[static_cast<std::size_t>(k)];
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad(p);
  Eigen::MatrixXd info(p, p);
  double loglik = cox_loglik(d, beta, &grad, &info);

  const int max_iter = 50;
  const double tol = 1e-8;
  bool converged = grad.lpNorm<Eigen::Infinity>() < tol;
  for (int iter = 0; iter < max_iter && !converged; ++iter) {
    Eigen::VectorXd step = info.ldlt().solve(grad);
    if (!step.allFinite()) throw std::runtime_error("cox: singular information matrix");
    double scale = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double cand_loglik = cox_loglik(d, candidate, nullptr, nullptr);
    int halvings = 0;
    while (cand_loglik < loglik && halvings < 30) {
      scale *= 0.5;
      candidate = beta + scale * step;
      cand_loglik = cox_loglik(d, candidate, nullptr, nullptr);
      ++halvings;
    }
    beta = candidate;
    loglik = cox_loglik(d, beta, &grad, &info);
    converged = grad.lpNorm<Eigen::Infinity>() < tol;
  }
  if (!converged)
    throw std::runtime_error("cox: Newton iteration did not converge in 50 steps");

  // Breslow baseline cumulative hazard at the centered covariates.
  std::vector<double> jump_times, values;
  double cumhaz = 0.0;
  {
    // one pass ascending; risk-set sum of exp(eta) for subjects with time >= t
    std::vector<double> score(n);
    double s0 = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      Eigen::Map<const Eigen::VectorXd> xr(d.x[r].data(), p);
      score[r] = std::exp(beta.dot(xr));
      s0 += score[r];
    }
    std::size_t r = 0;
    while (r < n) {
      const double t = d.time[r];
      std::size_t deaths = 0, total = 0;
      double leaving = 0.0;
      std::size_t q = r;
      while (q < n && d.time[q] == t) {
        if (d.event[q]) ++deaths;
        leaving += score[q];
        ++total;
        ++q;
      }
      if (deaths > 0) {
        cumhaz += static_cast<double>(deaths) / s0;
        jump_times.push_back(t);
        values.push_back(std::exp(-cumhaz));
      }
      s0 -= leaving;
      r = q;
    }
  }

  std::vector<double> coef(beta.data(), beta.data() + p);
  return CensoringModel::proportional_hazards(
      StepSurvivalCurve(std::move(jump_times), std::move(values)), idx,
      std::move(coef), std::move(center));
}

TruncationResult truncate(const SurvivalDataset& data, double exceed_fraction) {
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("truncate: empty dataset");
  if (!(exceed_fraction > 0.0 && exceed_fraction < 1.0))
    throw std::invalid_argument("truncate: exceed_fraction must lie in (0,1)");
  const auto clamped_count =
      static_cast<std::size_t>(std::floor(exceed_fraction * static_cast<double>(n) + 1e-9));
  if (clamped_count < 1)
    throw std::invalid_argument(
        "truncate: exceed_fraction * n must be at least 1");

  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = data.time(i);
  std::sort(sorted.begin(), sorted.end());
  const double tau = sorted[n - clamped_count - 1];  // the (n - m)-th order statistic

  std::vector<Subject> subjects = data.subjects();
  for (auto& s : subjects) {
    if (s.followup_time > tau) {
      s.followup_time = tau;
      s.event = true;
    }
  }
  return TruncationResult{tau, SurvivalDataset(data.schema(), std::move(subjects))};
}

std::vector<double> ipcw_weights(const SurvivalDataset& data,
                                 const CensoringModel& g) {
  const std::size_t n = data.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!data.event(i)) continue;
    const double gi = g.survival_before(data.time(i), data.covariates(i));
    if (gi <= kCensoringSurvivalFloor)
      throw std::runtime_error(
          "ipcw_weights: censoring survival at an event time is below the "
          "floor (" + format_double(gi) + "); truncate follow-up times first");
    w[i] = 1.0 / gi;
  }
  return w;
}

}  // namespace survdsa
