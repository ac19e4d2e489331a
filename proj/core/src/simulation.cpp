#include "survdsa/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

#include "survdsa/format.hpp"
#include "survdsa/model_selection.hpp"
#include "survdsa/rng.hpp"

namespace survdsa {

namespace {

double bisect(double lo, double hi, double target,
              const std::function<double(double)>& f_decreasing) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f_decreasing(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// P(C < T) for T ~ Exp(mean sigma), C ~ U(0, b).
double censored_fraction(double sigma, double b) {
  return sigma * (1.0 - std::exp(-b / sigma)) / b;
}

}  // namespace

std::string Scenario::name() const {
  std::string out = signal == Signal::High ? "high" : "low";
  out += censoring == CensoringType::CovariateDependent ? "-dep-" : "-indep-";
  if (nominal_level == 0.0)
    out += "0";
  else if (nominal_level == 0.30)
    out += "30";
  else if (nominal_level == 0.50)
    out += "50";
  else
    out += format_double(nominal_level);
  return out;
}

Scenario Scenario::named(const std::string& name) {
  Scenario s;
  std::string rest = name;
  auto take = [&](const std::string& prefix) {
    if (rest.rfind(prefix, 0) == 0) {
      rest = rest.substr(prefix.size());
      return true;
    }
    return false;
  };
  if (take("high-"))
    s.signal = Signal::High;
  else if (take("low-"))
    s.signal = Signal::Low;
  else
    throw std::invalid_argument("unknown scenario: " + name);
  if (take("dep-"))
    s.censoring = CensoringType::CovariateDependent;
  else if (take("indep-"))
    s.censoring = CensoringType::CovariateIndependent;
  else
    throw std::invalid_argument("unknown scenario: " + name);
  if (rest == "0")
    s.nominal_level = 0.0;
  else if (rest == "30")
    s.nominal_level = 0.30;
  else if (rest == "50")
    s.nominal_level = 0.50;
  else
    throw std::invalid_argument("unknown censoring level in scenario: " + name);
  return s;
}

double censoring_upper_bound(double exp_mean, double nominal) {
  if (!(nominal > 0.0 && nominal < 1.0))
    throw std::invalid_argument("censoring_upper_bound: nominal must be in (0,1)");
  double hi = exp_mean;
  while (censored_fraction(exp_mean, hi) > nominal) hi *= 2.0;
  return bisect(1e-12, hi, nominal,
                [&](double b) { return censored_fraction(exp_mean, b); });
}

double censoring_upper_bound_pooled(const Scenario& scenario) {
  const double p = Scenario::kHighGroupProbability;
  auto pooled = [&](double b) {
    return p * censored_fraction(scenario.sigma_high(), b) +
           (1.0 - p) * censored_fraction(Scenario::kSigmaLow, b);
  };
  double hi = scenario.sigma_high();
  while (pooled(hi) > scenario.nominal_level) hi *= 2.0;
  return bisect(1e-12, hi, scenario.nominal_level, pooled);
}

double marginal_survival(const Scenario& scenario, double t) {
  const double p = Scenario::kHighGroupProbability;
  return p * std::exp(-t / scenario.sigma_high()) +
         (1.0 - p) * std::exp(-t / Scenario::kSigmaLow);
}

double marginal_survival_quantile(const Scenario& scenario, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("marginal_survival_quantile: level in (0,1)");
  double hi = scenario.sigma_high();
  while (marginal_survival(scenario, hi) > level) hi *= 2.0;
  return bisect(0.0, hi, level,
                [&](double t) { return marginal_survival(scenario, t); });
}

std::pair<SurvivalDataset, SurvivalDataset> generate(const Scenario& scenario,
                                                     std::uint64_t seed) {
  std::vector<Covariate> schema;
  for (int j = 1; j <= 5; ++j)
    schema.push_back(Covariate{"w" + std::to_string(j), CovariateKind::Numeric, {}});

  const bool censored = scenario.nominal_level > 0.0;
  double bound_high = 0.0, bound_low = 0.0;
  if (censored) {
    if (scenario.censoring == CensoringType::CovariateDependent) {
      bound_high = censoring_upper_bound(scenario.sigma_high(), scenario.nominal_level);
      bound_low = censoring_upper_bound(Scenario::kSigmaLow, scenario.nominal_level);
    } else {
      bound_high = bound_low = censoring_upper_bound_pooled(scenario);
    }
  }

  auto draw = [&](int n, Rng& cov_rng, Rng& surv_rng, Rng* cens_rng) {
    std::vector<Subject> subjects;
    subjects.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      Subject s;
      s.covariates.resize(5);
      for (int j = 0; j < 5; ++j)
        s.covariates[static_cast<std::size_t>(j)] =
            static_cast<double>(cov_rng.uniform_int(1, 100));
      const double sigma = scenario.sigma_for(s.covariates[0], s.covariates[1]);
      const double t = surv_rng.exponential(sigma);
      if (cens_rng) {
        const double b = scenario.high_group(s.covariates[0], s.covariates[1])
                             ? bound_high
                             : bound_low;
        const double c = b * cens_rng->uniform01_open();
        s.followup_time = std::min(t, c);
        s.event = t <= c;
      } else {
        s.followup_time = t;
        s.event = true;
      }
      subjects.push_back(std::move(s));
    }
    return SurvivalDataset(schema, std::move(subjects));
  };

  Rng cov_train(mix_seed(seed, 1));
  Rng surv_train(mix_seed(seed, 2));
  Rng cens_train(mix_seed(seed, 3));
  Rng cov_test(mix_seed(seed, 4));
  Rng surv_test(mix_seed(seed, 5));
  SurvivalDataset train = draw(scenario.n_train, cov_train, surv_train,
                               censored ? &cens_train : nullptr);
  SurvivalDataset test = draw(scenario.n_test, cov_test, surv_test, nullptr);
  return {std::move(train), std::move(test)};
}

PartitionModel true_partition(Signal signal, bool tree_form) {
  std::vector<Covariate> schema;
  for (int j = 1; j <= 5; ++j)
    schema.push_back(Covariate{"w" + std::to_string(j), CovariateKind::Numeric, {}});
  const double hi = signal == Signal::High ? 5.0 : 1.0;
  const double lo = Scenario::kSigmaLow;
  const double inf = std::numeric_limits<double>::infinity();

  Clause w1_high;  // w1 > 50
  w1_high.set(0, Constraint{NumericRange{50.5, inf}, {}});
  Clause w1_low_w2_high;  // w1 <= 50 and w2 > 75
  w1_low_w2_high.set(0, Constraint{NumericRange{-inf, 50.5}, {}});
  w1_low_w2_high.set(1, Constraint{NumericRange{75.5, inf}, {}});
  Clause w1_low_w2_low;  // w1 <= 50 and w2 <= 75
  w1_low_w2_low.set(0, Constraint{NumericRange{-inf, 50.5}, {}});
  w1_low_w2_low.set(1, Constraint{NumericRange{-inf, 75.5}, {}});

  std::vector<Region> regions;
  if (tree_form) {
    regions.push_back(Region{{w1_high}, {hi}});
    regions.push_back(Region{{w1_low_w2_high}, {hi}});
    regions.push_back(Region{{w1_low_w2_low}, {lo}});
  } else {
    regions.push_back(Region{{w1_high, w1_low_w2_high}, {hi}});
    regions.push_back(Region{{w1_low_w2_low}, {lo}});
  }
  return PartitionModel(std::move(schema), std::move(regions));
}

std::string method_name(Method m) {
  switch (m) {
    case Method::PartDsaIpcw: return "partdsa-ipcw";
    case Method::PartDsaBrier1Fixed: return "partdsa-brier-1fixed";
    case Method::PartDsaBrier5Even: return "partdsa-brier-5even";
    case Method::PartDsaBrier5Km: return "partdsa-brier-5km";
    case Method::CartIpcw: return "cart-ipcw";
  }
  return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
  for (Method m : all_methods())
    if (method_name(m) == name) return m;
  return std::nullopt;
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {
      Method::PartDsaIpcw, Method::PartDsaBrier1Fixed, Method::PartDsaBrier5Even,
      Method::PartDsaBrier5Km, Method::CartIpcw};
  return methods;
}

namespace {

bool is_dsa(Method m) { return m != Method::CartIpcw; }

LossSpec loss_for(Method m, const Scenario& scenario,
                  const SurvivalDataset& truncated, double tau) {
  switch (m) {
    case Method::PartDsaIpcw:
    case Method::CartIpcw:
      return LossSpec::ipcw_l2(TimeScale::LogTime);
    case Method::PartDsaBrier1Fixed:
      return LossSpec::brier_ratio_weighted({marginal_median_survival(scenario)});
    case Method::PartDsaBrier5Even:
      return LossSpec::brier_ratio_weighted(
          select_time_grid(truncated, {TimeGridKind::FiveEven, 0.0}, tau));
    case Method::PartDsaBrier5Km:
      return LossSpec::brier_ratio_weighted(
          select_time_grid(truncated, {TimeGridKind::FiveKm, 0.0}, tau));
  }
  throw std::logic_error("loss_for: unknown method");
}

CensoringModel fit_scenario_censoring(const Scenario& scenario,
                                      const SurvivalDataset& data) {
  // An all-event sample carries no censoring information; the product-limit
  // fit is identically 1 and the Cox fit would be degenerate.
  const bool any_censored = data.event_count() < data.size();
  if (any_censored && scenario.censoring == CensoringType::CovariateDependent)
    return fit_censoring_model(data, CensoringKind::ProportionalHazards,
                               {"w1", "w2"});
  return fit_censoring_model(data, CensoringKind::ProductLimit);
}

std::vector<double> stratification_grid(const Scenario& scenario) {
  const double horizon = marginal_survival_quantile(scenario, 0.05);
  std::vector<double> grid;
  for (int k = 0; k <= 100; ++k)
    grid.push_back(horizon * static_cast<double>(k) / 100.0);
  return grid;
}

struct ReplicateOutputs {
  std::vector<ReplicateRow> rows;  // one per method, in config order
};

ReplicateOutputs run_replicate(const StudyConfig& config, int replicate,
                               const std::vector<double>& grid) {
  const Scenario& scenario = config.scenario;
  ReplicateOutputs out;
  out.rows.resize(config.methods.size());
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    out.rows[m].replicate = replicate;
    out.rows[m].method = config.methods[m];
  }

  const std::uint64_t replicate_seed =
      mix_seed(config.seed, 0x5eedULL + static_cast<std::uint64_t>(replicate));
  SurvivalDataset train, test;
  TruncationResult trunc;
  CensoringModel g_full;
  std::vector<int> folds;
  try {
    auto pair = generate(scenario, replicate_seed);
    train = std::move(pair.first);
    test = std::move(pair.second);
    trunc = truncate(train, config.truncate_fraction);
    g_full = fit_scenario_censoring(scenario, trunc.dataset);
    folds = split_folds(trunc.dataset, config.folds,
                        mix_seed(replicate_seed, 0xf01d));
  } catch (const std::exception& e) {
    for (auto& row : out.rows) {
      row.failed = true;
      row.failure = e.what();
    }
    return out;
  }

  const PartitionModel truth_union = true_partition(scenario.signal, false);
  const PartitionModel truth_tree = true_partition(scenario.signal, true);

  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    const Method method = config.methods[m];
    ReplicateRow& row = out.rows[m];
    try {
      const LossSpec loss = loss_for(method, scenario, trunc.dataset, trunc.tau);
      CandidateFitter fitter;
      if (is_dsa(method)) {
        DsaConfig dsa = config.dsa;
        dsa.loss = loss;
        fitter = [dsa](const SurvivalDataset& d, const CensoringModel& g) {
          return fit_dsa(d, g, dsa);
        };
      } else {
        CartConfig cart = config.cart;
        cart.loss = loss;
        fitter = [cart](const SurvivalDataset& d, const CensoringModel& g) {
          return cart_prune_path(cart_grow(d, g, cart), d, g, cart);
        };
      }
      CensoringRefitter refit_g = [&scenario](const SurvivalDataset& d) {
        return fit_scenario_censoring(scenario, d);
      };

      const CvCurve curve =
          cross_validate(trunc.dataset, folds, fitter, refit_g, loss);
      const FinalFitResult fit =
          final_fit(trunc.dataset, curve.chosen_size, fitter, loss, g_full);
      row.train_risk = fit.train_risk;

      MetricReport& report = row.metrics;
      report.size = static_cast<int>(fit.model.size());
      report.variables_used = fit.model.variables_used();

      const std::vector<double> node_time =
          region_ipcw_mean_time(fit.model, trunc.dataset, g_full);
      std::vector<double> predicted(test.size()), observed(test.size());
      for (std::size_t i = 0; i < test.size(); ++i) {
        predicted[i] =
            node_time[static_cast<std::size_t>(fit.model.assign(test.covariates(i)))];
        observed[i] = test.time(i);
      }
      try {
        const Concordance c = concordance(observed, predicted);
        report.c_p = c.c_p;
        report.c_bar_p = c.c_bar_p;
      } catch (const std::domain_error&) {
        // root models leave every prediction tied; the index is undefined
      }

      const PartitionModel& truth = is_dsa(method) ? truth_union : truth_tree;
      report.l_p = prediction_error(truth, fit.model, test);
      report.d_p = pairwise_similarity(truth, fit.model, test);

      if (report.size == 2 || report.size == 3) {
        try {
          const RankedCurves curves = region_survival_curves(fit.model, test);
          row.strat_values.resize(curves.curves.size());
          for (std::size_t r = 0; r < curves.curves.size(); ++r) {
            row.strat_values[r].resize(grid.size());
            for (std::size_t p = 0; p < grid.size(); ++p)
              row.strat_values[r][p] = curves.curves[r].at(grid[p]);
          }
        } catch (const std::exception&) {
          // a region without test subjects has no curve; skip silently
        }
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.failure = e.what();
    }
  }
  return out;
}

MethodAggregate aggregate_method(Method method,
                                 const std::vector<ReplicateRow>& rows) {
  MethodAggregate agg;
  agg.method = method;
  double size_counts[4] = {0, 0, 0, 0};
  double sum_cp = 0, sum_cbar = 0;
  for (const ReplicateRow& row : rows) {
    if (row.method != method) continue;
    if (row.failed) {
      agg.failures++;
      continue;
    }
    agg.completed++;
    const MetricReport& r = row.metrics;
    agg.mean_size += r.size;
    agg.mean_predictors += static_cast<double>(r.variables_used.size());
    int w12 = 0, w345 = 0;
    for (const std::string& v : r.variables_used)
      (v == "w1" || v == "w2") ? ++w12 : ++w345;
    agg.mean_w1_w2 += w12;
    agg.mean_w3_w5 += w345;
    agg.mean_l_p += r.l_p;
    agg.mean_d_p += r.d_p;
    if (!std::isnan(r.c_p)) {
      agg.c_index_defined++;
      sum_cp += r.c_p;
      sum_cbar += r.c_bar_p;
    }
    size_counts[std::min(r.size, 4) - 1] += 1.0;
  }
  if (agg.completed > 0) {
    const double n = agg.completed;
    agg.mean_size /= n;
    agg.mean_predictors /= n;
    agg.mean_w1_w2 /= n;
    agg.mean_w3_w5 /= n;
    agg.mean_l_p /= n;
    agg.mean_d_p /= n;
    for (double& s : agg.size_share) s = 0.0;
    for (int k = 0; k < 4; ++k) agg.size_share[k] = size_counts[k] / n;
  }
  if (agg.c_index_defined > 0) {
    agg.mean_c_p = sum_cp / agg.c_index_defined;
    agg.mean_c_bar_p = sum_cbar / agg.c_index_defined;
  } else {
    agg.mean_c_p = agg.mean_c_bar_p = std::numeric_limits<double>::quiet_NaN();
  }
  return agg;
}

}  // namespace

ReplicationReport run_study(const StudyConfig& config) {
  if (config.methods.empty())
    throw std::invalid_argument("run_study: no methods selected");
  const int replicates = config.replicates_override > 0
                             ? config.replicates_override
                             : config.scenario.replicates;
  if (replicates < 1)
    throw std::invalid_argument("run_study: replicate count must be positive");

  ReplicationReport report;
  report.scenario = config.scenario;
  report.strat_grid = stratification_grid(config.scenario);

  std::vector<ReplicateOutputs> outputs(static_cast<std::size_t>(replicates));
  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    for (int r = 0; r < replicates; ++r)
      outputs[static_cast<std::size_t>(r)] =
          run_replicate(config, r, report.strat_grid);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      while (true) {
        const int r = next.fetch_add(1);
        if (r >= replicates) break;
        outputs[static_cast<std::size_t>(r)] =
            run_replicate(config, r, report.strat_grid);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto& out : outputs)
    for (auto& row : out.rows) report.rows.push_back(std::move(row));
  for (Method m : config.methods)
    report.aggregates.push_back(aggregate_method(m, report.rows));
  return report;
}

void write_report(const ReplicationReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  {
    std::ofstream out(dir / "aggregate.csv");
    out << "method,completed,failures,mean_fitted_size,mean_n_predictors,"
           "mean_w1_w2,mean_w3_w5,c_p,c_bar_p,l_p,d_p,c_index_defined\n";
    for (const MethodAggregate& a : report.aggregates) {
      out << method_name(a.method) << ',' << a.completed << ',' << a.failures
          << ',' << format_double(a.mean_size) << ','
          << format_double(a.mean_predictors) << ','
          << format_double(a.mean_w1_w2) << ',' << format_double(a.mean_w3_w5)
          << ',' << format_double(a.mean_c_p) << ','
          << format_double(a.mean_c_bar_p) << ',' << format_double(a.mean_l_p)
          << ',' << format_double(a.mean_d_p) << ',' << a.c_index_defined
          << '\n';
    }
  }
  {
    std::ofstream out(dir / "size_distribution.csv");
    out << "method,root,size2,size3,size4plus\n";
    for (const MethodAggregate& a : report.aggregates) {
      out << method_name(a.method);
      for (double share : a.size_share) out << ',' << format_double(share);
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "replicates.csv");
    out << "replicate,method,failed,size,train_risk,c_p,c_bar_p,l_p,d_p,"
           "variables\n";
    for (const ReplicateRow& row : report.rows) {
      out << row.replicate << ',' << method_name(row.method) << ','
          << (row.failed ? 1 : 0) << ',' << row.metrics.size << ','
          << format_double(row.train_risk) << ','
          << format_double(row.metrics.c_p) << ','
          << format_double(row.metrics.c_bar_p) << ','
          << format_double(row.metrics.l_p) << ','
          << format_double(row.metrics.d_p) << ',';
      for (std::size_t v = 0; v < row.metrics.variables_used.size(); ++v)
        out << (v ? ";" : "") << row.metrics.variables_used[v];
      out << '\n';
    }
  }
  {
    bool any = false;
    for (const ReplicateRow& row : report.rows) any = any || row.failed;
    if (any) {
      std::ofstream out(dir / "failures.csv");
      out << "replicate,method,message\n";
      for (const ReplicateRow& row : report.rows)
        if (row.failed)
          out << row.replicate << ',' << method_name(row.method) << ",\""
              << row.failure << "\"\n";
    }
  }

  // stratification bands per method and fitted size
  for (const MethodAggregate& a : report.aggregates) {
    for (int size = 2; size <= 3; ++size) {
      std::vector<const ReplicateRow*> rows;
      for (const ReplicateRow& row : report.rows)
        if (row.method == a.method && !row.failed &&
            static_cast<int>(row.strat_values.size()) == size)
          rows.push_back(&row);
      if (rows.empty()) continue;
      std::ofstream out(dir / ("stratification_" + method_name(a.method) +
                               "_size" + std::to_string(size) + ".csv"));
      out << "rank,time,mean,lower,upper\n";
      for (int rank = 0; rank < size; ++rank) {
        std::vector<std::vector<double>> values;
        values.reserve(rows.size());
        for (const ReplicateRow* row : rows)
          values.push_back(row->strat_values[static_cast<std::size_t>(rank)]);
        const PointwiseBands bands = pointwise_bands(values);
        for (std::size_t p = 0; p < report.strat_grid.size(); ++p)
          out << rank << ',' << format_double(report.strat_grid[p]) << ','
              << format_double(bands.mean[p]) << ','
              << format_double(bands.lower[p]) << ','
              << format_double(bands.upper[p]) << '\n';
      }
    }
  }
}

}  // namespace survdsa
