#ifndef SURVDSA_SIMULATION_HPP_
#define SURVDSA_SIMULATION_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "survdsa/cart.hpp"
#include "survdsa/dataset.hpp"
#include "survdsa/dsa.hpp"
#include "survdsa/evaluation.hpp"
#include "survdsa/loss.hpp"
#include "survdsa/partition.hpp"
#include "survdsa/survival.hpp"

namespace survdsa {

enum class Signal { High, Low };
enum class CensoringType { CovariateDependent, CovariateIndependent };

// Five covariates, each discrete uniform on 1..100; survival exponential with
// mean sigma_high when w1 > 50 or w2 > 75, sigma 0.5 otherwise; censoring
// uniform with bounds calibrated to the nominal level (per risk group when
// covariate-dependent).
struct Scenario {
  Signal signal = Signal::High;
  CensoringType censoring = CensoringType::CovariateDependent;
  double nominal_level = 0.0;  // 0, 0.30 or 0.50
  int n_train = 250;
  int n_test = 5000;
  int replicates = 1000;

  static constexpr double kSigmaLow = 0.5;
  double sigma_high() const { return signal == Signal::High ? 5.0 : 1.0; }
  bool high_group(double w1, double w2) const { return w1 > 50.0 || w2 > 75.0; }
  double sigma_for(double w1, double w2) const {
    return high_group(w1, w2) ? sigma_high() : kSigmaLow;
  }
  // P(w1 > 50 or w2 > 75) for integers uniform on 1..100.
  static constexpr double kHighGroupProbability = 0.625;

  std::string name() const;  // e.g. "high-dep-30"
  static Scenario named(const std::string& name);
};

// Upper bound b of the uniform censoring distribution solving
// P(C < T) = nominal for T exponential with the given mean (bisection on the
// closed-form censoring fraction).
double censoring_upper_bound(double exp_mean, double nominal);
// Pooled bound over the scenario's two-component survival mixture.
double censoring_upper_bound_pooled(const Scenario& scenario);

// Marginal survival S(t) of the scenario's generating mixture and the times
// where it crosses a level.
double marginal_survival(const Scenario& scenario, double t);
double marginal_survival_quantile(const Scenario& scenario, double level);
inline double marginal_median_survival(const Scenario& s) {
  return marginal_survival_quantile(s, 0.5);
}

// Deterministic given the seed; independent sub-streams for covariates,
// survival and censoring, so the test set never shifts when censoring
// settings change.  The test set is always uncensored.
std::pair<SurvivalDataset, SurvivalDataset> generate(const Scenario& scenario,
                                                     std::uint64_t seed);

// The generating structure as a partition: the two-region union form, or the
// three-leaf tree form with both high-mean leaves kept separate.
PartitionModel true_partition(Signal signal, bool tree_form);

enum class Method {
  PartDsaIpcw,
  PartDsaBrier1Fixed,
  PartDsaBrier5Even,
  PartDsaBrier5Km,
  CartIpcw,
};

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);
const std::vector<Method>& all_methods();

struct StudyConfig {
  Scenario scenario;
  std::vector<Method> methods = all_methods();
  std::uint64_t seed = 1;
  int folds = 5;
  int jobs = 1;
  int replicates_override = -1;  // <= 0 keeps scenario.replicates
  double truncate_fraction = 0.05;
  DsaConfig dsa;    // loss filled per method
  CartConfig cart;  // loss filled per method
};

struct ReplicateRow {
  int replicate = 0;
  Method method = Method::PartDsaIpcw;
  bool failed = false;
  std::string failure;
  MetricReport metrics;
  double train_risk = 0.0;
  // final-model region curves evaluated on the scenario grid, worst rank
  // first; kept only for 2- and 3-region fits
  std::vector<std::vector<double>> strat_values;
};

struct MethodAggregate {
  Method method = Method::PartDsaIpcw;
  int completed = 0;
  int failures = 0;
  int c_index_defined = 0;
  double mean_size = 0.0;
  double mean_predictors = 0.0;
  double mean_w1_w2 = 0.0;
  double mean_w3_w5 = 0.0;
  double mean_c_p = 0.0;
  double mean_c_bar_p = 0.0;
  double mean_l_p = 0.0;
  double mean_d_p = 0.0;
  double size_share[4] = {0, 0, 0, 0};  // sizes 1, 2, 3, 4+
};

struct ReplicationReport {
  Scenario scenario;
  std::vector<double> strat_grid;
  std::vector<ReplicateRow> rows;  // ordered by (replicate, method)
  std::vector<MethodAggregate> aggregates;
};

// Per replicate: generate, truncate, fit the scenario's censoring model, run
// shared-fold cross-validation per method, refit at the chosen size, and
// evaluate on the uncensored test set.  Failed replicates are recorded, not
// dropped.  Replicates run on `jobs` threads; results are deterministic and
// independent of the thread count.
ReplicationReport run_study(const StudyConfig& config);

// aggregate.csv, size_distribution.csv, replicates.csv, stratification and
// failure files under out_dir (created if needed).
void write_report(const ReplicationReport& report, const std::string& out_dir);

}  // namespace survdsa

#endif  // SURVDSA_SIMULATION_HPP_
