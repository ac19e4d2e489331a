#ifndef SURVDSA_DATASET_HPP_
#define SURVDSA_DATASET_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace survdsa {

enum class CovariateKind { Numeric, Categorical };

struct Covariate {
  std::string name;
  CovariateKind kind = CovariateKind::Numeric;
  // Categorical only: the declared level labels; values are stored as the
  // (double-coded) index into this list.
  std::vector<std::string> levels;
};

struct Subject {
  std::vector<double> covariates;  // aligned to the dataset schema
  double followup_time = 0.0;
  bool event = false;
};

// Immutable after construction; safe to share across threads.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  SurvivalDataset(std::vector<Covariate> schema, std::vector<Subject> subjects);

  const std::vector<Covariate>& schema() const { return schema_; }
  const std::vector<Subject>& subjects() const { return subjects_; }
  std::size_t size() const { return subjects_.size(); }
  std::size_t n_covariates() const { return schema_.size(); }

  std::span<const double> covariates(std::size_t i) const {
    return subjects_[i].covariates;
  }
  double time(std::size_t i) const { return subjects_[i].followup_time; }
  bool event(std::size_t i) const { return subjects_[i].event; }

  std::size_t event_count() const;
  // Throws if no subject has an observed event (fitting precondition).
  void require_events() const;

  int covariate_index(std::string_view name) const;  // -1 when absent

  SurvivalDataset subset(const std::vector<std::size_t>& indices) const;

 private:
  void validate() const;

  std::vector<Covariate> schema_;
  std::vector<Subject> subjects_;
};

// Column roles for CSV ingestion.  Exactly one time and one event column;
// an empty covariate list means "all remaining columns".  A column listed in
// declared_levels is forced categorical with exactly those levels; otherwise
// kinds are inferred (numeric when every cell parses as a number, categorical
// otherwise, with levels the sorted distinct observed values).
struct ColumnMapping {
  std::string time_column;
  std::string event_column;
  std::vector<std::string> covariate_columns;
  std::map<std::string, std::vector<std::string>> declared_levels;
};

SurvivalDataset load_csv(const std::string& path, const ColumnMapping& mapping);
void write_csv(const SurvivalDataset& data, const std::string& path);

// Deterministic balanced v-fold assignment: subject index -> fold id in
// [0, v).  Fold sizes differ by at most one.
std::vector<int> split_folds(const SurvivalDataset& data, int v,
                             std::uint64_t seed);

}  // namespace survdsa

#endif  // SURVDSA_DATASET_HPP_
