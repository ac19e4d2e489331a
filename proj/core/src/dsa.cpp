#include "survdsa/dsa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace survdsa {

namespace {

// Loss-table weights are either exactly zero or at least 1/G >= 1, so this
// threshold cleanly separates a truly empty column from subtraction roundoff.
constexpr double kWeightEps = 1e-6;

bool fittable_strict(const GroupStats& s) {
  for (double v : s.sw)
    if (!(v > kWeightEps)) return false;
  return true;
}

struct RegionWork {
  std::vector<Clause> clauses;
  std::vector<std::size_t> members;  // subject indices
  std::vector<int> clause_of;        // parallel to members
  GroupStats stats{1};
  double sse = 0.0;
};

struct SplitParts {
  SplitChoice choice;
  double child_sse = 0.0;
  GroupStats left_stats{1}, right_stats{1};
};

struct MovePlan {
  enum Kind { Addition, Deletion, Substitution } kind = Addition;
  double total_sse = 0.0;
  std::size_t region_a = 0, region_b = 0;
  int recombination = -1;  // substitution only
};

class Engine {
 public:
  Engine(const SurvivalDataset& data, const LossTable& table,
         const DsaConfig& cfg)
      : data_(data), table_(table), cfg_(cfg) {}

  const LossTable& table() const { return table_; }

  RegionWork make_region(std::vector<Clause> clauses,
                         std::vector<std::size_t> members) const {
    RegionWork r;
    r.clauses = std::move(clauses);
    r.members = std::move(members);
    r.clause_of.resize(r.members.size());
    r.stats = GroupStats(table_.cols);
    for (std::size_t p = 0; p < r.members.size(); ++p) {
      const std::size_t i = r.members[p];
      int which = -1;
      for (std::size_t c = 0; c < r.clauses.size(); ++c) {
        if (r.clauses[c].contains(data_.covariates(i))) {
          which = static_cast<int>(c);
          break;
        }
      }
      if (which < 0)
        throw std::logic_error("dsa: subject escaped its own region");
      r.clause_of[p] = which;
      r.stats.add(table_, i);
    }
    r.sse = r.stats.sse(table_);
    return r;
  }

  RegionWork make_root() const {
    std::vector<std::size_t> all(data_.size());
    std::iota(all.begin(), all.end(), 0);
    return make_region({Clause{}}, std::move(all));
  }

  std::vector<RegionWork> from_model(const PartitionModel& model) const {
    std::vector<std::vector<std::size_t>> members(model.size());
    for (std::size_t i = 0; i < data_.size(); ++i)
      members[static_cast<std::size_t>(model.assign(data_.covariates(i)))]
          .push_back(i);
    std::vector<RegionWork> out;
    out.reserve(model.size());
    for (std::size_t r = 0; r < model.size(); ++r)
      out.push_back(make_region(model.regions()[r].clauses, std::move(members[r])));
    return out;
  }

  double total_sse(const std::vector<RegionWork>& regions) const {
    double s = 0.0;
    for (const auto& r : regions) s += r.sse;
    return s;
  }

  double total_risk(const std::vector<RegionWork>& regions) const {
    return total_sse(regions) / static_cast<double>(data_.size());
  }

  PartitionModel to_model(const std::vector<RegionWork>& regions) const {
    std::vector<Region> out;
    out.reserve(regions.size());
    for (const auto& r : regions) {
      Region region;
      region.clauses = r.clauses;
      region.predictions.resize(table_.cols);
      for (std::size_t c = 0; c < table_.cols; ++c) {
        double v = r.stats.swy[c] / r.stats.sw[c];
        if (table_.clip_unit) v = std::min(1.0, std::max(0.0, v));
        region.predictions[c] = v;
      }
      out.push_back(std::move(region));
    }
    std::vector<double> times =
        cfg_.loss.kind == LossKind::Brier ? cfg_.loss.brier_times
                                          : std::vector<double>{};
    return PartitionModel(data_.schema(), std::move(out), std::move(times));
  }

  std::optional<SplitParts> best_region_split(const RegionWork& region) const;

  std::optional<MovePlan> best_addition(const std::vector<RegionWork>& regions,
                                        std::vector<std::optional<SplitParts>>* splits) const;
  std::optional<MovePlan> best_deletion(const std::vector<RegionWork>& regions) const;
  std::optional<MovePlan> best_substitution(const std::vector<RegionWork>& regions,
                                            std::vector<std::optional<SplitParts>>* splits) const;

  std::vector<RegionWork> apply(const std::vector<RegionWork>& regions,
                                const MovePlan& plan,
                                const std::vector<std::optional<SplitParts>>& splits) const;

 private:
  // Routes one region's members/clauses through a split choice.
  struct SidePieces {
    std::vector<Clause> clauses[2];
    std::vector<std::size_t> members[2];
  };
  SidePieces route(const RegionWork& region, const SplitChoice& choice) const;

  const SurvivalDataset& data_;
  const LossTable& table_;
  const DsaConfig& cfg_;
};

std::optional<SplitParts> Engine::best_region_split(const RegionWork& region) const {
  const std::size_t mb = static_cast<std::size_t>(cfg_.min_per_clause);
  const std::size_t n_members = region.members.size();
  if (n_members < 2 * mb) return std::nullopt;
  if (!fittable_strict(region.stats)) return std::nullopt;

  const double region_sse = region.sse;
  const double tol = kSplitImprovementTol * std::max(1.0, region_sse);
  const std::size_t n_clauses = region.clauses.size();
  const std::size_t cols = table_.cols;
  const auto& schema = data_.schema();

  std::optional<SplitParts> best;

  std::vector<std::size_t> clause_total(n_clauses, 0);
  for (int c : region.clause_of) clause_total[static_cast<std::size_t>(c)]++;

  for (int j = 0; j < static_cast<int>(schema.size()); ++j) {
    const Covariate& cov = schema[static_cast<std::size_t>(j)];

    if (cov.kind == CovariateKind::Numeric) {
      std::vector<std::pair<double, std::size_t>> ordered(n_members);
      for (std::size_t p = 0; p < n_members; ++p)
        ordered[p] = {data_.covariates(region.members[p])[static_cast<std::size_t>(j)], p};
      std::sort(ordered.begin(), ordered.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (ordered.front().first == ordered.back().first) continue;

      // value-change boundaries; candidate cuts are the midpoints
      std::vector<std::size_t> boundary;
      for (std::size_t p = 0; p + 1 < n_members; ++p)
        if (ordered[p].first < ordered[p + 1].first) boundary.push_back(p);
      std::vector<std::size_t> chosen;
      if (boundary.size() > 200) {
        chosen.reserve(200);
        const double step = static_cast<double>(boundary.size()) / 200.0;
        std::size_t prev = std::numeric_limits<std::size_t>::max();
        for (int t = 0; t < 200; ++t) {
          auto idx = static_cast<std::size_t>((t + 0.5) * step);
          if (idx != prev) chosen.push_back(boundary[idx]);
          prev = idx;
        }
      } else {
        chosen = boundary;
      }

      std::vector<double> clause_lo(n_clauses), clause_hi(n_clauses);
      for (std::size_t c = 0; c < n_clauses; ++c) {
        const Constraint* k = region.clauses[c].find(j);
        clause_lo[c] = k ? k->range.lower : -std::numeric_limits<double>::infinity();
        clause_hi[c] = k ? k->range.upper : std::numeric_limits<double>::infinity();
      }

      GroupStats left(cols);
      std::vector<std::size_t> clause_left(n_clauses, 0);
      std::size_t next = 0;
      for (std::size_t p = 0; p < n_members && next < chosen.size(); ++p) {
        left.add(table_, region.members[ordered[p].second]);
        clause_left[static_cast<std::size_t>(
            region.clause_of[ordered[p].second])]++;
        if (p != chosen[next]) continue;
        ++next;
        const double cut = 0.5 * (ordered[p].first + ordered[p + 1].first);

        bool legal = true;
        for (std::size_t c = 0; c < n_clauses && legal; ++c) {
          const std::size_t lc = clause_left[c];
          const std::size_t rc = clause_total[c] - lc;
          if (cut > clause_lo[c] && lc < mb) legal = false;
          if (cut < clause_hi[c] && rc < mb) legal = false;
        }
        if (!legal) continue;

        GroupStats right = region.stats;
        right.subtract(left);
        if (!fittable_strict(left) || !fittable_strict(right)) continue;
        const double child = left.sse(table_) + right.sse(table_);
        if (child < region_sse - tol && (!best || child < best->child_sse)) {
          SplitParts parts;
          parts.choice.covariate = j;
          parts.choice.cut = cut;
          parts.child_sse = child;
          parts.left_stats = left;
          parts.right_stats = right;
          best = std::move(parts);
        }
      }
    } else {
      const auto n_levels = static_cast<int>(cov.levels.size());
      std::vector<std::size_t> level_count(static_cast<std::size_t>(n_levels), 0);
      std::vector<GroupStats> level_stats(static_cast<std::size_t>(n_levels),
                                          GroupStats(cols));
      std::vector<std::vector<std::size_t>> level_clause(
          static_cast<std::size_t>(n_levels), std::vector<std::size_t>(n_clauses, 0));
      for (std::size_t p = 0; p < n_members; ++p) {
        const std::size_t i = region.members[p];
        const auto lvl = static_cast<std::size_t>(
            std::lround(data_.covariates(i)[static_cast<std::size_t>(j)]));
        level_count[lvl]++;
        level_stats[lvl].add(table_, i);
        level_clause[lvl][static_cast<std::size_t>(region.clause_of[p])]++;
      }
      std::vector<int> observed;
      for (int l = 0; l < n_levels; ++l)
        if (level_count[static_cast<std::size_t>(l)] > 0) observed.push_back(l);
      if (observed.size() < 2) continue;

      // classical shortcut: order levels by weighted mean outcome, then
      // treat them as ordered
      auto level_score = [&](int l) {
        const GroupStats& s = level_stats[static_cast<std::size_t>(l)];
        double num = 0.0, den = 0.0;
        for (std::size_t r = 0; r < cols; ++r) {
          num += table_.col_weight[r] * s.swy[r];
          den += table_.col_weight[r] * s.sw[r];
        }
        return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
      };
      std::sort(observed.begin(), observed.end(), [&](int a, int b) {
        const double sa = level_score(a), sb = level_score(b);
        if (sa != sb) return sa < sb;
        return a < b;
      });

      std::vector<std::vector<char>> allowed(
          n_clauses, std::vector<char>(static_cast<std::size_t>(n_levels), 1));
      std::vector<std::size_t> allowed_count(n_clauses,
                                             static_cast<std::size_t>(n_levels));
      for (std::size_t c = 0; c < n_clauses; ++c) {
        const Constraint* k = region.clauses[c].find(j);
        if (!k) continue;
        std::fill(allowed[c].begin(), allowed[c].end(), 0);
        for (int l : k->levels) allowed[c][static_cast<std::size_t>(l)] = 1;
        allowed_count[c] = k->levels.size();
      }

      GroupStats left(cols);
      std::vector<std::size_t> clause_left(n_clauses, 0);
      std::vector<std::size_t> in_subset_allowed(n_clauses, 0);
      std::vector<int> subset;
      for (std::size_t k = 0; k + 1 < observed.size(); ++k) {
        const int lvl = observed[k];
        subset.push_back(lvl);
        left.add(level_stats[static_cast<std::size_t>(lvl)]);
        for (std::size_t c = 0; c < n_clauses; ++c) {
          clause_left[c] += level_clause[static_cast<std::size_t>(lvl)][c];
          in_subset_allowed[c] += allowed[c][static_cast<std::size_t>(lvl)];
        }

        bool legal = true;
        for (std::size_t c = 0; c < n_clauses && legal; ++c) {
          const std::size_t lc = clause_left[c];
          const std::size_t rc = clause_total[c] - lc;
          if (in_subset_allowed[c] > 0 && lc < mb) legal = false;
          if (allowed_count[c] - in_subset_allowed[c] > 0 && rc < mb)
            legal = false;
        }
        if (!legal) continue;

        GroupStats right = region.stats;
        right.subtract(left);
        if (!fittable_strict(left) || !fittable_strict(right)) continue;
        const double child = left.sse(table_) + right.sse(table_);
        if (child < region_sse - tol && (!best || child < best->child_sse)) {
          SplitParts parts;
          parts.choice.covariate = j;
          parts.choice.left_levels = subset;
          std::sort(parts.choice.left_levels.begin(),
                    parts.choice.left_levels.end());
          parts.child_sse = child;
          parts.left_stats = left;
          parts.right_stats = right;
          best = std::move(parts);
        }
      }
    }
  }
  return best;
}

Engine::SidePieces Engine::route(const RegionWork& region,
                                 const SplitChoice& choice) const {
  SidePieces out;
  const int j = choice.covariate;
  for (const Clause& clause : region.clauses) {
    for (int side = 0; side < 2; ++side) {
      auto restricted = restrict_clause(clause, choice, side == 0, data_.schema());
      if (restricted) out.clauses[side].push_back(std::move(*restricted));
    }
  }

  for (std::size_t i : region.members) {
    const double v = data_.covariates(i)[static_cast<std::size_t>(j)];
    bool goes_left;
    if (choice.categorical())
      goes_left = std::binary_search(choice.left_levels.begin(),
                                     choice.left_levels.end(),
                                     static_cast<int>(std::lround(v)));
    else
      goes_left = v <= choice.cut;
    out.members[goes_left ? 0 : 1].push_back(i);
  }
  return out;
}

std::optional<MovePlan> Engine::best_addition(
    const std::vector<RegionWork>& regions,
    std::vector<std::optional<SplitParts>>* splits) const {
  splits->assign(regions.size(), std::nullopt);
  std::optional<MovePlan> best;
  const double base = total_sse(regions);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    (*splits)[r] = best_region_split(regions[r]);
    if (!(*splits)[r]) continue;
    const double total = base - regions[r].sse + (*splits)[r]->child_sse;
    if (!best || total < best->total_sse) {
      MovePlan plan;
      plan.kind = MovePlan::Addition;
      plan.total_sse = total;
      plan.region_a = r;
      best = plan;
    }
  }
  return best;
}

std::optional<MovePlan> Engine::best_deletion(
    const std::vector<RegionWork>& regions) const {
  std::optional<MovePlan> best;
  const double base = total_sse(regions);
  for (std::size_t i = 0; i + 1 < regions.size(); ++i) {
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      GroupStats merged = regions[i].stats;
      merged.add(regions[j].stats);
      const double total =
          base - regions[i].sse - regions[j].sse + merged.sse(table_);
      if (!best || total < best->total_sse) {
        MovePlan plan;
        plan.kind = MovePlan::Deletion;
        plan.total_sse = total;
        plan.region_a = i;
        plan.region_b = j;
        best = plan;
      }
    }
  }
  return best;
}

std::optional<MovePlan> Engine::best_substitution(
    const std::vector<RegionWork>& regions,
    std::vector<std::optional<SplitParts>>* splits) const {
  splits->assign(regions.size(), std::nullopt);
  for (std::size_t r = 0; r < regions.size(); ++r)
    (*splits)[r] = best_region_split(regions[r]);

  std::optional<MovePlan> best;
  const double base = total_sse(regions);
  auto consider = [&](std::size_t i, std::size_t j, int recomb,
                      const GroupStats& s1, const GroupStats& s2) {
    if (!fittable_strict(s1) || !fittable_strict(s2)) return;
    const double total = base - regions[i].sse - regions[j].sse +
                         s1.sse(table_) + s2.sse(table_);
    if (!best || total < best->total_sse) {
      MovePlan plan;
      plan.kind = MovePlan::Substitution;
      plan.total_sse = total;
      plan.region_a = i;
      plan.region_b = j;
      plan.recombination = recomb;
      best = plan;
    }
  };

  for (std::size_t i = 0; i + 1 < regions.size(); ++i) {
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      const auto& si = (*splits)[i];
      const auto& sj = (*splits)[j];
      if (si && sj) {
        const GroupStats &a = si->left_stats, &b = si->right_stats;
        const GroupStats &c = sj->left_stats, &d = sj->right_stats;
        auto sum = [](const GroupStats& x, const GroupStats& y) {
          GroupStats s = x;
          s.add(y);
          return s;
        };
        // the six unique recombinations of {a,b,c,d}, the original ab|cd
        // excluded
        consider(i, j, 0, a, sum(sum(b, c), d));
        consider(i, j, 1, b, sum(sum(a, c), d));
        consider(i, j, 2, c, sum(sum(a, b), d));
        consider(i, j, 3, d, sum(sum(a, b), c));
        consider(i, j, 4, sum(a, c), sum(b, d));
        consider(i, j, 5, sum(a, d), sum(b, c));
      } else if (si && !sj) {
        const GroupStats &a = si->left_stats, &b = si->right_stats;
        GroupStats bj = b;
        bj.add(regions[j].stats);
        GroupStats aj = a;
        aj.add(regions[j].stats);
        consider(i, j, 6, a, bj);
        consider(i, j, 7, b, aj);
      } else if (!si && sj) {
        const GroupStats &c = sj->left_stats, &d = sj->right_stats;
        GroupStats di = d;
        di.add(regions[i].stats);
        GroupStats ci = c;
        ci.add(regions[i].stats);
        consider(i, j, 8, c, di);
        consider(i, j, 9, d, ci);
      }
    }
  }
  return best;
}

std::vector<RegionWork> Engine::apply(
    const std::vector<RegionWork>& regions, const MovePlan& plan,
    const std::vector<std::optional<SplitParts>>& splits) const {
  std::vector<RegionWork> out;
  switch (plan.kind) {
    case MovePlan::Addition: {
      const auto& parts = splits[plan.region_a];
      SidePieces side = route(regions[plan.region_a], parts->choice);
      out = regions;
      out[plan.region_a] = make_region(side.clauses[0], side.members[0]);
      out.push_back(make_region(side.clauses[1], side.members[1]));
      return out;
    }
    case MovePlan::Deletion: {
      const RegionWork& ri = regions[plan.region_a];
      const RegionWork& rj = regions[plan.region_b];
      std::vector<Clause> clauses = ri.clauses;
      clauses.insert(clauses.end(), rj.clauses.begin(), rj.clauses.end());
      std::vector<std::size_t> members = ri.members;
      members.insert(members.end(), rj.members.begin(), rj.members.end());
      out = regions;
      out[plan.region_a] = make_region(std::move(clauses), std::move(members));
      out.erase(out.begin() + static_cast<std::ptrdiff_t>(plan.region_b));
      return out;
    }
    case MovePlan::Substitution: {
      const std::size_t i = plan.region_a, j = plan.region_b;
      // parts: 0,1 from splitting region i; 2,3 from region j; when one side
      // has no split, its whole region stands in for both parts once.
      struct Piece {
        const std::vector<Clause>* clauses;
        const std::vector<std::size_t>* members;
      };
      auto combine = [&](std::initializer_list<Piece> pieces) {
        std::vector<Clause> clauses;
        std::vector<std::size_t> members;
        for (const Piece& p : pieces) {
          clauses.insert(clauses.end(), p.clauses->begin(), p.clauses->end());
          members.insert(members.end(), p.members->begin(), p.members->end());
        }
        return make_region(std::move(clauses), std::move(members));
      };

      RegionWork r1, r2;
      if (plan.recombination <= 5) {
        SidePieces pi = route(regions[i], splits[i]->choice);
        SidePieces pj = route(regions[j], splits[j]->choice);
        const Piece a{&pi.clauses[0], &pi.members[0]};
        const Piece b{&pi.clauses[1], &pi.members[1]};
        const Piece c{&pj.clauses[0], &pj.members[0]};
        const Piece d{&pj.clauses[1], &pj.members[1]};
        switch (plan.recombination) {
          case 0: r1 = combine({a}); r2 = combine({b, c, d}); break;
          case 1: r1 = combine({b}); r2 = combine({a, c, d}); break;
          case 2: r1 = combine({c}); r2 = combine({a, b, d}); break;
          case 3: r1 = combine({d}); r2 = combine({a, b, c}); break;
          case 4: r1 = combine({a, c}); r2 = combine({b, d}); break;
          case 5: r1 = combine({a, d}); r2 = combine({b, c}); break;
        }
      } else if (plan.recombination <= 7) {
        SidePieces pi = route(regions[i], splits[i]->choice);
        const Piece a{&pi.clauses[0], &pi.members[0]};
        const Piece b{&pi.clauses[1], &pi.members[1]};
        const Piece whole{&regions[j].clauses, &regions[j].members};
        if (plan.recombination == 6) {
          r1 = combine({a});
          r2 = combine({b, whole});
        } else {
          r1 = combine({b});
          r2 = combine({a, whole});
        }
      } else {
        SidePieces pj = route(regions[j], splits[j]->choice);
        const Piece c{&pj.clauses[0], &pj.members[0]};
        const Piece d{&pj.clauses[1], &pj.members[1]};
        const Piece whole{&regions[i].clauses, &regions[i].members};
        if (plan.recombination == 8) {
          r1 = combine({c});
          r2 = combine({d, whole});
        } else {
          r1 = combine({d});
          r2 = combine({c, whole});
        }
      }
      out = regions;
      out[i] = std::move(r1);
      out[j] = std::move(r2);
      return out;
    }
  }
  throw std::logic_error("dsa: unknown move");
}

}  // namespace

std::optional<Clause> restrict_clause(const Clause& clause,
                                      const SplitChoice& choice, bool left_side,
                                      const std::vector<Covariate>& schema) {
  const int j = choice.covariate;
  if (!choice.categorical()) {
    const Constraint* k = clause.find(j);
    const NumericRange range = k ? k->range : NumericRange{};
    NumericRange side = left_side
                            ? NumericRange{range.lower, std::min(range.upper, choice.cut)}
                            : NumericRange{std::max(range.lower, choice.cut), range.upper};
    if (side.empty()) return std::nullopt;
    Clause c = clause;
    c.set(j, Constraint{side, {}});
    return c;
  }
  const Constraint* k = clause.find(j);
  std::vector<int> allowed;
  if (k && k->categorical()) {
    allowed = k->levels;
  } else {
    const auto& cov = schema[static_cast<std::size_t>(j)];
    for (int l = 0; l < static_cast<int>(cov.levels.size()); ++l)
      allowed.push_back(l);
  }
  std::vector<int> side;
  for (int l : allowed) {
    const bool in_left = std::binary_search(choice.left_levels.begin(),
                                            choice.left_levels.end(), l);
    if (in_left == left_side) side.push_back(l);
  }
  if (side.empty()) return std::nullopt;
  Clause c = clause;
  c.set(j, Constraint{NumericRange{}, std::move(side)});
  return c;
}

bool CandidateList::offer(int size, PartitionModel model, double train_risk) {
  auto it = by_size_.find(size);
  if (it == by_size_.end() || train_risk < it->second.train_risk) {
    by_size_[size] = SizedCandidate{std::move(model), train_risk};
    return true;
  }
  return false;
}

const SizedCandidate* CandidateList::at(int size) const {
  auto it = by_size_.find(size);
  return it == by_size_.end() ? nullptr : &it->second;
}

const SizedCandidate* CandidateList::at_or_smaller(int size) const {
  const SizedCandidate* found = nullptr;
  for (const auto& [k, cand] : by_size_) {
    if (k > size) break;
    found = &cand;
  }
  return found;
}

int CandidateList::max_size() const {
  return by_size_.empty() ? 0 : by_size_.rbegin()->first;
}

void CandidateList::enforce_monotone() {
  double prev = std::numeric_limits<double>::infinity();
  for (auto it = by_size_.begin(); it != by_size_.end();) {
    if (it->second.train_risk > prev) {
      it = by_size_.erase(it);
    } else {
      prev = it->second.train_risk;
      ++it;
    }
  }
}

std::optional<BestSplit> best_split(const std::vector<Clause>& region_clauses,
                                    const SurvivalDataset& data,
                                    const CensoringModel& g,
                                    const DsaConfig& config) {
  config.loss.validate();
  const LossTable table = build_loss_table(data, g, config.loss);
  Engine eng(data, table, config);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < data.size(); ++i)
    for (const Clause& c : region_clauses)
      if (c.contains(data.covariates(i))) {
        members.push_back(i);
        break;
      }
  RegionWork region = eng.make_region(region_clauses, std::move(members));
  auto parts = eng.best_region_split(region);
  if (!parts) return std::nullopt;
  return BestSplit{parts->choice, (region.sse - parts->child_sse) /
                                      static_cast<double>(data.size())};
}

std::optional<PartitionModel> addition_move(const PartitionModel& model,
                                            const SurvivalDataset& data,
                                            const CensoringModel& g,
                                            const DsaConfig& config) {
  if (static_cast<int>(model.size()) >= config.max_regions)
    throw std::invalid_argument("addition_move: model already at max_regions");
  const LossTable table = build_loss_table(data, g, config.loss);
  Engine eng(data, table, config);
  auto regions = eng.from_model(model);
  std::vector<std::optional<SplitParts>> splits;
  auto plan = eng.best_addition(regions, &splits);
  if (!plan) return std::nullopt;
  return eng.to_model(eng.apply(regions, *plan, splits));
}

std::optional<PartitionModel> deletion_move(const PartitionModel& model,
                                            const SurvivalDataset& data,
                                            const CensoringModel& g,
                                            const DsaConfig& config) {
  if (model.size() < 2)
    throw std::invalid_argument("deletion_move: model must have at least two regions");
  const LossTable table = build_loss_table(data, g, config.loss);
  Engine eng(data, table, config);
  auto regions = eng.from_model(model);
  auto plan = eng.best_deletion(regions);
  if (!plan) return std::nullopt;
  return eng.to_model(eng.apply(regions, *plan, {}));
}

std::optional<PartitionModel> substitution_move(const PartitionModel& model,
                                                const SurvivalDataset& data,
                                                const CensoringModel& g,
                                                const DsaConfig& config) {
  if (model.size() < 2)
    throw std::invalid_argument(
        "substitution_move: model must have at least two regions");
  const LossTable table = build_loss_table(data, g, config.loss);
  Engine eng(data, table, config);
  auto regions = eng.from_model(model);
  std::vector<std::optional<SplitParts>> splits;
  auto plan = eng.best_substitution(regions, &splits);
  if (!plan) return std::nullopt;
  const double n = static_cast<double>(data.size());
  const double current = eng.total_risk(regions);
  const double candidate = plan->total_sse / n;
  if (!(candidate <= current * (1.0 - config.min_percent_difference) &&
        candidate < current))
    return std::nullopt;
  return eng.to_model(eng.apply(regions, *plan, splits));
}

CandidateList fit_dsa(const SurvivalDataset& data, const CensoringModel& g,
                      const DsaConfig& config) {
  data.require_events();
  config.loss.validate();
  if (config.max_regions < 1 || config.min_per_clause < 1 ||
      config.min_percent_difference < 0.0)
    throw std::invalid_argument("fit_dsa: invalid configuration");

  const LossTable table = build_loss_table(data, g, config.loss);
  Engine eng(data, table, config);
  std::vector<RegionWork> regions;
  regions.push_back(eng.make_root());
  if (!fittable_strict(regions[0].stats))
    throw std::runtime_error("fit_dsa: no positive weight in some loss column");

  const double n = static_cast<double>(data.size());
  const double mpd = config.min_percent_difference;
  CandidateList out;
  out.offer(1, eng.to_model(regions), eng.total_risk(regions));

  for (int guard = 0; guard < 100000; ++guard) {
    const int k = static_cast<int>(regions.size());
    bool moved = false;

    if (k >= 2) {
      auto plan = eng.best_deletion(regions);
      if (plan) {
        const double candidate = plan->total_sse / n;
        const SizedCandidate* incumbent = out.at(k - 1);
        if (incumbent && candidate <= incumbent->train_risk * (1.0 - mpd) &&
            candidate < incumbent->train_risk) {
          regions = eng.apply(regions, *plan, {});
          out.offer(k - 1, eng.to_model(regions), eng.total_risk(regions));
          moved = true;
        }
      }
    }

    if (!moved && k >= 2) {
      std::vector<std::optional<SplitParts>> splits;
      auto plan = eng.best_substitution(regions, &splits);
      if (plan) {
        const double candidate = plan->total_sse / n;
        const double current = eng.total_risk(regions);
        const SizedCandidate* incumbent = out.at(k);
        const double gate =
            std::min(current, incumbent ? incumbent->train_risk : current);
        if (candidate <= gate * (1.0 - mpd) && candidate < gate) {
          regions = eng.apply(regions, *plan, splits);
          out.offer(k, eng.to_model(regions), eng.total_risk(regions));
          moved = true;
        }
      }
    }

    if (!moved && k < config.max_regions) {
      std::vector<std::optional<SplitParts>> splits;
      auto plan = eng.best_addition(regions, &splits);
      if (plan) {
        regions = eng.apply(regions, *plan, splits);
        out.offer(k + 1, eng.to_model(regions), eng.total_risk(regions));
        moved = true;
      }
    }

    if (!moved) break;
  }

  out.enforce_monotone();
  return out;
}

}  // namespace survdsa
