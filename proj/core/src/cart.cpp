#include "survdsa/cart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "survdsa/format.hpp"

namespace survdsa {

namespace {

std::vector<double> fitted_values(const GroupStats& stats, const LossTable& table) {
  std::vector<double> out(table.cols);
  for (std::size_t c = 0; c < table.cols; ++c) {
    if (!(stats.sw[c] > 0.0))
      throw std::runtime_error("cart: node with zero total weight");
    double v = stats.swy[c] / stats.sw[c];
    if (table.clip_unit) v = std::min(1.0, std::max(0.0, v));
    out[c] = v;
  }
  return out;
}

GroupStats stats_of(const std::vector<std::size_t>& members, const LossTable& table) {
  GroupStats s(table.cols);
  for (std::size_t i : members) s.add(table, i);
  return s;
}

bool goes_left(const SplitChoice& split, double v) {
  if (split.categorical())
    return std::binary_search(split.left_levels.begin(), split.left_levels.end(),
                              static_cast<int>(std::lround(v)));
  return v <= split.cut;
}

}  // namespace

std::size_t CartTree::leaf_count() const {
  if (!root) return 0;
  std::size_t count = 0;
  std::vector<const TreeNode*> stack = {root.get()};
  while (!stack.empty()) {
    const TreeNode* n = stack.back();
    stack.pop_back();
    if (n->is_leaf()) {
      ++count;
    } else {
      stack.push_back(n->left.get());
      stack.push_back(n->right.get());
    }
  }
  return count;
}

CartTree cart_grow(const SurvivalDataset& data, const CensoringModel& g,
                   const CartConfig& config) {
  data.require_events();
  config.loss.validate();
  if (config.min_node < 1 || config.min_split < 1 || config.max_leaves < 1)
    throw std::invalid_argument("cart_grow: invalid configuration");

  const LossTable table = build_loss_table(data, g, config.loss);
  DsaConfig split_cfg;
  split_cfg.min_per_clause = config.min_node;
  split_cfg.min_percent_difference = 0.0;
  split_cfg.loss = config.loss;

  CartTree tree;
  tree.schema = data.schema();
  tree.root = std::make_unique<TreeNode>();

  struct OpenLeaf {
    TreeNode* node;
    Clause clause;
    std::vector<std::size_t> members;
    std::optional<BestSplit> split;
    int id;
  };

  int next_id = 0;
  auto open_leaf = [&](TreeNode* node, Clause clause,
                       std::vector<std::size_t> members) {
    node->n = members.size();
    node->predictions = fitted_values(stats_of(members, table), table);
    OpenLeaf leaf{node, std::move(clause), std::move(members), std::nullopt,
                  next_id++};
    if (static_cast<int>(leaf.members.size()) >= config.min_split)
      leaf.split = best_split({leaf.clause}, data, g, split_cfg);
    return leaf;
  };

  std::vector<OpenLeaf> open;
  {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    open.push_back(open_leaf(tree.root.get(), Clause{}, std::move(all)));
  }

  int leaves = 1;
  while (leaves < config.max_leaves) {
    // best-first: largest risk improvement, earliest node on ties
    int pick = -1;
    for (int k = 0; k < static_cast<int>(open.size()); ++k) {
      if (!open[k].split) continue;
      if (pick < 0 || open[k].split->improvement > open[pick].split->improvement)
        pick = k;
    }
    if (pick < 0) break;

    OpenLeaf chosen = std::move(open[static_cast<std::size_t>(pick)]);
    open.erase(open.begin() + pick);

    TreeNode* node = chosen.node;
    node->split = chosen.split->choice;
    node->left = std::make_unique<TreeNode>();
    node->right = std::make_unique<TreeNode>();

    auto left_clause = restrict_clause(chosen.clause, node->split, true, tree.schema);
    auto right_clause = restrict_clause(chosen.clause, node->split, false, tree.schema);
    if (!left_clause || !right_clause)
      throw std::logic_error("cart: chosen split produced an empty side");

    std::vector<std::size_t> left_members, right_members;
    for (std::size_t i : chosen.members) {
      const double v =
          data.covariates(i)[static_cast<std::size_t>(node->split.covariate)];
      (goes_left(node->split, v) ? left_members : right_members).push_back(i);
    }

    open.push_back(open_leaf(node->left.get(), std::move(*left_clause),
                             std::move(left_members)));
    open.push_back(open_leaf(node->right.get(), std::move(*right_clause),
                             std::move(right_members)));
    ++leaves;
  }
  return tree;
}

namespace {

struct PruneNode {
  const TreeNode* source = nullptr;
  int left = -1, right = -1;
  bool collapsed = false;
  Clause clause;
  std::vector<double> predictions;
  double sse = 0.0;          // this node as a single leaf
  double subtree_sse = 0.0;  // current (possibly pruned) subtree
  int leaves = 1;
};

int build_prune_nodes(const TreeNode* node, Clause clause,
                      std::vector<std::size_t> members,
                      const SurvivalDataset& data, const LossTable& table,
                      const std::vector<Covariate>& schema,
                      std::vector<PruneNode>* out) {
  PruneNode pn;
  pn.source = node;
  pn.clause = clause;
  const GroupStats stats = stats_of(members, table);
  pn.predictions = fitted_values(stats, table);
  pn.sse = stats.sse(table);
  const int index = static_cast<int>(out->size());
  out->push_back(std::move(pn));
  if (!node->is_leaf()) {
    auto left_clause = restrict_clause(clause, node->split, true, schema);
    auto right_clause = restrict_clause(clause, node->split, false, schema);
    if (!left_clause || !right_clause)
      throw std::invalid_argument("prune: tree split with an empty side");
    std::vector<std::size_t> left_members, right_members;
    for (std::size_t i : members) {
      const double v =
          data.covariates(i)[static_cast<std::size_t>(node->split.covariate)];
      (goes_left(node->split, v) ? left_members : right_members).push_back(i);
    }
    const int l = build_prune_nodes(node->left.get(), *left_clause,
                                    std::move(left_members), data, table,
                                    schema, out);
    const int r = build_prune_nodes(node->right.get(), *right_clause,
                                    std::move(right_members), data, table,
                                    schema, out);
    (*out)[static_cast<std::size_t>(index)].left = l;
    (*out)[static_cast<std::size_t>(index)].right = r;
  }
  return index;
}

// Refresh subtree_sse / leaves bottom-up; returns nothing, nodes are updated
// in place (children have larger indices than parents by construction).
void refresh(std::vector<PruneNode>* nodes) {
  for (int k = static_cast<int>(nodes->size()) - 1; k >= 0; --k) {
    PruneNode& n = (*nodes)[static_cast<std::size_t>(k)];
    const bool leaf = n.collapsed || n.left < 0;
    if (leaf) {
      n.subtree_sse = n.sse;
      n.leaves = 1;
    } else {
      const PruneNode& l = (*nodes)[static_cast<std::size_t>(n.left)];
      const PruneNode& r = (*nodes)[static_cast<std::size_t>(n.right)];
      n.subtree_sse = l.subtree_sse + r.subtree_sse;
      n.leaves = l.leaves + r.leaves;
    }
  }
}

void snapshot_regions(const std::vector<PruneNode>& nodes, int index,
                      std::vector<Region>* regions) {
  const PruneNode& n = nodes[static_cast<std::size_t>(index)];
  if (n.collapsed || n.left < 0) {
    Region region;
    region.clauses = {n.clause};
    region.predictions = n.predictions;
    regions->push_back(std::move(region));
    return;
  }
  snapshot_regions(nodes, n.left, regions);
  snapshot_regions(nodes, n.right, regions);
}

}  // namespace

CandidateList cart_prune_path(const CartTree& tree, const SurvivalDataset& data,
                              const CensoringModel& g, const CartConfig& config) {
  if (!tree.root) throw std::invalid_argument("prune: empty tree");
  const LossTable table = build_loss_table(data, g, config.loss);
  std::vector<PruneNode> nodes;
  {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    build_prune_nodes(tree.root.get(), Clause{}, std::move(all), data, table,
                      tree.schema, &nodes);
  }

  const double n = static_cast<double>(data.size());
  const std::vector<double> times = config.loss.kind == LossKind::Brier
                                        ? config.loss.brier_times
                                        : std::vector<double>{};
  CandidateList out;
  auto record = [&]() {
    refresh(&nodes);
    std::vector<Region> regions;
    snapshot_regions(nodes, 0, &regions);
    const int leaves = static_cast<int>(regions.size());
    out.offer(leaves,
              PartitionModel(tree.schema, std::move(regions), times),
              nodes[0].subtree_sse / n);
  };

  record();
  while (nodes[0].leaves > 1) {
    // weakest link: smallest per-leaf cost increase when collapsing
    double best = std::numeric_limits<double>::infinity();
    for (const PruneNode& node : nodes) {
      if (node.collapsed || node.left < 0) continue;
      const double link = (node.sse - node.subtree_sse) /
                          static_cast<double>(node.leaves - 1);
      best = std::min(best, link);
    }
    for (PruneNode& node : nodes) {
      if (node.collapsed || node.left < 0) continue;
      const double link = (node.sse - node.subtree_sse) /
                          static_cast<double>(node.leaves - 1);
      if (link == best) node.collapsed = true;
    }
    record();
  }
  out.enforce_monotone();
  return out;
}

PartitionModel tree_to_partition(const CartTree& tree,
                                 const std::vector<double>& prediction_times) {
  if (!tree.root) throw std::invalid_argument("tree_to_partition: empty tree");
  std::vector<Region> regions;
  struct Frame {
    const TreeNode* node;
    Clause clause;
  };
  std::vector<Frame> stack = {{tree.root.get(), Clause{}}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.node->is_leaf()) {
      Region region;
      region.clauses = {std::move(f.clause)};
      region.predictions = f.node->predictions;
      regions.push_back(std::move(region));
      continue;
    }
    auto left_clause = restrict_clause(f.clause, f.node->split, true, tree.schema);
    auto right_clause = restrict_clause(f.clause, f.node->split, false, tree.schema);
    if (!left_clause || !right_clause)
      throw std::invalid_argument("tree_to_partition: split with an empty side");
    // right pushed first so leaves emit left-to-right
    stack.push_back({f.node->right.get(), std::move(*right_clause)});
    stack.push_back({f.node->left.get(), std::move(*left_clause)});
  }
  return PartitionModel(tree.schema, std::move(regions), prediction_times);
}

namespace {

void dump_node(const TreeNode* node, const std::vector<Covariate>& schema,
               int depth, std::ostringstream* os) {
  const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  if (node->is_leaf()) {
    *os << indent << "leaf n=" << node->n << " value=";
    for (std::size_t c = 0; c < node->predictions.size(); ++c)
      *os << (c ? "," : "") << format_double(node->predictions[c]);
    *os << '\n';
    return;
  }
  const Covariate& cov = schema[static_cast<std::size_t>(node->split.covariate)];
  if (node->split.categorical()) {
    *os << indent << "split " << cov.name << " in {";
    for (std::size_t k = 0; k < node->split.left_levels.size(); ++k)
      *os << (k ? "," : "")
          << cov.levels[static_cast<std::size_t>(node->split.left_levels[k])];
    *os << "}\n";
  } else {
    *os << indent << "split " << cov.name << " <= "
        << format_double(node->split.cut) << '\n';
  }
  dump_node(node->left.get(), schema, depth + 1, os);
  dump_node(node->right.get(), schema, depth + 1, os);
}

}  // namespace

std::string tree_debug_dump(const CartTree& tree) {
  std::ostringstream os;
  if (tree.root) dump_node(tree.root.get(), tree.schema, 0, &os);
  return os.str();
}

}  // namespace survdsa
