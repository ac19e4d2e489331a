#ifndef SURVDSA_CART_HPP_
#define SURVDSA_CART_HPP_

#include <memory>
#include <string>
#include <vector>

#include "survdsa/dataset.hpp"
#include "survdsa/dsa.hpp"
#include "survdsa/loss.hpp"
#include "survdsa/partition.hpp"
#include "survdsa/survival.hpp"

namespace survdsa {

struct CartConfig {
  int min_node = 15;    // minimum subjects per leaf
  int min_split = 30;   // minimum subjects in a node to consider splitting
  int max_leaves = 10;
  LossSpec loss;
};

struct TreeNode {
  SplitChoice split;  // internal nodes only
  std::unique_ptr<TreeNode> left, right;
  std::vector<double> predictions;  // fitted values (leaf or collapsed value)
  std::size_t n = 0;                // training subjects reaching this node

  bool is_leaf() const { return left == nullptr; }
};

struct CartTree {
  std::vector<Covariate> schema;
  std::unique_ptr<TreeNode> root;

  std::size_t leaf_count() const;
};

// Greedy best-first growth under IPCW-weighted loss, reusing the exhaustive
// single-region split scan of the partitioning search.
CartTree cart_grow(const SurvivalDataset& data, const CensoringModel& g,
                   const CartConfig& config);

// Weakest-link cost-complexity pruning on the training risk; one nested
// subtree per reachable leaf count, as partition models.
CandidateList cart_prune_path(const CartTree& tree, const SurvivalDataset& data,
                              const CensoringModel& g, const CartConfig& config);

// Each leaf becomes a single-clause region.
PartitionModel tree_to_partition(const CartTree& tree,
                                 const std::vector<double>& prediction_times = {});

std::string tree_debug_dump(const CartTree& tree);

}  // namespace survdsa

#endif  // SURVDSA_CART_HPP_
