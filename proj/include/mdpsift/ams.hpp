#pragma once

#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "mdpsift/belief.hpp"
#include "mdpsift/model.hpp"
#include "mdpsift/value.hpp"

namespace mdpsift {

// Sampling budget per recursion depth.  samples_per_stage holds either one
// shared value or horizon+1 per-depth values; every entry must be at least
// the number of actions because initialization rolls each action out once.
struct AmsConfig {
    std::vector<std::int64_t> samples_per_stage{2000};
    std::uint64_t seed = 1;
    bool memoize = true;
    bool reach_avoid = false;

    std::int64_t samples_at(int depth) const;
};

struct DepthKey {
    NodeKey key;
    int depth = 0;

    bool operator==(const DepthKey& other) const = default;
};

struct DepthKeyHash {
    std::size_t operator()(const DepthKey& key) const;
};

// Per-(node, depth) sampling record: visit counts and cumulative returns per
// action plus the finished estimate.
struct NodeStats {
    std::vector<std::int64_t> visits;
    std::vector<double> returns;
    double estimate = 0.0;
    std::int64_t order = 0;  // insertion order, for stable dumps
};

struct AmsStats {
    std::unordered_map<DepthKey, NodeStats, DepthKeyHash> nodes;
    std::int64_t total_samples = 0;
    std::int64_t next_order = 0;
};

// UCB arm choice: argmax of mean return + sqrt(2 ln n / visits), ties to the
// lowest action index.  Every action must have been visited at least once.
int ucb_select(const NodeStats& stats, std::int64_t n);

// Draws a successor state from the prior-weighted transition distribution and
// returns the updated belief node; zero-probability states cannot be drawn.
BeliefNode sample_successor(const ModelFamily& family, const BeliefNode& node, int action,
                            std::mt19937_64& rng);

// Recursive UCB-guided estimator of the maximal decision probability from
// node at recursion depth `depth`.  Returns 0 past the cost bound or horizon
// (and on unsafe nodes in reach-avoid mode), 1 on decided nodes; otherwise
// spends samples_at(depth) rollouts across actions and returns their mean
// return.  stats accumulates per-node records and serves as the memo table.
double cb_ams(const ModelFamily& family, const DecisionSpec& spec, const BudgetSpec& budget,
              const AmsConfig& config, const BeliefNode& node, int depth, AmsStats& stats,
              std::mt19937_64& rng);

// Convenience wrapper: fresh stats + generator seeded from config.seed,
// estimate evaluated at the family's initial node, depth 0.
double cb_ams_root(const ModelFamily& family, const DecisionSpec& spec, const BudgetSpec& budget,
                   const AmsConfig& config, AmsStats& stats);

// Greedy policy over the sampling record: per (node, depth < horizon) the
// action with the best empirical mean return, ties to the lowest index.
Policy ams_policy(const AmsStats& stats, const ModelFamily& family, const DecisionSpec& spec,
                  const BudgetSpec& budget, const AmsConfig& config);

// Structured text dump of per-node visit counts and estimates, in first-visit
// order; for debugging and diagnostics.
std::string dump_stats(const AmsStats& stats, const ModelFamily& family);

}  // namespace mdpsift
