#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mdpsift/unfold.hpp"

namespace mdpsift {

// Dense table of maximal goal-reaching probabilities: value(n, k) is the best
// probability of reaching a goal node from node n within k more steps of the
// unfolded MDP.  Goal rows are 1 everywhere, unsafe rows 0 everywhere,
// interior rows 0 at k=0 and non-decreasing in k.
struct ValueTable {
    int horizon = 0;
    std::vector<std::vector<double>> values;  // [k][node]

    double at(int node, int k) const { return values[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)]; }
};

ValueTable value_iterate(const UnfoldedMdp& mdp, const BudgetSpec& budget);

struct StepNodeKey {
    int step = 0;
    NodeKey key;

    bool operator==(const StepNodeKey& other) const = default;
};

struct StepNodeKeyHash {
    std::size_t operator()(const StepNodeKey& key) const;
};

enum class PolicyKind { exact, sampled };

struct PolicyMeta {
    PolicyKind kind = PolicyKind::exact;
    double root_probability = 0.0;
    int horizon = 0;
    std::int64_t cost_bound = 0;
    std::vector<double> thresholds;
    std::optional<std::set<int>> safe_states;
    std::int64_t samples_per_stage = 0;  // sampled policies only
    std::uint64_t seed = 0;              // sampled policies only
    std::uint64_t family_hash = 0;
};

// Time-indexed action choices: one entry per (step i, node) with the node
// reachable at step i and undecided.  Nodes a policy never covered are
// handled by the executor's fallback.
struct Policy {
    PolicyMeta meta;
    std::unordered_map<StepNodeKey, int, StepNodeKeyHash> actions;

    std::optional<int> action_at(int step, const NodeKey& key) const;
};

Policy extract_policy(const UnfoldedMdp& mdp, const ValueTable& table, const BudgetSpec& budget);

struct SolveResult {
    double probability = 0.0;
    Policy policy;
    UnfoldedMdp mdp;
    ValueTable table;
};

// unfold + value_iterate + extract_policy; the root probability is the
// maximal probability of reaching a decision within the horizon and cost
// bound (staying safe throughout when spec.safe_states is set).
SolveResult solve_exact(const ModelFamily& family, const DecisionSpec& spec,
                        const BudgetSpec& budget, const UnfoldLimits& limits = {});

// Stable digest of the family tensor used to pair policies with the model
// they were computed for.
std::uint64_t family_hash(const ModelFamily& family);

}  // namespace mdpsift
