#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mdpsift/model.hpp"

namespace mdpsift {

// Prior-weighted probability of observing next_state after taking action in
// node: sum_i b(i) * T_i(s, a, next_state).  Sums to 1 over next_state.
double transition_prob(const ModelFamily& family, const BeliefNode& node, int action,
                       int next_state);

// Bayes posterior over models after observing next_state; nullopt when the
// prior-weighted probability of next_state is exactly zero (the successor is
// unreachable, not an error).
std::optional<std::vector<double>> belief_update(const ModelFamily& family, const BeliefNode& node,
                                                 int action, int next_state);

// Index of the unique model with belief(i) >= thresholds(i), or nullopt.  At
// most one model can qualify because every threshold exceeds 0.5.
std::optional<int> decide(const DecisionSpec& spec, const BeliefNode& node);

// True when no safe region is configured or the observed state lies inside it.
bool is_safe(const DecisionSpec& spec, const BeliefNode& node);

// Dedup / memoization key: observed state, accumulated cost, and the belief
// quantized to 1e-9 per component so that revisits compare deterministically.
struct NodeKey {
    int state = 0;
    std::int64_t cost = 0;
    std::vector<std::int64_t> quantized;

    bool operator==(const NodeKey& other) const = default;
};

NodeKey make_key(const BeliefNode& node);

struct NodeKeyHash {
    std::size_t operator()(const NodeKey& key) const;
};

}  // namespace mdpsift
