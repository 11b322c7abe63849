#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mdpsift/belief.hpp"
#include "mdpsift/model.hpp"

namespace mdpsift {

// Raised when the unfolding outgrows its node budget; the CLI maps it to a
// dedicated exit code and points at the sampling solver.
class resource_limit_error : public std::runtime_error {
  public:
    explicit resource_limit_error(const std::string& what) : std::runtime_error(what) {}
};

enum class NodeKind { interior, goal, unsafe_region };

struct Edge {
    int target = 0;
    double prob = 0.0;
};

struct UnfoldLimits {
    std::int64_t max_nodes = 5000000;
};

// Finite layered belief MDP.  Nodes are deduplicated by NodeKey; edges[n][a]
// is the successor distribution of action a at node n, empty when the action
// was pruned for cost overrun or the node is terminal / never expanded.
// Rows that are present always sum to 1.
struct UnfoldedMdp {
    std::vector<BeliefNode> nodes;
    std::vector<NodeKey> keys;
    std::vector<NodeKind> kind;
    std::vector<int> depth_first_seen;
    std::vector<char> expanded;
    std::vector<std::vector<std::vector<Edge>>> edges;
    std::unordered_map<NodeKey, int, NodeKeyHash> index;
    int root = 0;
    int num_actions = 0;
    bool reach_avoid = false;

    int node_count() const { return static_cast<int>(nodes.size()); }
};

// Breadth-first cost-bounded expansion of the belief MDP from (initial state,
// prior, cost 0), at most budget.horizon layers.  Goal nodes (decision fires)
// are terminal; when spec.safe_states is set, unsafe successors are recorded
// but never expanded.  Actions whose cost would push the accumulated cost
// past budget.cost_bound are dropped whole.
UnfoldedMdp unfold(const ModelFamily& family, const DecisionSpec& spec, const BudgetSpec& budget,
                   const UnfoldLimits& limits = {});

}  // namespace mdpsift
