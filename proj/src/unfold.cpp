#include "mdpsift/unfold.hpp"

#include <utility>

namespace mdpsift {

namespace {

NodeKind classify(const DecisionSpec& spec, const BeliefNode& node, bool reach_avoid) {
    // Safety is checked before the decision so an unsafe arrival can never
    // count as a successful classification.
    if (reach_avoid && !is_safe(spec, node)) return NodeKind::unsafe_region;
    if (decide(spec, node)) return NodeKind::goal;
    return NodeKind::interior;
}

}  // namespace

UnfoldedMdp unfold(const ModelFamily& family, const DecisionSpec& spec, const BudgetSpec& budget,
                   const UnfoldLimits& limits) {
    require_valid(family, spec, budget);

    UnfoldedMdp mdp;
    mdp.num_actions = family.num_actions;
    mdp.reach_avoid = spec.safe_states.has_value();

    auto add_node = [&mdp, &spec](BeliefNode node, int depth) {
        const NodeKey key = make_key(node);
        const auto it = mdp.index.find(key);
        if (it != mdp.index.end()) return std::pair<int, bool>{it->second, false};
        const int id = mdp.node_count();
        mdp.nodes.push_back(std::move(node));
        mdp.keys.push_back(key);
        mdp.kind.push_back(classify(spec, mdp.nodes.back(), mdp.reach_avoid));
        mdp.depth_first_seen.push_back(depth);
        mdp.expanded.push_back(0);
        mdp.edges.emplace_back(static_cast<std::size_t>(mdp.num_actions));
        mdp.index.emplace(key, id);
        return std::pair<int, bool>{id, true};
    };

    BeliefNode root;
    root.state = family.initial_state;
    root.belief = family.initial_prior;
    root.cost = 0;
    add_node(std::move(root), 0);
    mdp.root = 0;

    std::vector<int> current;
    if (mdp.kind[0] == NodeKind::interior) current.push_back(0);

    for (int layer = 0; layer < budget.horizon && !current.empty(); ++layer) {
        std::vector<int> next;
        for (int id : current) {
            const BeliefNode node = mdp.nodes[static_cast<std::size_t>(id)];  // copy: push_back below may reallocate
            for (int a = 0; a < family.num_actions; ++a) {
                const std::int64_t next_cost = node.cost + step_cost(family, node.state, a);
                if (next_cost > budget.cost_bound) continue;  // whole action unaffordable
                std::vector<Edge> row;
                for (int s2 = 0; s2 < family.num_states; ++s2) {
                    const double p = transition_prob(family, node, a, s2);
                    if (p == 0.0) continue;  // unreachable successor
                    auto posterior = belief_update(family, node, a, s2);
                    BeliefNode succ;
                    succ.state = s2;
                    succ.belief = std::move(*posterior);
                    succ.cost = next_cost;
                    const auto [succ_id, created] = add_node(std::move(succ), layer + 1);
                    if (created && mdp.kind[static_cast<std::size_t>(succ_id)] == NodeKind::interior)
                        next.push_back(succ_id);
                    row.push_back(Edge{succ_id, p});
                }
                mdp.edges[static_cast<std::size_t>(id)][static_cast<std::size_t>(a)] = std::move(row);
            }
            mdp.expanded[static_cast<std::size_t>(id)] = 1;
            if (mdp.node_count() > limits.max_nodes)
                throw resource_limit_error(
                    "unfold: node budget of " + std::to_string(limits.max_nodes) +
                    " exceeded at layer " + std::to_string(layer + 1) +
                    "; use the sampling solver (--method ams) for this configuration");
        }
        current = std::move(next);
    }

    return mdp;
}

}  // namespace mdpsift
