#include "mdpsift/value.hpp"

#include <algorithm>
#include <cstring>

namespace mdpsift {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline void fnv_mix(std::uint64_t& h, std::uint64_t value) {
    for (int byte = 0; byte < 8; ++byte) {
        h ^= (value >> (byte * 8)) & 0xffULL;
        h *= kFnvPrime;
    }
}

inline void fnv_mix_double(std::uint64_t& h, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof bits);
    fnv_mix(h, bits);
}

// Best action at `node` when k steps remain: argmax over present action rows
// of the expected successor value at k-1, ties to the lowest index.  Returns
// nullopt when no action row is present.
std::optional<int> best_action(const UnfoldedMdp& mdp, const ValueTable& table, int node, int k) {
    std::optional<int> best;
    double best_value = 0.0;
    for (int a = 0; a < mdp.num_actions; ++a) {
        const auto& row = mdp.edges[static_cast<std::size_t>(node)][static_cast<std::size_t>(a)];
        if (row.empty()) continue;
        double v = 0.0;
        for (const Edge& e : row) v += e.prob * table.at(e.target, k - 1);
        if (!best || v > best_value) {
            best = a;
            best_value = v;
        }
    }
    return best;
}

}  // namespace

ValueTable value_iterate(const UnfoldedMdp& mdp, const BudgetSpec& budget) {
    ValueTable table;
    table.horizon = budget.horizon;
    const std::size_t n = static_cast<std::size_t>(mdp.node_count());
    table.values.assign(static_cast<std::size_t>(budget.horizon) + 1, std::vector<double>(n, 0.0));

    for (std::size_t q = 0; q < n; ++q)
        if (mdp.kind[q] == NodeKind::goal)
            for (int k = 0; k <= budget.horizon; ++k)
                table.values[static_cast<std::size_t>(k)][q] = 1.0;

    for (int k = 1; k <= budget.horizon; ++k) {
        auto& layer = table.values[static_cast<std::size_t>(k)];
        const auto& prev = table.values[static_cast<std::size_t>(k) - 1];
        for (std::size_t q = 0; q < n; ++q) {
            if (mdp.kind[q] != NodeKind::interior) continue;
            double best = 0.0;
            for (int a = 0; a < mdp.num_actions; ++a) {
                const auto& row = mdp.edges[q][static_cast<std::size_t>(a)];
                if (row.empty()) continue;
                double v = 0.0;
                for (const Edge& e : row) v += e.prob * prev[static_cast<std::size_t>(e.target)];
                best = std::max(best, v);
            }
            layer[q] = best;
        }
    }
    return table;
}

std::size_t StepNodeKeyHash::operator()(const StepNodeKey& key) const {
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, static_cast<std::uint64_t>(key.step));
    fnv_mix(h, NodeKeyHash{}(key.key));
    return static_cast<std::size_t>(h);
}

std::optional<int> Policy::action_at(int step, const NodeKey& key) const {
    const auto it = actions.find(StepNodeKey{step, key});
    if (it == actions.end()) return std::nullopt;
    return it->second;
}

Policy extract_policy(const UnfoldedMdp& mdp, const ValueTable& table, const BudgetSpec& budget) {
    Policy policy;
    policy.meta.kind = PolicyKind::exact;
    policy.meta.horizon = budget.horizon;
    policy.meta.cost_bound = budget.cost_bound;

    // Nodes reachable at each step; a deduplicated node can recur at several
    // steps and gets one action per step from its remaining horizon.
    std::vector<char> reachable(static_cast<std::size_t>(mdp.node_count()), 0);
    std::vector<int> current;
    if (mdp.kind[static_cast<std::size_t>(mdp.root)] == NodeKind::interior) current.push_back(mdp.root);

    for (int step = 0; step < budget.horizon && !current.empty(); ++step) {
        const int k = budget.horizon - step;
        std::vector<int> next;
        std::fill(reachable.begin(), reachable.end(), 0);
        for (int id : current) {
            const auto choice = best_action(mdp, table, id, k);
            if (!choice) continue;  // every action over budget: executor reports the block
            policy.actions.emplace(StepNodeKey{step, mdp.keys[static_cast<std::size_t>(id)]}, *choice);
            for (int a = 0; a < mdp.num_actions; ++a)
                for (const Edge& e : mdp.edges[static_cast<std::size_t>(id)][static_cast<std::size_t>(a)]) {
                    if (reachable[static_cast<std::size_t>(e.target)]) continue;
                    if (mdp.kind[static_cast<std::size_t>(e.target)] != NodeKind::interior) continue;
                    reachable[static_cast<std::size_t>(e.target)] = 1;
                    next.push_back(e.target);
                }
        }
        current = std::move(next);
    }
    return policy;
}

SolveResult solve_exact(const ModelFamily& family, const DecisionSpec& spec,
                        const BudgetSpec& budget, const UnfoldLimits& limits) {
    SolveResult result;
    result.mdp = unfold(family, spec, budget, limits);
    result.table = value_iterate(result.mdp, budget);
    result.policy = extract_policy(result.mdp, result.table, budget);
    result.probability = result.table.at(result.mdp.root, budget.horizon);
    result.policy.meta.root_probability = result.probability;
    result.policy.meta.thresholds = spec.thresholds;
    result.policy.meta.safe_states = spec.safe_states;
    result.policy.meta.family_hash = family_hash(family);
    return result;
}

std::uint64_t family_hash(const ModelFamily& family) {
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, static_cast<std::uint64_t>(family.num_states));
    fnv_mix(h, static_cast<std::uint64_t>(family.num_actions));
    fnv_mix(h, static_cast<std::uint64_t>(family.num_models));
    fnv_mix(h, static_cast<std::uint64_t>(family.initial_state));
    for (const auto& tensor : family.transitions)
        for (const auto& per_state : tensor)
            for (const auto& row : per_state)
                for (double p : row) fnv_mix_double(h, p);
    for (const auto& row : family.costs)
        for (std::int64_t c : row) fnv_mix(h, static_cast<std::uint64_t>(c));
    for (double p : family.initial_prior) fnv_mix_double(h, p);
    return h;
}

}  // namespace mdpsift
