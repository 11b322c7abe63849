#include "mdpsift/ams.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mdpsift/rng.hpp"

namespace mdpsift {

std::int64_t AmsConfig::samples_at(int depth) const {
    if (samples_per_stage.empty())
        throw std::invalid_argument("AmsConfig: samples_per_stage is empty");
    if (samples_per_stage.size() == 1) return samples_per_stage.front();
    if (depth < 0 || depth >= static_cast<int>(samples_per_stage.size()))
        throw std::invalid_argument("AmsConfig: no sample count for depth " + std::to_string(depth));
    return samples_per_stage[static_cast<std::size_t>(depth)];
}

std::size_t DepthKeyHash::operator()(const DepthKey& key) const {
    std::uint64_t h = NodeKeyHash{}(key.key);
    h ^= static_cast<std::uint64_t>(key.depth) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
}

int ucb_select(const NodeStats& stats, std::int64_t n) {
    const double log_n = std::log(static_cast<double>(n));
    int best = 0;
    double best_score = -1.0;
    for (int a = 0; a < static_cast<int>(stats.visits.size()); ++a) {
        const double visits = static_cast<double>(stats.visits[static_cast<std::size_t>(a)]);
        if (visits < 1.0)
            throw std::logic_error("ucb_select: action without an initialization sample");
        const double score = stats.returns[static_cast<std::size_t>(a)] / visits +
                             std::sqrt(2.0 * log_n / visits);
        if (score > best_score) {
            best = a;
            best_score = score;
        }
    }
    return best;
}

BeliefNode sample_successor(const ModelFamily& family, const BeliefNode& node, int action,
                            std::mt19937_64& rng) {
    std::vector<double> probs(static_cast<std::size_t>(family.num_states));
    for (int s2 = 0; s2 < family.num_states; ++s2)
        probs[static_cast<std::size_t>(s2)] = transition_prob(family, node, action, s2);
    const int next_state = sample_index(probs, uniform01(rng));
    auto posterior = belief_update(family, node, action, next_state);
    BeliefNode succ;
    succ.state = next_state;
    succ.belief = std::move(*posterior);
    succ.cost = node.cost + step_cost(family, node.state, action);
    return succ;
}

namespace {

struct AmsRun {
    const ModelFamily& family;
    const DecisionSpec& spec;
    const BudgetSpec& budget;
    const AmsConfig& config;
    AmsStats& stats;
    std::mt19937_64& rng;

    double evaluate(const BeliefNode& node, int depth) {
        if (node.cost > budget.cost_bound || depth > budget.horizon) return 0.0;
        if (config.reach_avoid && !is_safe(spec, node)) return 0.0;
        if (decide(spec, node)) return 1.0;

        const std::int64_t budget_n = config.samples_at(depth);
        if (budget_n < family.num_actions)
            throw std::invalid_argument(
                "cb_ams: samples per stage (" + std::to_string(budget_n) +
                ") must be at least the action count (" + std::to_string(family.num_actions) + ")");

        const DepthKey key{make_key(node), depth};
        if (config.memoize) {
            const auto it = stats.nodes.find(key);
            if (it != stats.nodes.end()) return it->second.estimate;
        }

        NodeStats record;
        record.visits.assign(static_cast<std::size_t>(family.num_actions), 0);
        record.returns.assign(static_cast<std::size_t>(family.num_actions), 0.0);
        record.order = stats.next_order++;

        // One rollout per action, then UCB-guided allocation of the rest.
        for (int a = 0; a < family.num_actions; ++a) {
            const BeliefNode succ = sample_successor(family, node, a, rng);
            ++stats.total_samples;
            record.returns[static_cast<std::size_t>(a)] += evaluate(succ, depth + 1);
            record.visits[static_cast<std::size_t>(a)] = 1;
        }
        for (std::int64_t n = family.num_actions; n < budget_n; ++n) {
            const int a = ucb_select(record, n);
            const BeliefNode succ = sample_successor(family, node, a, rng);
            ++stats.total_samples;
            record.returns[static_cast<std::size_t>(a)] += evaluate(succ, depth + 1);
            ++record.visits[static_cast<std::size_t>(a)];
        }

        double total = 0.0;
        for (double q : record.returns) total += q;
        record.estimate = total / static_cast<double>(budget_n);
        const double estimate = record.estimate;

        // Without memoization a revisited node is re-evaluated; keep the
        // latest record.
        stats.nodes[key] = std::move(record);
        return estimate;
    }
};

}  // namespace

double cb_ams(const ModelFamily& family, const DecisionSpec& spec, const BudgetSpec& budget,
              const AmsConfig& config, const BeliefNode& node, int depth, AmsStats& stats,
              std::mt19937_64& rng) {
    AmsRun run{family, spec, budget, config, stats, rng};
    return run.evaluate(node, depth);
}

double cb_ams_root(const ModelFamily& family, const DecisionSpec& spec, const BudgetSpec& budget,
                   const AmsConfig& config, AmsStats& stats) {
    require_valid(family, spec, budget);
    BeliefNode root;
    root.state = family.initial_state;
    root.belief = family.initial_prior;
    root.cost = 0;
    std::mt19937_64 rng(derive_seed(config.seed, 0));
    return cb_ams(family, spec, budget, config, root, 0, stats, rng);
}

Policy ams_policy(const AmsStats& stats, const ModelFamily& family, const DecisionSpec& spec,
                  const BudgetSpec& budget, const AmsConfig& config) {
    Policy policy;
    policy.meta.kind = PolicyKind::sampled;
    policy.meta.horizon = budget.horizon;
    policy.meta.cost_bound = budget.cost_bound;
    policy.meta.thresholds = spec.thresholds;
    policy.meta.safe_states = config.reach_avoid ? spec.safe_states : std::nullopt;
    policy.meta.samples_per_stage = config.samples_at(0);
    policy.meta.seed = config.seed;
    policy.meta.family_hash = family_hash(family);

    for (const auto& [key, record] : stats.nodes) {
        if (key.depth >= budget.horizon) continue;  // no action is taken at the final step
        int best = 0;
        double best_mean = -1.0;
        for (int a = 0; a < static_cast<int>(record.visits.size()); ++a) {
            const std::int64_t visits = record.visits[static_cast<std::size_t>(a)];
            const double mean =
                visits == 0 ? 0.0 : record.returns[static_cast<std::size_t>(a)] / static_cast<double>(visits);
            if (mean > best_mean) {
                best = a;
                best_mean = mean;
            }
        }
        policy.actions.emplace(StepNodeKey{key.depth, key.key}, best);
    }
    return policy;
}

std::string dump_stats(const AmsStats& stats, const ModelFamily& family) {
    std::vector<const std::pair<const DepthKey, NodeStats>*> entries;
    entries.reserve(stats.nodes.size());
    for (const auto& entry : stats.nodes) entries.push_back(&entry);
    std::sort(entries.begin(), entries.end(),
              [](const auto* a, const auto* b) { return a->second.order < b->second.order; });

    std::ostringstream os;
    os << "nodes " << stats.nodes.size() << " total_samples " << stats.total_samples << "\n";
    for (const auto* entry : entries) {
        const DepthKey& key = entry->first;
        const NodeStats& record = entry->second;
        os << "depth " << key.depth << " state " << family.state_name(key.key.state) << " cost "
           << key.key.cost << " estimate " << record.estimate << " visits";
        for (std::int64_t v : record.visits) os << " " << v;
        os << " returns";
        for (double q : record.returns) os << " " << q;
        os << "\n";
    }
    return os.str();
}

}  // namespace mdpsift
