#include "mdpsift/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "mdpsift/belief.hpp"
#include "mdpsift/rng.hpp"

namespace mdpsift {

double EvalReport::ci95() const {
    if (runs == 0) return 0.0;
    const double p = success_rate();
    return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(runs));
}

EpisodeTrace simulate_episode(const ModelFamily& family, const DecisionSpec& spec,
                              const BudgetSpec& budget, const Policy& policy, int true_model,
                              std::mt19937_64& rng) {
    if (true_model < 0 || true_model >= family.num_models)
        throw std::out_of_range("simulate_episode: true model index out of range");
    const bool reach_avoid = spec.safe_states.has_value();

    EpisodeTrace trace;
    trace.true_model = true_model;

    BeliefNode node;
    node.state = family.initial_state;
    node.belief = family.initial_prior;
    node.cost = 0;

    for (int step = 0;; ++step) {
        if (reach_avoid && !is_safe(spec, node)) {
            trace.outcome = Outcome::unsafe_entered;
            break;
        }
        if (const auto d = decide(spec, node)) {
            trace.outcome = Outcome::decided;
            trace.decided_model = *d;
            trace.decided_correctly = *d == true_model;
            break;
        }
        if (step == budget.horizon) {
            trace.outcome = Outcome::horizon_expired;
            break;
        }

        // Policy action if affordable, else the lowest affordable action.
        const auto recommended = policy.action_at(step, make_key(node));
        std::optional<int> action;
        if (recommended && node.cost + step_cost(family, node.state, *recommended) <= budget.cost_bound)
            action = *recommended;
        else
            for (int a = 0; a < family.num_actions; ++a)
                if (node.cost + step_cost(family, node.state, a) <= budget.cost_bound) {
                    action = a;
                    break;
                }
        if (!action) {
            trace.outcome = Outcome::cost_exceeded_blocked;
            break;
        }

        const auto& row = family.transitions[static_cast<std::size_t>(true_model)]
                                            [static_cast<std::size_t>(node.state)]
                                            [static_cast<std::size_t>(*action)];
        const int next_state = sample_index(row, uniform01(rng));
        auto posterior = belief_update(family, node, *action, next_state);
        if (!posterior)
            throw std::runtime_error(
                "simulate_episode: observed transition has probability zero under the belief "
                "(true model outside the prior support)");
        const std::int64_t next_cost = node.cost + step_cost(family, node.state, *action);

        TraceStep record;
        record.state = node.state;
        record.belief = node.belief;
        record.cost = node.cost;
        record.action = *action;
        record.next_state = next_state;
        record.fallback = !(recommended && *recommended == *action);
        trace.steps.push_back(std::move(record));

        node.state = next_state;
        node.belief = std::move(*posterior);
        node.cost = next_cost;
    }

    trace.final_cost = node.cost;
    trace.final_state = node.state;
    trace.final_belief = node.belief;
    return trace;
}

int default_worker_count() {
    if (const char* env = std::getenv("MDPSIFT_WORKERS")) {
        const int parsed = std::atoi(env);
        if (parsed >= 1) return std::min(parsed, 256);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 64u));
}

namespace {

struct Partial {
    std::int64_t decided = 0;
    std::int64_t horizon_expired = 0;
    std::int64_t cost_blocked = 0;
    std::int64_t unsafe_entered = 0;
    std::vector<ClassStats> per_class;
    std::int64_t cost_sum = 0;
    std::int64_t max_cost = 0;
};

void accumulate(Partial& p, const EpisodeTrace& trace) {
    switch (trace.outcome) {
        case Outcome::decided: {
            ++p.decided;
            auto& cls = p.per_class[static_cast<std::size_t>(*trace.decided_model)];
            ++cls.decided;
            if (trace.decided_correctly) ++cls.correct;
            break;
        }
        case Outcome::horizon_expired: ++p.horizon_expired; break;
        case Outcome::cost_exceeded_blocked: ++p.cost_blocked; break;
        case Outcome::unsafe_entered: ++p.unsafe_entered; break;
    }
    p.cost_sum += trace.final_cost;
    p.max_cost = std::max(p.max_cost, trace.final_cost);
}

EvalReport run_episodes(const ModelFamily& family, const DecisionSpec& spec,
                        const BudgetSpec& budget, const Policy& policy, std::int64_t runs,
                        std::uint64_t master_seed, std::optional<int> true_model, int workers,
                        std::int64_t trace_limit, std::vector<EpisodeTrace>* traces_out) {
    require_valid(family, spec, budget);
    if (runs < 1) throw std::invalid_argument("evaluate_policy: runs must be at least 1");
    if (true_model && (*true_model < 0 || *true_model >= family.num_models))
        throw std::out_of_range("evaluate_policy: true model index out of range");

    if (workers <= 0) workers = default_worker_count();
    workers = static_cast<int>(std::min<std::int64_t>(workers, runs));

    const std::int64_t kept = traces_out ? std::min(trace_limit, runs) : 0;
    if (traces_out) traces_out->assign(static_cast<std::size_t>(kept), EpisodeTrace{});

    std::vector<Partial> partials(static_cast<std::size_t>(workers));
    for (auto& p : partials) p.per_class.assign(static_cast<std::size_t>(family.num_models), ClassStats{});

    auto worker_body = [&](int w, std::int64_t begin, std::int64_t end) {
        Partial& p = partials[static_cast<std::size_t>(w)];
        for (std::int64_t e = begin; e < end; ++e) {
            std::mt19937_64 rng(derive_seed(master_seed, static_cast<std::uint64_t>(e)));
            int model;
            if (true_model) {
                model = *true_model;
            } else {
                // The first draw of the episode stream picks the true model.
                model = sample_index(family.initial_prior, uniform01(rng));
            }
            EpisodeTrace trace = simulate_episode(family, spec, budget, policy, model, rng);
            accumulate(p, trace);
            if (e < kept) (*traces_out)[static_cast<std::size_t>(e)] = std::move(trace);
        }
    };

    if (workers == 1) {
        worker_body(0, 0, runs);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        const std::int64_t chunk = (runs + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::int64_t begin = static_cast<std::int64_t>(w) * chunk;
            const std::int64_t end = std::min(runs, begin + chunk);
            if (begin >= end) break;
            threads.emplace_back(worker_body, w, begin, end);
        }
        for (auto& t : threads) t.join();
    }

    EvalReport report;
    report.runs = runs;
    report.master_seed = master_seed;
    report.family_digest = family_hash(family);
    report.per_class.assign(static_cast<std::size_t>(family.num_models), ClassStats{});
    for (const Partial& p : partials) {
        report.decided += p.decided;
        report.horizon_expired += p.horizon_expired;
        report.cost_blocked += p.cost_blocked;
        report.unsafe_entered += p.unsafe_entered;
        report.cost_sum += p.cost_sum;
        report.max_cost = std::max(report.max_cost, p.max_cost);
        for (std::size_t i = 0; i < report.per_class.size(); ++i) {
            report.per_class[i].decided += p.per_class[i].decided;
            report.per_class[i].correct += p.per_class[i].correct;
        }
    }
    return report;
}

}  // namespace

EvalReport evaluate_policy(const ModelFamily& family, const DecisionSpec& spec,
                           const BudgetSpec& budget, const Policy& policy, std::int64_t runs,
                           std::uint64_t master_seed, std::optional<int> true_model, int workers) {
    return run_episodes(family, spec, budget, policy, runs, master_seed, true_model, workers, 0,
                        nullptr);
}

EvalReport evaluate_policy_traced(const ModelFamily& family, const DecisionSpec& spec,
                                  const BudgetSpec& budget, const Policy& policy,
                                  std::int64_t runs, std::uint64_t master_seed,
                                  std::optional<int> true_model, std::int64_t trace_limit,
                                  std::vector<EpisodeTrace>& traces_out, int workers) {
    return run_episodes(family, spec, budget, policy, runs, master_seed, true_model, workers,
                        trace_limit, &traces_out);
}

}  // namespace mdpsift
