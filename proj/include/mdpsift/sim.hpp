#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mdpsift/model.hpp"
#include "mdpsift/value.hpp"

namespace mdpsift {

enum class Outcome { decided, horizon_expired, cost_exceeded_blocked, unsafe_entered };

struct TraceStep {
    int state = 0;
    std::vector<double> belief;
    std::int64_t cost = 0;
    int action = 0;
    int next_state = 0;
    bool fallback = false;  // action came from the executor fallback, not the policy
};

struct EpisodeTrace {
    int true_model = 0;
    std::vector<TraceStep> steps;
    Outcome outcome = Outcome::horizon_expired;
    std::optional<int> decided_model;
    bool decided_correctly = false;
    std::int64_t final_cost = 0;
    int final_state = 0;
    std::vector<double> final_belief;
};

// Runs the policy against the true model's dynamics from the initial node.
// Arrival order at each node: unsafe check (reach-avoid only), decision
// check, horizon check, then action selection with fallback to the lowest
// affordable action when the policy has no entry; no affordable action ends
// the episode as cost_exceeded_blocked.
EpisodeTrace simulate_episode(const ModelFamily& family, const DecisionSpec& spec,
                              const BudgetSpec& budget, const Policy& policy, int true_model,
                              std::mt19937_64& rng);

struct ClassStats {
    std::int64_t decided = 0;
    std::int64_t correct = 0;

    double correct_rate() const { return decided == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(decided); }
};

struct EvalReport {
    std::int64_t runs = 0;
    std::int64_t decided = 0;
    std::int64_t horizon_expired = 0;
    std::int64_t cost_blocked = 0;
    std::int64_t unsafe_entered = 0;
    std::vector<ClassStats> per_class;
    std::int64_t cost_sum = 0;
    std::int64_t max_cost = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t family_digest = 0;

    double success_rate() const { return runs == 0 ? 0.0 : static_cast<double>(decided) / static_cast<double>(runs); }
    double mean_cost() const { return runs == 0 ? 0.0 : static_cast<double>(cost_sum) / static_cast<double>(runs); }
    // Normal-approximation 95% half-width for the success rate.
    double ci95() const;
};

// Simulates `runs` episodes with the true model drawn from the family prior
// (or forced via true_model), aggregating counts.  Episode e uses a generator
// seeded from (master_seed, e), so reports are identical for any worker
// count; workers <= 0 reads MDPSIFT_WORKERS / hardware concurrency.
EvalReport evaluate_policy(const ModelFamily& family, const DecisionSpec& spec,
                           const BudgetSpec& budget, const Policy& policy, std::int64_t runs,
                           std::uint64_t master_seed, std::optional<int> true_model = std::nullopt,
                           int workers = 0);

// Same aggregation with the traces kept; intended for small runs.
EvalReport evaluate_policy_traced(const ModelFamily& family, const DecisionSpec& spec,
                                  const BudgetSpec& budget, const Policy& policy,
                                  std::int64_t runs, std::uint64_t master_seed,
                                  std::optional<int> true_model, std::int64_t trace_limit,
                                  std::vector<EpisodeTrace>& traces_out, int workers = 0);

int default_worker_count();

}  // namespace mdpsift
