#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mdpsift {

// Optional human-readable names for reports and the advisory REPL.
struct LabelSet {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::string> models;
};

// A family of L candidate MDPs sharing the state space, action space, initial
// state and cost function.  transitions[i][s][a][s2] is the probability that
// model i moves from s to s2 under action a; costs[s][a] is the integer cost
// charged for taking a in s regardless of the model.
struct ModelFamily {
    int num_states = 0;
    int num_actions = 0;
    int num_models = 0;
    int initial_state = 0;
    std::vector<std::vector<std::vector<std::vector<double>>>> transitions;
    std::vector<std::vector<std::int64_t>> costs;
    std::vector<double> initial_prior;
    LabelSet labels;

    std::string state_name(int s) const;
    std::string action_name(int a) const;
    std::string model_name(int i) const;
};

// State of the induced belief MDP: observed state, distribution over the L
// candidate models, and accumulated cost.
struct BeliefNode {
    int state = 0;
    std::vector<double> belief;
    std::int64_t cost = 0;
};

// Per-model confidence thresholds (each in (0.5, 1], which makes the decision
// unique) plus an optional safe region; when safe_states is set the objective
// becomes reach-the-decision-while-staying-safe.
struct DecisionSpec {
    std::vector<double> thresholds;
    std::optional<std::set<int>> safe_states;
};

struct BudgetSpec {
    int horizon = 0;
    std::int64_t cost_bound = 0;
};

// One violated invariant; indices are -1 where not applicable.
struct Violation {
    std::string what;
    int model = -1;
    int state = -1;
    int action = -1;
};

std::vector<Violation> validate_family(const ModelFamily& family);
std::vector<Violation> validate_decision(const DecisionSpec& spec, const ModelFamily& family);
std::vector<Violation> validate_budget(const BudgetSpec& budget);

// Throws std::invalid_argument listing the first violations when any check
// above fails; solvers call this on entry.
void require_valid(const ModelFamily& family, const DecisionSpec& spec, const BudgetSpec& budget);

std::int64_t step_cost(const ModelFamily& family, int state, int action);

std::string format_violations(const std::vector<Violation>& violations);

}  // namespace mdpsift
