#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mdpsift/belief.hpp"
#include "mdpsift/builtin.hpp"
#include "mdpsift/io.hpp"
#include "mdpsift/sim.hpp"
#include "mdpsift/value.hpp"

using namespace mdpsift;

namespace {

BeliefNode root_node(const ModelFamily& f) {
    BeliefNode n;
    n.state = f.initial_state;
    n.belief = f.initial_prior;
    n.cost = 0;
    return n;
}

// Two indistinguishable single-state models with one unit-cost action: the
// belief never moves, so every episode ends on a budget or horizon limit.
ModelFamily stuck_family() {
    ModelFamily f;
    f.num_states = 1;
    f.num_actions = 1;
    f.num_models = 2;
    f.initial_state = 0;
    f.initial_prior = {0.5, 0.5};
    f.transitions = {{{{1.0}}}, {{{1.0}}}};
    f.costs = {{1}};
    return f;
}

// Both models walk deterministically into state 1.
ModelFamily one_way_family() {
    ModelFamily f;
    f.num_states = 2;
    f.num_actions = 1;
    f.num_models = 2;
    f.initial_state = 0;
    f.initial_prior = {0.5, 0.5};
    f.transitions = {{{{0.0, 1.0}}, {{0.0, 1.0}}}, {{{0.0, 1.0}}, {{0.0, 1.0}}}};
    f.costs = {{0}, {0}};
    return f;
}

void check_replay(const ModelFamily& family, const DecisionSpec& spec, const BudgetSpec& budget,
                  const EpisodeTrace& trace) {
    BeliefNode node = root_node(family);
    for (const TraceStep& step : trace.steps) {
        CHECK(step.state == node.state);
        CHECK(step.belief == node.belief);
        CHECK(step.cost == node.cost);
        const auto posterior = belief_update(family, node, step.action, step.next_state);
        REQUIRE(posterior.has_value());
        node.cost += step_cost(family, node.state, step.action);
        node.state = step.next_state;
        node.belief = *posterior;
    }
    CHECK(trace.final_state == node.state);
    CHECK(trace.final_belief == node.belief);
    CHECK(trace.final_cost == node.cost);

    switch (trace.outcome) {
        case Outcome::decided: {
            const auto d = decide(spec, node);
            REQUIRE(d.has_value());
            CHECK(trace.decided_model == *d);
            CHECK(trace.decided_correctly == (*d == trace.true_model));
            break;
        }
        case Outcome::horizon_expired:
            CHECK(static_cast<int>(trace.steps.size()) == budget.horizon);
            break;
        case Outcome::unsafe_entered:
            REQUIRE(spec.safe_states.has_value());
            CHECK(spec.safe_states->count(node.state) == 0);
            break;
        case Outcome::cost_exceeded_blocked: break;
    }
}

}  // namespace

TEST_CASE("a zero horizon expires immediately") {
    const BuiltinProblem p = builtin_medical();
    BudgetSpec budget{0, 10};
    Policy policy;
    const EvalReport report = evaluate_policy(p.family, p.spec, budget, policy, 200, 1);
    CHECK(report.runs == 200);
    CHECK(report.decided == 0);
    CHECK(report.horizon_expired == 200);
    CHECK(report.cost_sum == 0);
    CHECK(report.max_cost == 0);
}

TEST_CASE("a prior past the threshold decides before any step") {
    BuiltinProblem p = builtin_medical();
    p.family.initial_prior = {0.85, 0.15};
    Policy policy;
    const EvalReport report = evaluate_policy(p.family, p.spec, p.budget, policy, 500, 2);
    CHECK(report.decided == 500);
    CHECK(report.per_class[0].decided == 500);
    CHECK(report.per_class[1].decided == 0);
    // Class 0 is correct whenever the sampled true model is 0: about 85%.
    const double rate = report.per_class[0].correct_rate();
    CHECK(rate > 0.80);
    CHECK(rate < 0.90);
    CHECK(report.max_cost == 0);
}

TEST_CASE("executing the exact policy realizes its computed probability") {
    const BuiltinProblem p = builtin_medical();
    const std::int64_t runs = 20000;
    for (int h = 1; h <= 3; ++h) {
        BudgetSpec budget{h, 10};
        const SolveResult r = solve_exact(p.family, p.spec, budget);
        const EvalReport report =
            evaluate_policy(p.family, p.spec, budget, r.policy, runs, 10 + static_cast<std::uint64_t>(h));
        const double sigma = std::sqrt(r.probability * (1.0 - r.probability) / static_cast<double>(runs));
        CAPTURE(h);
        CHECK(std::abs(report.success_rate() - r.probability) <= 4.0 * sigma);
        CHECK(report.max_cost <= 10);
        CHECK(report.unsafe_entered == 0);
        CHECK(report.cost_blocked == 0);
    }
}

TEST_CASE("decisions are calibrated at least to their thresholds") {
    const BuiltinProblem p = builtin_medical();
    BudgetSpec budget{4, 10};
    const SolveResult r = solve_exact(p.family, p.spec, budget);
    const EvalReport report = evaluate_policy(p.family, p.spec, budget, r.policy, 20000, 33);
    REQUIRE(report.decided > 1000);
    for (std::size_t i = 0; i < report.per_class.size(); ++i) {
        const double lambda = p.spec.thresholds[i];
        const auto n = report.per_class[i].decided;
        if (n < 50) continue;
        const double sigma = std::sqrt(lambda * (1.0 - lambda) / static_cast<double>(n));
        CAPTURE(i);
        CHECK(report.per_class[i].correct_rate() >= lambda - 3.0 * sigma);
    }
}

TEST_CASE("an observe-only policy never reaches a two-step decision") {
    // Variant b thresholds: the largest belief reachable by two observations
    // is 0.7368 on disease2, below both 0.9 and 0.8.
    const BuiltinProblem p = builtin_medical(ThresholdVariant::b);
    BudgetSpec budget{2, 10};

    Policy observe_only;
    const BeliefNode root = root_node(p.family);
    observe_only.actions.emplace(StepNodeKey{0, make_key(root)}, 2);
    for (int s2 = 0; s2 < 2; ++s2) {
        const auto posterior = belief_update(p.family, root, 2, s2);
        REQUIRE(posterior.has_value());
        BeliefNode child;
        child.state = s2;
        child.belief = *posterior;
        child.cost = 0;
        observe_only.actions.emplace(StepNodeKey{1, make_key(child)}, 2);
    }

    std::vector<EpisodeTrace> traces;
    const EvalReport report = evaluate_policy_traced(p.family, p.spec, budget, observe_only, 2000,
                                                     7, std::nullopt, 2000, traces);
    CHECK(report.decided == 0);
    CHECK(report.horizon_expired == 2000);
    CHECK(report.max_cost == 0);
    for (const EpisodeTrace& trace : traces)
        for (const TraceStep& step : trace.steps) {
            CHECK(step.action == 2);
            CHECK_FALSE(step.fallback);
        }
}

TEST_CASE("episodes never spend past the cost bound") {
    const BuiltinProblem p = builtin_medical();
    BudgetSpec budget{6, 10};
    const SolveResult r = solve_exact(p.family, p.spec, budget);
    std::vector<EpisodeTrace> traces;
    const EvalReport report =
        evaluate_policy_traced(p.family, p.spec, budget, r.policy, 4000, 99, std::nullopt, 4000, traces);
    CHECK(report.max_cost <= 10);
    REQUIRE(traces.size() == 4000);
    for (const EpisodeTrace& trace : traces) {
        CHECK(trace.final_cost <= 10);
        for (const TraceStep& step : trace.steps) CHECK(step.cost <= 10);
    }
}

TEST_CASE("an empty policy runs on fallback actions alone") {
    const BuiltinProblem p = builtin_medical();
    BudgetSpec budget{2, 10};
    Policy empty;
    std::vector<EpisodeTrace> traces;
    evaluate_policy_traced(p.family, p.spec, budget, empty, 200, 5, std::nullopt, 200, traces);
    bool saw_step = false;
    for (const EpisodeTrace& trace : traces)
        for (const TraceStep& step : trace.steps) {
            saw_step = true;
            CHECK(step.fallback);
            CHECK(step.action == 0);  // lowest affordable action
        }
    CHECK(saw_step);
}

TEST_CASE("a blocked budget ends the episode without a step") {
    ModelFamily f = stuck_family();
    DecisionSpec spec;
    spec.thresholds = {0.9, 0.9};
    BudgetSpec budget{3, 0};  // the only action costs 1
    Policy policy;
    std::vector<EpisodeTrace> traces;
    const EvalReport report =
        evaluate_policy_traced(f, spec, budget, policy, 100, 21, std::nullopt, 100, traces);
    CHECK(report.cost_blocked == 100);
    CHECK(report.decided == 0);
    for (const EpisodeTrace& trace : traces) {
        CHECK(trace.outcome == Outcome::cost_exceeded_blocked);
        CHECK(trace.steps.empty());
        CHECK(trace.final_cost == 0);
    }
}

TEST_CASE("entering the unsafe region ends the episode on arrival") {
    ModelFamily f = one_way_family();
    DecisionSpec spec;
    spec.thresholds = {0.9, 0.9};
    spec.safe_states = std::set<int>{0};
    BudgetSpec budget{5, 10};
    Policy policy;
    std::vector<EpisodeTrace> traces;
    const EvalReport report =
        evaluate_policy_traced(f, spec, budget, policy, 100, 22, std::nullopt, 100, traces);
    CHECK(report.unsafe_entered == 100);
    for (const EpisodeTrace& trace : traces) {
        CHECK(trace.outcome == Outcome::unsafe_entered);
        CHECK(trace.steps.size() == 1);
        CHECK(trace.final_state == 1);
    }
}

TEST_CASE("a forced true model drives every episode") {
    const BuiltinProblem p = builtin_medical();
    BudgetSpec budget{3, 10};
    const SolveResult r = solve_exact(p.family, p.spec, budget);
    std::vector<EpisodeTrace> traces;
    const EvalReport report = evaluate_policy_traced(p.family, p.spec, budget, r.policy, 300, 17,
                                                     1, 300, traces);
    for (const EpisodeTrace& trace : traces) {
        CHECK(trace.true_model == 1);
        if (trace.outcome == Outcome::decided)
            CHECK(trace.decided_correctly == (trace.decided_model == 1));
    }
    CHECK(report.per_class[0].decided + report.per_class[1].decided == report.decided);

    CHECK_THROWS_AS(evaluate_policy(p.family, p.spec, budget, r.policy, 10, 1, 5),
                    std::out_of_range);
}

TEST_CASE("reports are identical for any worker split and reproducible by seed") {
    const BuiltinProblem p = builtin_medical();
    BudgetSpec budget{3, 10};
    const SolveResult r = solve_exact(p.family, p.spec, budget);

    const EvalReport serial = evaluate_policy(p.family, p.spec, budget, r.policy, 5000, 77,
                                              std::nullopt, 1);
    const EvalReport parallel = evaluate_policy(p.family, p.spec, budget, r.policy, 5000, 77,
                                                std::nullopt, 4);
    CHECK(serial.decided == parallel.decided);
    CHECK(serial.horizon_expired == parallel.horizon_expired);
    CHECK(serial.cost_blocked == parallel.cost_blocked);
    CHECK(serial.unsafe_entered == parallel.unsafe_entered);
    CHECK(serial.cost_sum == parallel.cost_sum);
    CHECK(serial.max_cost == parallel.max_cost);
    for (std::size_t i = 0; i < serial.per_class.size(); ++i) {
        CHECK(serial.per_class[i].decided == parallel.per_class[i].decided);
        CHECK(serial.per_class[i].correct == parallel.per_class[i].correct);
    }

    const EvalReport repeat = evaluate_policy(p.family, p.spec, budget, r.policy, 5000, 77,
                                              std::nullopt, 4);
    CHECK(repeat.decided == parallel.decided);
    CHECK(repeat.cost_sum == parallel.cost_sum);

    const EvalReport other_seed = evaluate_policy(p.family, p.spec, budget, r.policy, 5000, 78,
                                                  std::nullopt, 4);
    CHECK(other_seed.decided != parallel.decided);  // 5000 draws virtually never agree exactly
}

TEST_CASE("traced episodes replay exactly from the recorded observations") {
    const BuiltinProblem p = builtin_medical();
    DecisionSpec spec = p.spec;
    spec.safe_states = medical_safe_states();
    BudgetSpec budget{3, 10};
    const SolveResult r = solve_exact(p.family, spec, budget);
    std::vector<EpisodeTrace> traces;
    evaluate_policy_traced(p.family, spec, budget, r.policy, 60, 13, std::nullopt, 60, traces);
    REQUIRE(traces.size() == 60);
    for (const EpisodeTrace& trace : traces) check_replay(p.family, spec, budget, trace);
}

TEST_CASE("trace files round-trip through the line format") {
    const BuiltinProblem p = builtin_medical();
    BudgetSpec budget{3, 10};
    const SolveResult r = solve_exact(p.family, p.spec, budget);
    std::vector<EpisodeTrace> traces;
    evaluate_policy_traced(p.family, p.spec, budget, r.policy, 20, 3, std::nullopt, 20, traces);
    const std::uint64_t digest = family_hash(p.family);

    for (const EpisodeTrace& trace : traces) {
        std::stringstream buffer;
        write_trace(trace, budget, digest, buffer);
        const EpisodeTrace back = read_trace(buffer);
        CHECK(back.true_model == trace.true_model);
        CHECK(back.outcome == trace.outcome);
        CHECK(back.decided_model == trace.decided_model);
        CHECK(back.decided_correctly == trace.decided_correctly);
        CHECK(back.final_cost == trace.final_cost);
        CHECK(back.final_state == trace.final_state);
        CHECK(back.final_belief == trace.final_belief);
        REQUIRE(back.steps.size() == trace.steps.size());
        for (std::size_t i = 0; i < trace.steps.size(); ++i) {
            CHECK(back.steps[i].state == trace.steps[i].state);
            CHECK(back.steps[i].belief == trace.steps[i].belief);
            CHECK(back.steps[i].cost == trace.steps[i].cost);
            CHECK(back.steps[i].action == trace.steps[i].action);
            CHECK(back.steps[i].next_state == trace.steps[i].next_state);
            CHECK(back.steps[i].fallback == trace.steps[i].fallback);
        }
    }

    std::stringstream incomplete("{\"type\":\"header\",\"true_model\":0}\n");
    CHECK_THROWS_AS(read_trace(incomplete), std::invalid_argument);
}

TEST_CASE("report CSV carries the fixed and per-class columns") {
    const BuiltinProblem p = builtin_medical();
    BudgetSpec budget{2, 10};
    const SolveResult r = solve_exact(p.family, p.spec, budget);
    const EvalReport report = evaluate_policy(p.family, p.spec, budget, r.policy, 1000, 12);
    std::ostringstream out;
    write_eval_csv(report, p.spec.thresholds, out);
    const std::string text = out.str();
    CHECK(text.rfind("config_hash,runs,decided,success_rate,ci95,mean_cost,max_cost,"
                     "horizon_expired,cost_blocked,unsafe_entered",
                     0) == 0);
    CHECK(text.find("decided_0") != std::string::npos);
    CHECK(text.find("correct_rate_0") != std::string::npos);
    CHECK(text.find("threshold_1") != std::string::npos);
    CHECK(text.find(",1000,") != std::string::npos);
    // Two lines: header and the single data row.
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("the confidence interval follows the normal approximation") {
    EvalReport report;
    report.runs = 400;
    report.decided = 100;
    const double p = 0.25;
    CHECK(std::abs(report.ci95() - 1.96 * std::sqrt(p * (1 - p) / 400.0)) < 1e-15);
    EvalReport empty;
    CHECK(empty.ci95() == 0.0);
}

TEST_CASE("the worker count honors its environment override") {
    bool had_env = false;
    std::string saved;
    if (const char* env = std::getenv("MDPSIFT_WORKERS")) {
        saved = env;
        had_env = true;
    }

    setenv("MDPSIFT_WORKERS", "3", 1);
    CHECK(default_worker_count() == 3);
    setenv("MDPSIFT_WORKERS", "0", 1);  // invalid: falls back to hardware
    CHECK(default_worker_count() >= 1);
    unsetenv("MDPSIFT_WORKERS");
    CHECK(default_worker_count() >= 1);

    if (had_env) setenv("MDPSIFT_WORKERS", saved.c_str(), 1);
}
