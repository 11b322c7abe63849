#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mdpsift/builtin.hpp"
#include "mdpsift/io.hpp"
#include "mdpsift/unfold.hpp"
#include "mdpsift/value.hpp"
#include "oracle.hpp"

using namespace mdpsift;

namespace {

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

BeliefNode root_node(const ModelFamily& f) {
    BeliefNode n;
    n.state = f.initial_state;
    n.belief = f.initial_prior;
    n.cost = 0;
    return n;
}

double solve_probability(const ModelFamily& f, const DecisionSpec& spec, const BudgetSpec& budget) {
    return solve_exact(f, spec, budget).probability;
}

// Probability of reaching a goal when the extracted policy is followed from
// the root; must reproduce the dynamic-programming root value.
double policy_path_value(const UnfoldedMdp& mdp, const Policy& policy, int horizon, int node,
                         int step) {
    const NodeKind kind = mdp.kind[static_cast<std::size_t>(node)];
    if (kind == NodeKind::unsafe_region) return 0.0;
    if (kind == NodeKind::goal) return 1.0;
    if (step >= horizon) return 0.0;
    const auto action = policy.action_at(step, mdp.keys[static_cast<std::size_t>(node)]);
    if (!action) return 0.0;
    const auto& row = mdp.edges[static_cast<std::size_t>(node)][static_cast<std::size_t>(*action)];
    double v = 0.0;
    for (const Edge& e : row) v += e.prob * policy_path_value(mdp, policy, horizon, e.target, step + 1);
    return v;
}

void check_policy_consistency(const ModelFamily& f, const DecisionSpec& spec,
                              const BudgetSpec& budget) {
    const SolveResult r = solve_exact(f, spec, budget);
    const double followed = policy_path_value(r.mdp, r.policy, budget.horizon, r.mdp.root, 0);
    CHECK(close(followed, r.probability, 1e-9));
}

std::filesystem::path scratch_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "mdpsift_exact_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("one-layer unfolding has the hand-computed shape") {
    const BuiltinProblem p = builtin_medical();
    BudgetSpec budget{1, 10};
    const UnfoldedMdp mdp = unfold(p.family, p.spec, budget);

    REQUIRE(mdp.node_count() == 7);
    CHECK(mdp.num_actions == 3);
    CHECK(mdp.root == 0);
    CHECK_FALSE(mdp.reach_avoid);
    CHECK(mdp.kind[0] == NodeKind::interior);
    CHECK(mdp.depth_first_seen[0] == 0);
    CHECK(mdp.expanded[0] == 1);

    // The only decision at depth 1: treatment2 landing in s2, belief (0.8, 0.2).
    int goals = 0;
    for (int n = 0; n < mdp.node_count(); ++n) {
        if (mdp.kind[static_cast<std::size_t>(n)] != NodeKind::goal) continue;
        ++goals;
        CHECK(mdp.nodes[static_cast<std::size_t>(n)].state == 1);
        CHECK(mdp.nodes[static_cast<std::size_t>(n)].cost == 5);
        CHECK(close(mdp.nodes[static_cast<std::size_t>(n)].belief[0], 0.8, 1e-12));
    }
    CHECK(goals == 1);

    // Root rows: the known one-step mixtures, each summing to 1.
    const double expected[3][2] = {{0.7, 0.3}, {0.75, 0.25}, {0.4, 0.6}};
    for (int a = 0; a < 3; ++a) {
        const auto& row = mdp.edges[0][static_cast<std::size_t>(a)];
        REQUIRE(row.size() == 2);
        CHECK(close(row[0].prob, expected[a][0], 1e-12));
        CHECK(close(row[1].prob, expected[a][1], 1e-12));
    }

    // Depth-1 nodes sit on the last layer: recorded but never expanded.
    for (int n = 1; n < mdp.node_count(); ++n) {
        CHECK(mdp.depth_first_seen[static_cast<std::size_t>(n)] == 1);
        CHECK(mdp.expanded[static_cast<std::size_t>(n)] == 0);
        for (const auto& row : mdp.edges[static_cast<std::size_t>(n)]) CHECK(row.empty());
        CHECK(mdp.index.at(mdp.keys[static_cast<std::size_t>(n)]) == n);
    }
}

TEST_CASE("zero horizon yields the bare root") {
    const BuiltinProblem p = builtin_medical();
    BudgetSpec budget{0, 10};
    const SolveResult r = solve_exact(p.family, p.spec, budget);
    CHECK(r.mdp.node_count() == 1);
    CHECK(r.probability == 0.0);
    CHECK(r.policy.actions.empty());
}

TEST_CASE("a prior past the threshold decides immediately") {
    BuiltinProblem p = builtin_medical();
    p.family.initial_prior = {0.9, 0.1};
    BudgetSpec budget{4, 10};
    const SolveResult r = solve_exact(p.family, p.spec, budget);
    CHECK(r.mdp.node_count() == 1);
    CHECK(r.mdp.kind[0] == NodeKind::goal);
    CHECK(r.probability == 1.0);
    CHECK(r.policy.actions.empty());
}

TEST_CASE("identification probabilities match the frozen reference values") {
    const BuiltinProblem p = builtin_medical();

    const double plain_a[6] = {0.25, 0.715, 0.906, 0.9692, 0.99248, 0.995408};
    const double plain_b[6] = {0.0, 0.33, 0.5, 0.7049, 0.76551, 0.7768065};
    const double plain_c[6] = {0.0, 0.0, 0.2785, 0.3479, 0.49352, 0.547297};
    const int nodes_a[6] = {7, 40, 147, 372, 755, 1278};
    const int nodes_b[6] = {7, 46, 178, 477, 1011, 1817};
    const int nodes_c[6] = {7, 46, 186, 522, 1132, 2066};

    for (int h = 1; h <= 6; ++h) {
        BudgetSpec budget{h, 10};
        DecisionSpec spec = p.spec;

        spec.thresholds = medical_thresholds(ThresholdVariant::a);
        SolveResult ra = solve_exact(p.family, spec, budget);
        CHECK(close(ra.probability, plain_a[h - 1], 1e-9));
        CHECK(ra.mdp.node_count() == nodes_a[h - 1]);

        spec.thresholds = medical_thresholds(ThresholdVariant::b);
        SolveResult rb = solve_exact(p.family, spec, budget);
        CHECK(close(rb.probability, plain_b[h - 1], 1e-9));
        CHECK(rb.mdp.node_count() == nodes_b[h - 1]);

        spec.thresholds = medical_thresholds(ThresholdVariant::c);
        SolveResult rc = solve_exact(p.family, spec, budget);
        CHECK(close(rc.probability, plain_c[h - 1], 1e-9));
        CHECK(rc.mdp.node_count() == nodes_c[h - 1]);
    }
}

TEST_CASE("identification under a safety constraint matches the frozen values") {
    const BuiltinProblem p = builtin_medical();
    const double safe_a[6] = {0.25, 0.55, 0.709, 0.7321, 0.753175, 0.7588255};
    const double safe_b[6] = {0.0, 0.33, 0.468, 0.6034, 0.6424, 0.6550575};
    const double safe_c[6] = {0.0, 0.0, 0.237, 0.3323, 0.44209, 0.504952};

    for (int h = 1; h <= 6; ++h) {
        BudgetSpec budget{h, 10};
        DecisionSpec spec = p.spec;
        spec.safe_states = medical_safe_states();

        spec.thresholds = medical_thresholds(ThresholdVariant::a);
        CHECK(close(solve_probability(p.family, spec, budget), safe_a[h - 1], 1e-9));
        spec.thresholds = medical_thresholds(ThresholdVariant::b);
        CHECK(close(solve_probability(p.family, spec, budget), safe_b[h - 1], 1e-9));
        spec.thresholds = medical_thresholds(ThresholdVariant::c);
        CHECK(close(solve_probability(p.family, spec, budget), safe_c[h - 1], 1e-9));
    }
}

TEST_CASE("a zero cost bound restricts play to free actions") {
    const BuiltinProblem p = builtin_medical();
    const double expected[3] = {0.0, 0.285, 0.361};
    for (int h = 1; h <= 3; ++h) {
        BudgetSpec budget{h, 0};
        CHECK(close(solve_probability(p.family, p.spec, budget), expected[h - 1], 1e-9));
    }
}

TEST_CASE("value table invariants hold on a constrained instance") {
    const BuiltinProblem p = builtin_medical();
    DecisionSpec spec = p.spec;
    spec.thresholds = medical_thresholds(ThresholdVariant::b);
    spec.safe_states = medical_safe_states();
    BudgetSpec budget{4, 10};

    const SolveResult r = solve_exact(p.family, spec, budget);
    int goals = 0;
    int unsafe = 0;
    for (int n = 0; n < r.mdp.node_count(); ++n) {
        const NodeKind kind = r.mdp.kind[static_cast<std::size_t>(n)];
        if (kind == NodeKind::goal) ++goals;
        if (kind == NodeKind::unsafe_region) ++unsafe;
        for (int k = 0; k <= budget.horizon; ++k) {
            const double v = r.table.at(n, k);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            if (kind == NodeKind::goal) CHECK(v == 1.0);
            if (kind == NodeKind::unsafe_region) CHECK(v == 0.0);
            if (k > 0) CHECK(r.table.at(n, k) >= r.table.at(n, k - 1));
        }
        if (kind == NodeKind::interior) CHECK(r.table.at(n, 0) == 0.0);
        if (kind == NodeKind::unsafe_region) {
            // Unsafe nodes are recorded but never expanded.
            CHECK(r.mdp.expanded[static_cast<std::size_t>(n)] == 0);
            for (const auto& row : r.mdp.edges[static_cast<std::size_t>(n)]) CHECK(row.empty());
        }
    }
    CHECK(goals > 0);
    CHECK(unsafe > 0);

    // Without a safe region the late stage is just another interior state.
    const UnfoldedMdp plain = unfold(p.family, p.spec, budget);
    for (int n = 0; n < plain.node_count(); ++n)
        CHECK(plain.kind[static_cast<std::size_t>(n)] != NodeKind::unsafe_region);
}

TEST_CASE("root actions follow the one-step lookahead") {
    const BuiltinProblem p = builtin_medical();
    const NodeKey root_key = make_key(root_node(p.family));

    BudgetSpec one{1, 10};
    const SolveResult r1 = solve_exact(p.family, p.spec, one);
    CHECK(r1.policy.action_at(0, root_key) == 1);  // treatment2 is the only arm with value

    BudgetSpec two{2, 10};
    const SolveResult r2 = solve_exact(p.family, p.spec, two);
    CHECK(r2.policy.action_at(0, root_key) == 2);  // observing first dominates
}

TEST_CASE("equal-value actions resolve to the lowest index") {
    ModelFamily f;
    f.num_states = 2;
    f.num_actions = 3;
    f.num_models = 2;
    f.initial_state = 0;
    f.initial_prior = {0.5, 0.5};
    // Actions 0 and 1 are identical informative moves; action 2 reveals
    // nothing.  Landing back in state 0 pins the second model exactly.
    f.transitions = {
        {
            {{0.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}},
            {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}},
        },
        {
            {{0.5, 0.5}, {0.5, 0.5}, {1.0, 0.0}},
            {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}},
        },
    };
    f.costs = {{0, 0, 0}, {0, 0, 0}};

    DecisionSpec spec;
    spec.thresholds = {0.9, 0.9};
    BudgetSpec budget{1, 0};
    require_valid(f, spec, budget);

    const SolveResult r = solve_exact(f, spec, budget);
    CHECK(r.probability == 0.25);
    CHECK(r.policy.action_at(0, make_key(root_node(f))) == 0);
}

TEST_CASE("solver agrees with a brute-force history enumeration") {
    const BuiltinProblem p = builtin_medical();
    for (int h = 1; h <= 2; ++h) {
        for (auto variant : {ThresholdVariant::a, ThresholdVariant::b, ThresholdVariant::c}) {
            DecisionSpec spec = p.spec;
            spec.thresholds = medical_thresholds(variant);
            BudgetSpec budget{h, 10};
            const double expected = test::oracle_root_value(p.family, spec, budget);
            CHECK(close(solve_probability(p.family, spec, budget), expected, 1e-9));
        }
    }

    std::mt19937_64 rng(20260822ULL);
    for (int trial = 0; trial < 40; ++trial) {
        test::RandomCase c = test::random_case(rng);
        c.budget.horizon = std::min(c.budget.horizon, 2);
        const double expected = test::oracle_root_value(c.family, c.spec, c.budget);
        const double got = solve_probability(c.family, c.spec, c.budget);
        CAPTURE(trial);
        CHECK(close(got, expected, 1e-9));
    }
}

TEST_CASE("probability is monotone in horizon, budget, and thresholds") {
    std::mt19937_64 rng(77001ULL);
    for (int trial = 0; trial < 25; ++trial) {
        test::RandomCase c = test::random_case(rng);
        c.budget.horizon = std::min(c.budget.horizon, 3);
        CAPTURE(trial);
        const double base = solve_probability(c.family, c.spec, c.budget);

        BudgetSpec longer = c.budget;
        longer.horizon += 1;
        CHECK(solve_probability(c.family, c.spec, longer) >= base - 1e-12);

        BudgetSpec richer = c.budget;
        richer.cost_bound += 2;
        CHECK(solve_probability(c.family, c.spec, richer) >= base - 1e-12);

        DecisionSpec stricter = c.spec;
        for (double& t : stricter.thresholds) t = std::min(1.0, t + 0.05);
        CHECK(solve_probability(c.family, stricter, c.budget) <= base + 1e-12);

        if (c.spec.safe_states.has_value()) {
            DecisionSpec unconstrained = c.spec;
            unconstrained.safe_states.reset();
            CHECK(solve_probability(c.family, unconstrained, c.budget) >= base - 1e-12);
        }
    }
}

TEST_CASE("following the extracted policy reproduces the root value") {
    const BuiltinProblem p = builtin_medical();
    for (auto variant : {ThresholdVariant::a, ThresholdVariant::b}) {
        DecisionSpec spec = p.spec;
        spec.thresholds = medical_thresholds(variant);
        check_policy_consistency(p.family, spec, BudgetSpec{3, 10});
        spec.safe_states = medical_safe_states();
        check_policy_consistency(p.family, spec, BudgetSpec{3, 10});
    }

    std::mt19937_64 rng(4242ULL);
    for (int trial = 0; trial < 25; ++trial) {
        test::RandomCase c = test::random_case(rng);
        c.budget.horizon = std::min(c.budget.horizon, 3);
        CAPTURE(trial);
        check_policy_consistency(c.family, c.spec, c.budget);
    }
}

TEST_CASE("the node budget trips with a pointer at the sampling solver") {
    const BuiltinProblem p = builtin_medical();
    UnfoldLimits limits;
    limits.max_nodes = 3;
    try {
        unfold(p.family, p.spec, BudgetSpec{6, 10}, limits);
        FAIL("expected resource_limit_error");
    } catch (const resource_limit_error& e) {
        const std::string what = e.what();
        CHECK(what.find("ams") != std::string::npos);
        CHECK(what.find("3") != std::string::npos);
    }
}

TEST_CASE("family digests separate distinct models") {
    const ModelFamily medical = builtin_medical().family;
    CHECK(family_hash(medical) == family_hash(builtin_medical().family));

    ModelFamily tweaked_prob = medical;
    tweaked_prob.transitions[0][0][0] = {0.8 + 1e-12, 0.2 - 1e-12, 0.0};
    CHECK(family_hash(tweaked_prob) != family_hash(medical));

    ModelFamily tweaked_cost = medical;
    tweaked_cost.costs[0][0] = 3;
    CHECK(family_hash(tweaked_cost) != family_hash(medical));

    CHECK(family_hash(builtin_gridworld(default_grid_layout()).family) != family_hash(medical));
}

TEST_CASE("policies survive the file round trip byte for byte") {
    const BuiltinProblem p = builtin_medical();
    DecisionSpec spec = p.spec;
    spec.safe_states = medical_safe_states();
    const SolveResult r = solve_exact(p.family, spec, BudgetSpec{3, 10});
    REQUIRE_FALSE(r.policy.actions.empty());

    const std::string path = scratch_file("exact_policy.json").string();
    save_policy(r.policy, path);
    const Policy back = load_policy(path);

    CHECK(back.meta.kind == PolicyKind::exact);
    CHECK(back.meta.root_probability == r.policy.meta.root_probability);
    CHECK(back.meta.horizon == 3);
    CHECK(back.meta.cost_bound == 10);
    CHECK(back.meta.thresholds == r.policy.meta.thresholds);
    REQUIRE(back.meta.safe_states.has_value());
    CHECK(*back.meta.safe_states == medical_safe_states());
    CHECK(back.meta.family_hash == family_hash(p.family));
    CHECK(back.actions == r.policy.actions);

    const std::string path2 = scratch_file("exact_policy2.json").string();
    save_policy(back, path2);
    CHECK(read_text_file(path) == read_text_file(path2));
}
