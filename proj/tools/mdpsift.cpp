// Command-line surface: solve / simulate / sweep / export / advise.
// Exit codes: 0 success, 2 usage or validation error, 3 resource limit.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "mdpsift/ams.hpp"
#include "mdpsift/belief.hpp"
#include "mdpsift/builtin.hpp"
#include "mdpsift/explicit_io.hpp"
#include "mdpsift/io.hpp"
#include "mdpsift/rng.hpp"
#include "mdpsift/sim.hpp"
#include "mdpsift/unfold.hpp"
#include "mdpsift/value.hpp"

namespace {

using namespace mdpsift;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, sep))
        if (!token.empty()) out.push_back(token);
    return out;
}

std::vector<double> parse_thresholds(const std::string& text) {
    if (text == "lambda_a") return medical_thresholds(ThresholdVariant::a);
    if (text == "lambda_b") return medical_thresholds(ThresholdVariant::b);
    if (text == "lambda_c") return medical_thresholds(ThresholdVariant::c);
    std::vector<double> out;
    for (const std::string& token : split(text, ',')) {
        std::size_t pos = 0;
        double value = 0.0;
        try {
            value = std::stod(token, &pos);
        } catch (...) {
            pos = 0;
        }
        if (pos != token.size())
            throw std::invalid_argument("thresholds: cannot parse '" + token + "'");
        out.push_back(value);
    }
    if (out.empty()) throw std::invalid_argument("thresholds: empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> out;
    for (const std::string& token : split(text, ',')) {
        std::size_t pos = 0;
        int value = 0;
        try {
            value = std::stoi(token, &pos);
        } catch (...) {
            pos = 0;
        }
        if (pos != token.size())
            throw std::invalid_argument(flag + ": cannot parse '" + token + "'");
        out.push_back(value);
    }
    if (out.empty()) throw std::invalid_argument(flag + ": empty list");
    return out;
}

// Problem source shared by every subcommand: a model file or a builtin, plus
// optional overrides for thresholds, budget, and the reach-avoid switch.
struct ProblemOptions {
    std::string model_file;
    std::string builtin_name;
    std::string layout_file;
    std::string thresholds_text;
    bool safe = false;
    int horizon = -1;
    std::int64_t cost_bound = -1;
};

struct SourceData {
    ModelFamily family;
    std::optional<DecisionSpec> decision;
    std::optional<BudgetSpec> budget;
    std::optional<std::set<int>> safe_region;
};

SourceData load_source(const ProblemOptions& o) {
    if (!o.model_file.empty() && !o.builtin_name.empty())
        throw std::invalid_argument("pass either --model or --builtin, not both");
    if (o.model_file.empty() && o.builtin_name.empty())
        throw std::invalid_argument("pass --model <file> or --builtin medical|gridworld");
    if (!o.layout_file.empty() && o.builtin_name != "gridworld")
        throw std::invalid_argument("--layout applies only to --builtin gridworld");

    SourceData src;
    if (!o.model_file.empty()) {
        ModelDocument doc = load_model(o.model_file);
        src.family = std::move(doc.family);
        src.decision = std::move(doc.decision);
        src.budget = doc.budget;
        if (src.decision) src.safe_region = src.decision->safe_states;
    } else if (o.builtin_name == "medical") {
        BuiltinProblem p = builtin_medical();
        src.family = std::move(p.family);
        src.decision = std::move(p.spec);
        src.budget = p.budget;
        src.safe_region = medical_safe_states();
    } else {
        const GridLayout layout = o.layout_file.empty()
                                      ? default_grid_layout()
                                      : parse_grid_layout(read_text_file(o.layout_file));
        BuiltinProblem p = builtin_gridworld(layout);
        src.safe_region = p.spec.safe_states;
        src.family = std::move(p.family);
        src.decision = std::move(p.spec);
        src.budget = p.budget;
    }
    return src;
}

struct ResolvedProblem {
    ModelFamily family;
    DecisionSpec spec;
    BudgetSpec budget;
};

// Applies flag overrides on top of the source defaults.  The safe region is
// part of the objective, not the model, so it is only active under --safe.
ResolvedProblem resolve_problem(const ProblemOptions& o) {
    SourceData src = load_source(o);
    ResolvedProblem r;
    r.family = std::move(src.family);
    r.budget = src.budget.value_or(BudgetSpec{-1, -1});
    if (src.decision) r.spec.thresholds = src.decision->thresholds;
    if (!o.thresholds_text.empty()) r.spec.thresholds = parse_thresholds(o.thresholds_text);
    if (o.horizon >= 0) r.budget.horizon = o.horizon;
    if (o.cost_bound >= 0) r.budget.cost_bound = o.cost_bound;
    if (o.safe) {
        if (!src.safe_region)
            throw std::invalid_argument("--safe: this model defines no safe region");
        r.spec.safe_states = std::move(src.safe_region);
    }
    if (r.spec.thresholds.empty())
        throw std::invalid_argument("no thresholds given: pass --thresholds or use a model file with a decision section");
    if (r.budget.horizon < 0) throw std::invalid_argument("no horizon given: pass --horizon");
    if (r.budget.cost_bound < 0) throw std::invalid_argument("no cost bound given: pass --cost-bound");
    require_valid(r.family, r.spec, r.budget);
    return r;
}

void add_source_flags(CLI::App* cmd, ProblemOptions& o) {
    cmd->add_option("--model", o.model_file, "model family file (JSON)");
    cmd->add_option("--builtin", o.builtin_name, "builtin problem")
        ->check(CLI::IsMember({"medical", "gridworld"}));
    cmd->add_option("--layout", o.layout_file, "grid layout file (gridworld builtin only)");
}

void add_objective_flags(CLI::App* cmd, ProblemOptions& o) {
    cmd->add_option("--thresholds", o.thresholds_text,
                    "per-model decision thresholds: comma list, or lambda_a/lambda_b/lambda_c");
    cmd->add_flag("--safe", o.safe, "restrict to the model's safe region (reach-avoid objective)");
    cmd->add_option("--horizon", o.horizon, "step bound");
    cmd->add_option("--cost-bound", o.cost_bound, "accumulated-cost bound");
}

// ---------------------------------------------------------------- solve ----

struct SolveOptions {
    ProblemOptions prob;
    std::string method = "exact";
    std::int64_t samples = 2000;
    std::uint64_t seed = 1;
    bool no_memo = false;
    std::int64_t node_budget = 5000000;
    std::string policy_out;
    std::string dump_stats_file;
    std::string converge_csv;
    int converge_seeds = 20;
    std::string converge_ns = "50,200,1000,2000";
};

int run_solve(const SolveOptions& o) {
    ResolvedProblem p = resolve_problem(o.prob);

    if (o.method == "exact") {
        UnfoldLimits limits;
        limits.max_nodes = o.node_budget;
        const auto t0 = std::chrono::steady_clock::now();
        SolveResult result = solve_exact(p.family, p.spec, p.budget, limits);
        const double secs = seconds_since(t0);
        std::cout << "probability: " << fmt17(result.probability) << "\n"
                  << "method: exact\n"
                  << "nodes: " << result.mdp.node_count() << "\n"
                  << "solve_seconds: " << fmt6(secs) << "\n";
        if (!o.policy_out.empty()) {
            save_policy(result.policy, o.policy_out);
            std::cout << "policy_file: " << o.policy_out << "\n";
        }
        return 0;
    }

    AmsConfig config;
    config.samples_per_stage = {o.samples};
    config.seed = o.seed;
    config.memoize = !o.no_memo;
    config.reach_avoid = p.spec.safe_states.has_value();

    if (!o.converge_csv.empty()) {
        const std::vector<int> ns = parse_int_list(o.converge_ns, "--converge-ns");
        std::ostringstream csv;
        csv << "seed,samples,estimate\n";
        int rows = 0;
        for (int k = 0; k < o.converge_seeds; ++k) {
            for (int n : ns) {
                AmsConfig c = config;
                c.samples_per_stage = {n};
                c.seed = derive_seed(o.seed, static_cast<std::uint64_t>(k));
                AmsStats stats;
                const double estimate = cb_ams_root(p.family, p.spec, p.budget, c, stats);
                csv << k << "," << n << "," << fmt17(estimate) << "\n";
                ++rows;
            }
        }
        write_text_file(o.converge_csv, csv.str());
        std::cout << "convergence_csv: " << o.converge_csv << "\n"
                  << "rows: " << rows << "\n";
        return 0;
    }

    AmsStats stats;
    const auto t0 = std::chrono::steady_clock::now();
    const double estimate = cb_ams_root(p.family, p.spec, p.budget, config, stats);
    const double secs = seconds_since(t0);
    std::cout << "probability: " << fmt17(estimate) << "\n"
              << "method: ams\n"
              << "samples: " << stats.total_samples << "\n"
              << "distinct_nodes: " << stats.nodes.size() << "\n"
              << "solve_seconds: " << fmt6(secs) << "\n";
    if (!o.policy_out.empty()) {
        Policy policy = ams_policy(stats, p.family, p.spec, p.budget, config);
        policy.meta.root_probability = estimate;
        save_policy(policy, o.policy_out);
        std::cout << "policy_file: " << o.policy_out << "\n";
    }
    if (!o.dump_stats_file.empty()) {
        write_text_file(o.dump_stats_file, dump_stats(stats, p.family));
        std::cout << "stats_file: " << o.dump_stats_file << "\n";
    }
    return 0;
}

// ------------------------------------------------------------- simulate ----

struct SimulateOptions {
    ProblemOptions prob;
    std::string policy_file;
    std::string report_file;
    std::string traces_dir;
    std::int64_t runs = 1000;
    std::uint64_t seed = 1;
    int true_model = -1;
    std::int64_t trace_limit = 10;
    int workers = 0;
};

// Objective and budget travel with the policy; the command only needs the
// family, and the stored digest guards against pairing a policy with the
// wrong model.
std::pair<DecisionSpec, BudgetSpec> policy_objective(const Policy& policy,
                                                     const ModelFamily& family) {
    if (policy.meta.family_hash != family_hash(family))
        throw std::invalid_argument(
            "policy/model mismatch: the policy was computed for a different model family");
    DecisionSpec spec;
    spec.thresholds = policy.meta.thresholds;
    spec.safe_states = policy.meta.safe_states;
    BudgetSpec budget;
    budget.horizon = policy.meta.horizon;
    budget.cost_bound = policy.meta.cost_bound;
    require_valid(family, spec, budget);
    return {std::move(spec), budget};
}

int run_simulate(const SimulateOptions& o) {
    SourceData src = load_source(o.prob);
    const Policy policy = load_policy(o.policy_file);
    const auto [spec, budget] = policy_objective(policy, src.family);

    std::optional<int> true_model;
    if (o.true_model >= 0) {
        if (o.true_model >= src.family.num_models)
            throw std::invalid_argument("--true-model: index out of range");
        true_model = o.true_model;
    }
    if (o.runs < 1) throw std::invalid_argument("--runs: need at least one episode");

    EvalReport report;
    if (!o.traces_dir.empty()) {
        std::vector<EpisodeTrace> traces;
        report = evaluate_policy_traced(src.family, spec, budget, policy, o.runs, o.seed,
                                        true_model, o.trace_limit, traces, o.workers);
        std::filesystem::create_directories(o.traces_dir);
        for (std::size_t i = 0; i < traces.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "trace_%05zu.jsonl", i);
            std::ofstream out(std::filesystem::path(o.traces_dir) / name);
            write_trace(traces[i], budget, report.family_digest, out);
        }
        std::cerr << "traces: " << traces.size() << " files in " << o.traces_dir << "\n";
    } else {
        report = evaluate_policy(src.family, spec, budget, policy, o.runs, o.seed, true_model,
                                 o.workers);
    }

    std::ostringstream csv;
    write_eval_csv(report, spec.thresholds, csv);
    if (o.report_file.empty()) {
        std::cout << csv.str();
    } else {
        write_text_file(o.report_file, csv.str());
        std::cout << "report_file: " << o.report_file << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------- sweep ----

struct SweepOptions {
    ProblemOptions prob;
    std::string horizons;
    std::string threshold_sets;
    std::string methods = "exact";
    std::string out_file;
    std::int64_t samples = 2000;
    std::uint64_t seed = 1;
    std::int64_t node_budget = 5000000;
    int workers = 0;
};

int run_sweep(const SweepOptions& o) {
    SourceData src = load_source(o.prob);
    std::int64_t cost_bound = o.prob.cost_bound;
    if (cost_bound < 0 && src.budget) cost_bound = src.budget->cost_bound;
    if (cost_bound < 0) throw std::invalid_argument("no cost bound given: pass --cost-bound");
    std::optional<std::set<int>> safe;
    if (o.prob.safe) {
        if (!src.safe_region)
            throw std::invalid_argument("--safe: this model defines no safe region");
        safe = src.safe_region;
    }

    const std::vector<int> horizons = parse_int_list(o.horizons, "--horizons");
    const std::vector<std::string> set_tokens = split(o.threshold_sets, ';');
    if (set_tokens.empty()) throw std::invalid_argument("--threshold-sets: empty list");
    const std::vector<std::string> methods = split(o.methods, ',');
    if (methods.empty()) throw std::invalid_argument("--methods: empty list");
    for (const std::string& m : methods)
        if (m != "exact" && m != "ams")
            throw std::invalid_argument("--methods: unknown method '" + m + "'");

    struct Config {
        std::string label;
        std::vector<double> thresholds;
        int horizon = 0;
        std::string method;
    };
    std::vector<Config> configs;
    for (const std::string& token : set_tokens) {
        std::vector<double> thresholds = parse_thresholds(token);
        std::string label = token;
        for (char& ch : label)
            if (ch == ',') ch = '/';
        for (int h : horizons)
            for (const std::string& m : methods) configs.push_back({label, thresholds, h, m});
    }

    struct Row {
        double probability = 0.0;
        double seconds = 0.0;
        std::int64_t work = 0;
        std::exception_ptr error;
    };
    std::vector<Row> rows(configs.size());

    auto run_config = [&](std::size_t i) {
        const Config& c = configs[i];
        DecisionSpec spec;
        spec.thresholds = c.thresholds;
        spec.safe_states = safe;
        BudgetSpec budget;
        budget.horizon = c.horizon;
        budget.cost_bound = cost_bound;
        // Timed region covers the solver call only.
        if (c.method == "exact") {
            UnfoldLimits limits;
            limits.max_nodes = o.node_budget;
            const auto t0 = std::chrono::steady_clock::now();
            SolveResult result = solve_exact(src.family, spec, budget, limits);
            rows[i].seconds = seconds_since(t0);
            rows[i].probability = result.probability;
            rows[i].work = result.mdp.node_count();
        } else {
            AmsConfig config;
            config.samples_per_stage = {o.samples};
            config.seed = derive_seed(o.seed, static_cast<std::uint64_t>(i));
            config.reach_avoid = safe.has_value();
            AmsStats stats;
            const auto t0 = std::chrono::steady_clock::now();
            rows[i].probability = cb_ams_root(src.family, spec, budget, config, stats);
            rows[i].seconds = seconds_since(t0);
            rows[i].work = stats.total_samples;
        }
    };

    int workers = o.workers > 0 ? o.workers : default_worker_count();
    workers = std::min<int>(workers, static_cast<int>(configs.size()));
    std::atomic<std::size_t> cursor{0};
    auto drain = [&] {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= configs.size()) break;
            try {
                run_config(i);
            } catch (...) {
                rows[i].error = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
        for (std::thread& t : pool) t.join();
    }
    for (const Row& row : rows)
        if (row.error) std::rethrow_exception(row.error);

    std::ostringstream csv;
    csv << "threshold_set,horizon,method,safe,probability,solve_seconds,work\n";
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const Config& c = configs[i];
        csv << c.label << "," << c.horizon << "," << c.method << "," << (safe ? 1 : 0) << ","
            << fmt17(rows[i].probability) << "," << fmt6(rows[i].seconds) << "," << rows[i].work
            << "\n";
    }
    if (o.out_file.empty()) {
        std::cout << csv.str();
    } else {
        write_text_file(o.out_file, csv.str());
        std::cout << "sweep_csv: " << o.out_file << "\n"
                  << "rows: " << configs.size() << "\n";
    }
    return 0;
}

// --------------------------------------------------------------- export ----

struct ExportOptions {
    ProblemOptions prob;
    std::string out_prefix;
    std::int64_t node_budget = 5000000;
};

int run_export(const ExportOptions& o) {
    ResolvedProblem p = resolve_problem(o.prob);
    UnfoldLimits limits;
    limits.max_nodes = o.node_budget;
    const UnfoldedMdp mdp = unfold(p.family, p.spec, p.budget, limits);
    export_explicit(mdp, o.out_prefix);

    std::int64_t transitions = 0;
    std::int64_t goal_labels = 0;
    std::int64_t unsafe_labels = 0;
    for (int n = 0; n < mdp.node_count(); ++n) {
        for (int a = 0; a < mdp.num_actions; ++a)
            transitions += static_cast<std::int64_t>(
                mdp.edges[static_cast<std::size_t>(n)][static_cast<std::size_t>(a)].size());
        if (mdp.kind[static_cast<std::size_t>(n)] == NodeKind::goal) ++goal_labels;
        if (mdp.kind[static_cast<std::size_t>(n)] == NodeKind::unsafe_region) ++unsafe_labels;
    }
    std::cout << "states: " << mdp.node_count() << "\n"
              << "transitions: " << transitions << "\n"
              << "goal_labels: " << goal_labels << "\n"
              << "unsafe_labels: " << unsafe_labels << "\n"
              << "wrote: " << o.out_prefix << ".sta " << o.out_prefix << ".tra " << o.out_prefix
              << ".lab\n";
    return 0;
}

// --------------------------------------------------------------- advise ----

struct AdviseOptions {
    ProblemOptions prob;
    std::string policy_file;
    std::string transcript_file;
};

std::string format_belief(const std::vector<double>& belief) {
    std::string out = "(";
    for (std::size_t i = 0; i < belief.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", belief[i]);
        if (i) out += ", ";
        out += buf;
    }
    return out + ")";
}

std::optional<int> parse_state(const ModelFamily& family, const std::string& token) {
    try {
        std::size_t pos = 0;
        const int index = std::stoi(token, &pos);
        if (pos == token.size() && index >= 0 && index < family.num_states) return index;
    } catch (...) {
    }
    for (int s = 0; s < family.num_states; ++s)
        if (family.state_name(s) == token) return s;
    return std::nullopt;
}

int run_advise(const AdviseOptions& o) {
    SourceData src = load_source(o.prob);
    const Policy policy = load_policy(o.policy_file);
    const auto [spec, budget] = policy_objective(policy, src.family);
    const ModelFamily& family = src.family;

    BeliefNode node;
    node.state = family.initial_state;
    node.belief = family.initial_prior;
    node.cost = 0;

    EpisodeTrace trace;
    trace.true_model = -1;  // live session: the true model is unknown
    int step = 0;

    std::cout << "advisory session: horizon " << budget.horizon << ", cost bound "
              << budget.cost_bound << "\n";

    bool terminal = false;
    while (!terminal) {
        if (spec.safe_states && !is_safe(spec, node)) {
            trace.outcome = Outcome::unsafe_entered;
            std::cout << "entered unsafe state " << family.state_name(node.state)
                      << "; session over\n";
            break;
        }
        if (const auto decided = decide(spec, node)) {
            trace.outcome = Outcome::decided;
            trace.decided_model = *decided;
            std::cout << "decision: model " << *decided << " (" << family.model_name(*decided)
                      << "), belief " << format_belief(node.belief) << ", cost " << node.cost
                      << "\n";
            break;
        }
        if (step >= budget.horizon) {
            trace.outcome = Outcome::horizon_expired;
            std::cout << "horizon reached without a decision\n";
            break;
        }

        const auto recommended = policy.action_at(step, make_key(node));
        std::optional<int> action;
        if (recommended &&
            node.cost + step_cost(family, node.state, *recommended) <= budget.cost_bound) {
            action = recommended;
        } else {
            for (int a = 0; a < family.num_actions; ++a) {
                if (node.cost + step_cost(family, node.state, a) <= budget.cost_bound) {
                    action = a;
                    break;
                }
            }
        }
        if (!action) {
            trace.outcome = Outcome::cost_exceeded_blocked;
            std::cout << "cost bound exhausted: no affordable action\n";
            break;
        }
        const bool fallback = !(recommended && *recommended == *action);

        std::cout << "step " << step << " | state " << family.state_name(node.state)
                  << " | belief " << format_belief(node.belief) << " | cost " << node.cost << "/"
                  << budget.cost_bound << "\n"
                  << "recommended action: " << family.action_name(*action) << " (index " << *action
                  << ")" << (fallback ? " [fallback]" : "") << "\n";

        std::optional<std::pair<int, std::vector<double>>> observed;
        while (!observed) {
            std::cout << "observed next state (index or name, q to quit)> " << std::flush;
            std::string line;
            if (!std::getline(std::cin, line)) line = "q";
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            std::size_t start = 0;
            while (start < line.size() && line[start] == ' ') ++start;
            line = line.substr(start);
            if (line == "q" || line == "quit") {
                std::cout << "session closed before a terminal outcome; transcript not written\n";
                return 0;
            }
            const auto state = parse_state(family, line);
            if (!state) {
                std::cout << "unknown state '" << line << "'; enter an index in [0, "
                          << family.num_states << ") or a state name\n";
                continue;
            }
            auto posterior = belief_update(family, node, *action, *state);
            if (!posterior) {
                std::cout << "unreachable: state " << family.state_name(*state)
                          << " has probability 0 under every model in the current belief "
                             "support; re-enter\n";
                continue;
            }
            observed = std::make_pair(*state, std::move(*posterior));
        }

        TraceStep record;
        record.state = node.state;
        record.belief = node.belief;
        record.cost = node.cost;
        record.action = *action;
        record.next_state = observed->first;
        record.fallback = fallback;
        trace.steps.push_back(std::move(record));

        node.cost += step_cost(family, node.state, *action);
        node.state = observed->first;
        node.belief = std::move(observed->second);
        ++step;
    }

    trace.final_cost = node.cost;
    trace.final_state = node.state;
    trace.final_belief = node.belief;
    if (trace.outcome == Outcome::decided && trace.decided_model)
        trace.decided_correctly = false;  // unknowable live; recorded as not verified
    std::cout << "final cost: " << node.cost << "\n";

    if (!o.transcript_file.empty()) {
        std::ofstream out(o.transcript_file);
        if (!out) throw std::invalid_argument("cannot open transcript file " + o.transcript_file);
        write_trace(trace, budget, family_hash(family), out);
        std::cout << "transcript_file: " << o.transcript_file << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classifier for systems whose dynamics are one of several known models: "
                 "computes cost-bounded decision strategies, estimates them by sampling, "
                 "simulates them, and advises a live operator."};
    app.require_subcommand(1);

    SolveOptions solve_opts;
    CLI::App* solve_cmd =
        app.add_subcommand("solve", "compute the maximal decision probability and a policy");
    add_source_flags(solve_cmd, solve_opts.prob);
    add_objective_flags(solve_cmd, solve_opts.prob);
    solve_cmd->add_option("--method", solve_opts.method, "solver: exact or ams")
        ->check(CLI::IsMember({"exact", "ams"}));
    solve_cmd->add_option("--samples", solve_opts.samples, "samples per stage (ams)");
    solve_cmd->add_option("--seed", solve_opts.seed, "sampling seed (ams)");
    solve_cmd->add_flag("--no-memo", solve_opts.no_memo, "disable node memoization (ams)");
    solve_cmd->add_option("--node-budget", solve_opts.node_budget, "node limit (exact)");
    solve_cmd->add_option("--policy-out", solve_opts.policy_out, "write the policy to this file");
    solve_cmd->add_option("--dump-stats", solve_opts.dump_stats_file,
                          "write per-node sampling statistics (ams)");
    solve_cmd->add_option("--converge-csv", solve_opts.converge_csv,
                          "write a (seed, samples, estimate) convergence study CSV (ams)");
    solve_cmd->add_option("--converge-seeds", solve_opts.converge_seeds,
                          "seed count for the convergence study");
    solve_cmd->add_option("--converge-ns", solve_opts.converge_ns,
                          "sample schedule for the convergence study");

    SimulateOptions sim_opts;
    CLI::App* sim_cmd =
        app.add_subcommand("simulate", "evaluate a policy against the model family");
    add_source_flags(sim_cmd, sim_opts.prob);
    sim_cmd->add_option("--policy", sim_opts.policy_file, "policy file")->required();
    sim_cmd->add_option("--runs", sim_opts.runs, "episode count");
    sim_cmd->add_option("--seed", sim_opts.seed, "master seed");
    sim_cmd->add_option("--true-model", sim_opts.true_model,
                        "force the true model instead of drawing it from the prior");
    sim_cmd->add_option("--report", sim_opts.report_file, "write the CSV report to this file");
    sim_cmd->add_option("--traces", sim_opts.traces_dir, "write episode traces to this directory");
    sim_cmd->add_option("--trace-limit", sim_opts.trace_limit, "episodes to trace");
    sim_cmd->add_option("--workers", sim_opts.workers, "worker threads (0 = auto)");

    SweepOptions sweep_opts;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "solve a grid of configurations into a CSV");
    add_source_flags(sweep_cmd, sweep_opts.prob);
    sweep_cmd->add_option("--horizons", sweep_opts.horizons, "comma list of step bounds")
        ->required();
    sweep_cmd
        ->add_option("--threshold-sets", sweep_opts.threshold_sets,
                     "semicolon list of threshold sets (each a comma list or lambda_a/b/c)")
        ->required();
    sweep_cmd->add_option("--methods", sweep_opts.methods, "comma list of solvers");
    sweep_cmd->add_flag("--safe", sweep_opts.prob.safe,
                        "restrict to the model's safe region (reach-avoid objective)");
    sweep_cmd->add_option("--cost-bound", sweep_opts.prob.cost_bound, "accumulated-cost bound");
    sweep_cmd->add_option("--samples", sweep_opts.samples, "samples per stage (ams)");
    sweep_cmd->add_option("--seed", sweep_opts.seed, "master seed (ams rows)");
    sweep_cmd->add_option("--node-budget", sweep_opts.node_budget, "node limit (exact)");
    sweep_cmd->add_option("--out", sweep_opts.out_file, "write the CSV to this file");
    sweep_cmd->add_option("--workers", sweep_opts.workers, "worker threads (0 = auto)");

    ExportOptions export_opts;
    CLI::App* export_cmd =
        app.add_subcommand("export", "write the unfolded decision process in explicit format");
    add_source_flags(export_cmd, export_opts.prob);
    add_objective_flags(export_cmd, export_opts.prob);
    export_cmd->add_option("--out", export_opts.out_prefix, "output file prefix")->required();
    export_cmd->add_option("--node-budget", export_opts.node_budget, "node limit");

    AdviseOptions advise_opts;
    CLI::App* advise_cmd =
        app.add_subcommand("advise", "interactive advisory session for executing a policy");
    add_source_flags(advise_cmd, advise_opts.prob);
    advise_cmd->add_option("--policy", advise_opts.policy_file, "policy file")->required();
    advise_cmd->add_option("--transcript", advise_opts.transcript_file,
                           "write the session trace to this file");

    int rc = 0;
    solve_cmd->callback([&] { rc = run_solve(solve_opts); });
    sim_cmd->callback([&] { rc = run_simulate(sim_opts); });
    sweep_cmd->callback([&] { rc = run_sweep(sweep_opts); });
    export_cmd->callback([&] { rc = run_export(export_opts); });
    advise_cmd->callback([&] { rc = run_advise(advise_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const mdpsift::resource_limit_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
