#include "mdpsift/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "mdpsift/belief.hpp"

namespace mdpsift {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) { throw std::invalid_argument("model file: " + message); }

const json& require_field(const json& obj, const char* name, const std::string& path) {
    if (!obj.is_object()) fail("expected an object at " + path);
    const auto it = obj.find(name);
    if (it == obj.end()) fail("missing field " + path + name);
    return *it;
}

int require_int(const json& value, const std::string& path) {
    if (!value.is_number_integer()) fail("expected an integer at " + path);
    return value.get<int>();
}

double require_number(const json& value, const std::string& path) {
    if (!value.is_number()) fail("expected a number at " + path);
    return value.get<double>();
}

std::int64_t require_cost(const json& value, const std::string& path) {
    if (value.is_number_integer()) return value.get<std::int64_t>();
    if (value.is_number_float()) {
        const double v = value.get<double>();
        if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
        fail("cost at " + path + " is not an integer (got " + std::to_string(v) +
             "); rescale the cost units so every cost is a whole number");
    }
    fail("expected a cost number at " + path);
}

const json& require_array(const json& value, std::size_t size, const std::string& path) {
    if (!value.is_array()) fail("expected an array at " + path);
    if (size != 0 && value.size() != size)
        fail("expected " + std::to_string(size) + " entries at " + path + ", got " +
             std::to_string(value.size()));
    return value;
}

std::vector<std::string> optional_names(const json& labels, const char* name, const std::string& path) {
    const auto it = labels.find(name);
    if (it == labels.end()) return {};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const json& entry = (*it)[i];
        if (!entry.is_string()) fail("expected a string at " + path + name + "[" + std::to_string(i) + "]");
        out.push_back(entry.get<std::string>());
    }
    return out;
}

std::string fmt17(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

}  // namespace

ModelDocument parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("not valid JSON: ") + e.what());
    }

    ModelDocument out;
    ModelFamily& f = out.family;
    f.num_states = require_int(require_field(doc, "num_states", ""), "num_states");
    f.num_actions = require_int(require_field(doc, "num_actions", ""), "num_actions");
    f.num_models = require_int(require_field(doc, "num_models", ""), "num_models");
    f.initial_state = require_int(require_field(doc, "initial_state", ""), "initial_state");
    if (f.num_states < 1 || f.num_actions < 1 || f.num_models < 1)
        fail("num_states, num_actions and num_models must all be at least 1");

    const std::size_t S = static_cast<std::size_t>(f.num_states);
    const std::size_t A = static_cast<std::size_t>(f.num_actions);
    const std::size_t L = static_cast<std::size_t>(f.num_models);

    const json& prior = require_array(require_field(doc, "initial_prior", ""), L, "initial_prior");
    for (std::size_t i = 0; i < L; ++i)
        f.initial_prior.push_back(require_number(prior[i], "initial_prior[" + std::to_string(i) + "]"));

    const json& trans = require_array(require_field(doc, "transitions", ""), L, "transitions");
    f.transitions.resize(L);
    for (std::size_t i = 0; i < L; ++i) {
        const std::string pi = "transitions[" + std::to_string(i) + "]";
        const json& per_state = require_array(trans[i], S, pi);
        f.transitions[i].resize(S);
        for (std::size_t s = 0; s < S; ++s) {
            const std::string ps = pi + "[" + std::to_string(s) + "]";
            const json& per_action = require_array(per_state[s], A, ps);
            f.transitions[i][s].resize(A);
            for (std::size_t a = 0; a < A; ++a) {
                const std::string pa = ps + "[" + std::to_string(a) + "]";
                const json& row = require_array(per_action[a], S, pa);
                for (std::size_t s2 = 0; s2 < S; ++s2)
                    f.transitions[i][s][a].push_back(
                        require_number(row[s2], pa + "[" + std::to_string(s2) + "]"));
            }
        }
    }

    const json& costs = require_array(require_field(doc, "costs", ""), S, "costs");
    f.costs.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
        const std::string ps = "costs[" + std::to_string(s) + "]";
        const json& row = require_array(costs[s], A, ps);
        for (std::size_t a = 0; a < A; ++a)
            f.costs[s].push_back(require_cost(row[a], ps + "[" + std::to_string(a) + "]"));
    }

    if (const auto labels = doc.find("labels"); labels != doc.end()) {
        f.labels.states = optional_names(*labels, "states", "labels.");
        f.labels.actions = optional_names(*labels, "actions", "labels.");
        f.labels.models = optional_names(*labels, "models", "labels.");
    }

    if (const auto decision = doc.find("decision"); decision != doc.end()) {
        DecisionSpec spec;
        const json& thresholds =
            require_array(require_field(*decision, "thresholds", "decision."), L, "decision.thresholds");
        for (std::size_t i = 0; i < L; ++i)
            spec.thresholds.push_back(
                require_number(thresholds[i], "decision.thresholds[" + std::to_string(i) + "]"));
        if (const auto safe = decision->find("safe_states"); safe != decision->end()) {
            std::set<int> states;
            const json& arr = require_array(*safe, 0, "decision.safe_states");
            for (std::size_t i = 0; i < arr.size(); ++i)
                states.insert(require_int(arr[i], "decision.safe_states[" + std::to_string(i) + "]"));
            spec.safe_states = std::move(states);
        }
        out.decision = std::move(spec);
    }

    if (const auto budget = doc.find("budget"); budget != doc.end()) {
        BudgetSpec b;
        b.horizon = require_int(require_field(*budget, "horizon", "budget."), "budget.horizon");
        b.cost_bound = static_cast<std::int64_t>(
            require_int(require_field(*budget, "cost_bound", "budget."), "budget.cost_bound"));
        out.budget = b;
    }

    if (const auto violations = validate_family(f); !violations.empty())
        fail(format_violations(violations));
    if (out.decision) {
        if (const auto violations = validate_decision(*out.decision, f); !violations.empty())
            fail(format_violations(violations));
    }
    if (out.budget) {
        if (const auto violations = validate_budget(*out.budget); !violations.empty())
            fail(format_violations(violations));
    }
    return out;
}

ModelDocument load_model(const std::string& path) { return parse_model(read_text_file(path)); }

std::string format_model(const ModelDocument& doc) {
    const ModelFamily& f = doc.family;
    json out;
    out["num_states"] = f.num_states;
    out["num_actions"] = f.num_actions;
    out["num_models"] = f.num_models;
    out["initial_state"] = f.initial_state;
    out["initial_prior"] = f.initial_prior;
    out["transitions"] = f.transitions;
    out["costs"] = f.costs;
    if (!f.labels.states.empty() || !f.labels.actions.empty() || !f.labels.models.empty()) {
        json labels;
        if (!f.labels.states.empty()) labels["states"] = f.labels.states;
        if (!f.labels.actions.empty()) labels["actions"] = f.labels.actions;
        if (!f.labels.models.empty()) labels["models"] = f.labels.models;
        out["labels"] = labels;
    }
    if (doc.decision) {
        json decision;
        decision["thresholds"] = doc.decision->thresholds;
        if (doc.decision->safe_states)
            decision["safe_states"] = std::vector<int>(doc.decision->safe_states->begin(),
                                                       doc.decision->safe_states->end());
        out["decision"] = decision;
    }
    if (doc.budget) {
        out["budget"]["horizon"] = doc.budget->horizon;
        out["budget"]["cost_bound"] = doc.budget->cost_bound;
    }
    return out.dump(2) + "\n";
}

void save_model(const ModelDocument& doc, const std::string& path) {
    write_text_file(path, format_model(doc));
}

namespace {

json meta_to_json(const PolicyMeta& meta) {
    json out;
    out["kind"] = meta.kind == PolicyKind::exact ? "exact" : "sampled";
    out["root_probability"] = meta.root_probability;
    out["horizon"] = meta.horizon;
    out["cost_bound"] = meta.cost_bound;
    out["thresholds"] = meta.thresholds;
    if (meta.safe_states)
        out["safe_states"] = std::vector<int>(meta.safe_states->begin(), meta.safe_states->end());
    if (meta.kind == PolicyKind::sampled) {
        out["samples_per_stage"] = meta.samples_per_stage;
        out["seed"] = meta.seed;
    }
    out["family_hash"] = meta.family_hash;
    return out;
}

PolicyMeta meta_from_json(const json& doc) {
    PolicyMeta meta;
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "exact") meta.kind = PolicyKind::exact;
    else if (kind == "sampled") meta.kind = PolicyKind::sampled;
    else throw std::invalid_argument("policy file: unknown kind '" + kind + "'");
    meta.root_probability = doc.at("root_probability").get<double>();
    meta.horizon = doc.at("horizon").get<int>();
    meta.cost_bound = doc.at("cost_bound").get<std::int64_t>();
    meta.thresholds = doc.at("thresholds").get<std::vector<double>>();
    if (doc.contains("safe_states")) {
        const auto v = doc.at("safe_states").get<std::vector<int>>();
        meta.safe_states = std::set<int>(v.begin(), v.end());
    }
    if (doc.contains("samples_per_stage"))
        meta.samples_per_stage = doc.at("samples_per_stage").get<std::int64_t>();
    if (doc.contains("seed")) meta.seed = doc.at("seed").get<std::uint64_t>();
    meta.family_hash = doc.at("family_hash").get<std::uint64_t>();
    return meta;
}

}  // namespace

void save_policy(const Policy& policy, const std::string& path) {
    json out = meta_to_json(policy.meta);

    // Entries sorted by (step, state, cost, quantized belief) so the file is
    // byte-deterministic regardless of hash-map iteration order.
    std::vector<const std::pair<const StepNodeKey, int>*> entries;
    entries.reserve(policy.actions.size());
    for (const auto& entry : policy.actions) entries.push_back(&entry);
    std::sort(entries.begin(), entries.end(), [](const auto* a, const auto* b) {
        const StepNodeKey& x = a->first;
        const StepNodeKey& y = b->first;
        if (x.step != y.step) return x.step < y.step;
        if (x.key.state != y.key.state) return x.key.state < y.key.state;
        if (x.key.cost != y.key.cost) return x.key.cost < y.key.cost;
        return x.key.quantized < y.key.quantized;
    });

    json list = json::array();
    for (const auto* entry : entries) {
        json item;
        item["step"] = entry->first.step;
        item["state"] = entry->first.key.state;
        item["cost"] = entry->first.key.cost;
        item["qbelief"] = entry->first.key.quantized;
        item["action"] = entry->second;
        list.push_back(std::move(item));
    }
    out["entries"] = std::move(list);
    write_text_file(path, out.dump(2) + "\n");
}

Policy load_policy(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("policy file: not valid JSON: ") + e.what());
    }
    Policy policy;
    try {
        policy.meta = meta_from_json(doc);
        for (const json& item : doc.at("entries")) {
            StepNodeKey key;
            key.step = item.at("step").get<int>();
            key.key.state = item.at("state").get<int>();
            key.key.cost = item.at("cost").get<std::int64_t>();
            key.key.quantized = item.at("qbelief").get<std::vector<std::int64_t>>();
            policy.actions.emplace(std::move(key), item.at("action").get<int>());
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("policy file: ") + e.what());
    }
    return policy;
}

namespace {

const char* outcome_name(Outcome outcome) {
    switch (outcome) {
        case Outcome::decided: return "decided";
        case Outcome::horizon_expired: return "horizon_expired";
        case Outcome::cost_exceeded_blocked: return "cost_exceeded_blocked";
        case Outcome::unsafe_entered: return "unsafe_entered";
    }
    return "unknown";
}

Outcome outcome_from_name(const std::string& name) {
    if (name == "decided") return Outcome::decided;
    if (name == "horizon_expired") return Outcome::horizon_expired;
    if (name == "cost_exceeded_blocked") return Outcome::cost_exceeded_blocked;
    if (name == "unsafe_entered") return Outcome::unsafe_entered;
    throw std::invalid_argument("trace file: unknown outcome '" + name + "'");
}

}  // namespace

void write_trace(const EpisodeTrace& trace, const BudgetSpec& budget, std::uint64_t digest,
                 std::ostream& out) {
    json header;
    header["type"] = "header";
    header["true_model"] = trace.true_model;
    header["horizon"] = budget.horizon;
    header["cost_bound"] = budget.cost_bound;
    header["family_digest"] = digest;
    out << header.dump() << "\n";
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const TraceStep& step = trace.steps[i];
        json line;
        line["type"] = "step";
        line["index"] = i;
        line["state"] = step.state;
        line["belief"] = step.belief;
        line["cost"] = step.cost;
        line["action"] = step.action;
        line["next_state"] = step.next_state;
        line["fallback"] = step.fallback;
        out << line.dump() << "\n";
    }
    json tail;
    tail["type"] = "outcome";
    tail["outcome"] = outcome_name(trace.outcome);
    if (trace.decided_model) {
        tail["decided_model"] = *trace.decided_model;
        tail["decided_correctly"] = trace.decided_correctly;
    }
    tail["final_cost"] = trace.final_cost;
    tail["final_state"] = trace.final_state;
    tail["final_belief"] = trace.final_belief;
    out << tail.dump() << "\n";
}

EpisodeTrace read_trace(std::istream& in) {
    EpisodeTrace trace;
    std::string line;
    bool saw_header = false;
    bool saw_outcome = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(std::string("trace file: not valid JSON line: ") + e.what());
        }
        const std::string type = record.at("type").get<std::string>();
        if (type == "header") {
            trace.true_model = record.at("true_model").get<int>();
            saw_header = true;
        } else if (type == "step") {
            TraceStep step;
            step.state = record.at("state").get<int>();
            step.belief = record.at("belief").get<std::vector<double>>();
            step.cost = record.at("cost").get<std::int64_t>();
            step.action = record.at("action").get<int>();
            step.next_state = record.at("next_state").get<int>();
            step.fallback = record.at("fallback").get<bool>();
            trace.steps.push_back(std::move(step));
        } else if (type == "outcome") {
            trace.outcome = outcome_from_name(record.at("outcome").get<std::string>());
            if (record.contains("decided_model")) {
                trace.decided_model = record.at("decided_model").get<int>();
                trace.decided_correctly = record.at("decided_correctly").get<bool>();
            }
            trace.final_cost = record.at("final_cost").get<std::int64_t>();
            trace.final_state = record.at("final_state").get<int>();
            trace.final_belief = record.at("final_belief").get<std::vector<double>>();
            saw_outcome = true;
        } else {
            throw std::invalid_argument("trace file: unknown record type '" + type + "'");
        }
    }
    if (!saw_header || !saw_outcome)
        throw std::invalid_argument("trace file: missing header or outcome record");
    return trace;
}

void write_eval_csv(const EvalReport& report, const std::vector<double>& thresholds,
                    std::ostream& out) {
    char digest[32];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(report.family_digest));

    out << "config_hash,runs,decided,success_rate,ci95,mean_cost,max_cost,horizon_expired,"
           "cost_blocked,unsafe_entered";
    for (std::size_t i = 0; i < report.per_class.size(); ++i)
        out << ",decided_" << i << ",correct_rate_" << i << ",threshold_" << i;
    out << "\n";

    out << digest << "," << report.runs << "," << report.decided << ","
        << fmt17(report.success_rate()) << "," << fmt17(report.ci95()) << ","
        << fmt17(report.mean_cost()) << "," << report.max_cost << "," << report.horizon_expired
        << "," << report.cost_blocked << "," << report.unsafe_entered;
    for (std::size_t i = 0; i < report.per_class.size(); ++i) {
        out << "," << report.per_class[i].decided << "," << fmt17(report.per_class[i].correct_rate())
            << "," << (i < thresholds.size() ? fmt17(thresholds[i]) : "");
    }
    out << "\n";
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for reading: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("failed writing file: " + path);
}

}  // namespace mdpsift
