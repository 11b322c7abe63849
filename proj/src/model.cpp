#include "mdpsift/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mdpsift {

namespace {

std::string name_or_index(const std::vector<std::string>& names, int i, const char* prefix) {
    if (i >= 0 && i < static_cast<int>(names.size()) && !names[static_cast<std::size_t>(i)].empty())
        return names[static_cast<std::size_t>(i)];
    return std::string(prefix) + std::to_string(i);
}

}  // namespace

std::string ModelFamily::state_name(int s) const { return name_or_index(labels.states, s, "state"); }
std::string ModelFamily::action_name(int a) const { return name_or_index(labels.actions, a, "action"); }
std::string ModelFamily::model_name(int i) const { return name_or_index(labels.models, i, "model"); }

std::vector<Violation> validate_family(const ModelFamily& family) {
    std::vector<Violation> out;
    auto add = [&out](std::string what, int model = -1, int state = -1, int action = -1) {
        out.push_back(Violation{std::move(what), model, state, action});
    };

    if (family.num_states < 1) add("num_states must be at least 1");
    if (family.num_actions < 1) add("num_actions must be at least 1");
    if (family.num_models < 1) add("num_models must be at least 1");
    if (family.initial_state < 0 || family.initial_state >= family.num_states)
        add("initial_state out of range");
    if (!out.empty()) return out;

    if (static_cast<int>(family.transitions.size()) != family.num_models)
        add("transitions must have one tensor per model");
    if (static_cast<int>(family.costs.size()) != family.num_states)
        add("costs must have one row per state");
    if (static_cast<int>(family.initial_prior.size()) != family.num_models)
        add("initial_prior must have one entry per model");
    if (!out.empty()) return out;

    for (int i = 0; i < family.num_models; ++i) {
        if (static_cast<int>(family.transitions[i].size()) != family.num_states) {
            add("transition tensor has wrong state count", i);
            continue;
        }
        for (int s = 0; s < family.num_states; ++s) {
            if (static_cast<int>(family.transitions[i][s].size()) != family.num_actions) {
                add("transition tensor has wrong action count", i, s);
                continue;
            }
            for (int a = 0; a < family.num_actions; ++a) {
                const auto& row = family.transitions[i][s][a];
                if (static_cast<int>(row.size()) != family.num_states) {
                    add("transition row has wrong length", i, s, a);
                    continue;
                }
                double sum = 0.0;
                bool bad_entry = false;
                for (double p : row) {
                    if (!(p >= 0.0 && p <= 1.0) || std::isnan(p)) bad_entry = true;
                    sum += p;
                }
                if (bad_entry) add("transition probability outside [0,1]", i, s, a);
                if (std::abs(sum - 1.0) > 1e-9) add("transition row does not sum to 1", i, s, a);
            }
        }
    }

    for (int s = 0; s < static_cast<int>(family.costs.size()); ++s) {
        if (static_cast<int>(family.costs[s].size()) != family.num_actions) {
            add("cost row has wrong length", -1, s);
            continue;
        }
        for (int a = 0; a < family.num_actions; ++a)
            if (family.costs[s][a] < 0) add("cost is negative", -1, s, a);
    }

    double prior_sum = 0.0;
    for (int i = 0; i < static_cast<int>(family.initial_prior.size()); ++i) {
        const double p = family.initial_prior[static_cast<std::size_t>(i)];
        if (!(p >= 0.0) || std::isnan(p)) add("prior entry is negative", i);
        prior_sum += p;
    }
    if (std::abs(prior_sum - 1.0) > 1e-9) add("initial_prior does not sum to 1");

    return out;
}

std::vector<Violation> validate_decision(const DecisionSpec& spec, const ModelFamily& family) {
    std::vector<Violation> out;
    if (static_cast<int>(spec.thresholds.size()) != family.num_models)
        out.push_back({"thresholds must have one entry per model"});
    for (int i = 0; i < static_cast<int>(spec.thresholds.size()); ++i) {
        const double t = spec.thresholds[static_cast<std::size_t>(i)];
        if (!(t > 0.5 && t <= 1.0))
            out.push_back({"threshold must lie in (0.5, 1]", i});
    }
    if (spec.safe_states) {
        for (int s : *spec.safe_states)
            if (s < 0 || s >= family.num_states)
                out.push_back({"safe state index out of range", -1, s});
    }
    return out;
}

std::vector<Violation> validate_budget(const BudgetSpec& budget) {
    std::vector<Violation> out;
    if (budget.horizon < 0) out.push_back({"horizon must be nonnegative"});
    if (budget.cost_bound < 0) out.push_back({"cost_bound must be nonnegative"});
    return out;
}

std::string format_violations(const std::vector<Violation>& violations) {
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        const Violation& v = violations[i];
        if (i) os << "; ";
        os << v.what;
        const bool any = v.model >= 0 || v.state >= 0 || v.action >= 0;
        if (any) {
            os << " (";
            bool first = true;
            auto field = [&](const char* name, int value) {
                if (value < 0) return;
                if (!first) os << ", ";
                os << name << " " << value;
                first = false;
            };
            field("model", v.model);
            field("state", v.state);
            field("action", v.action);
            os << ")";
        }
    }
    return os.str();
}

void require_valid(const ModelFamily& family, const DecisionSpec& spec, const BudgetSpec& budget) {
    auto violations = validate_family(family);
    if (violations.empty()) {
        auto d = validate_decision(spec, family);
        violations.insert(violations.end(), d.begin(), d.end());
    }
    auto b = validate_budget(budget);
    violations.insert(violations.end(), b.begin(), b.end());
    if (!violations.empty())
        throw std::invalid_argument("require_valid: " + format_violations(violations));
}

std::int64_t step_cost(const ModelFamily& family, int state, int action) {
    if (state < 0 || state >= family.num_states)
        throw std::out_of_range("step_cost: state index out of range");
    if (action < 0 || action >= family.num_actions)
        throw std::out_of_range("step_cost: action index out of range");
    return family.costs[static_cast<std::size_t>(state)][static_cast<std::size_t>(action)];
}

}  // namespace mdpsift
