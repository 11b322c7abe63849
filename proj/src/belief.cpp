#include "mdpsift/belief.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mdpsift {

namespace {

void check_indices(const ModelFamily& family, const BeliefNode& node, int action, int next_state) {
    if (node.state < 0 || node.state >= family.num_states)
        throw std::out_of_range("belief: node state out of range");
    if (action < 0 || action >= family.num_actions)
        throw std::out_of_range("belief: action index out of range");
    if (next_state < 0 || next_state >= family.num_states)
        throw std::out_of_range("belief: next state index out of range");
    if (static_cast<int>(node.belief.size()) != family.num_models)
        throw std::invalid_argument("belief: belief length does not match model count");
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline void fnv_mix(std::uint64_t& h, std::uint64_t value) {
    for (int byte = 0; byte < 8; ++byte) {
        h ^= (value >> (byte * 8)) & 0xffULL;
        h *= kFnvPrime;
    }
}

}  // namespace

double transition_prob(const ModelFamily& family, const BeliefNode& node, int action,
                       int next_state) {
    check_indices(family, node, action, next_state);
    double p = 0.0;
    for (int i = 0; i < family.num_models; ++i)
        p += node.belief[static_cast<std::size_t>(i)] *
             family.transitions[static_cast<std::size_t>(i)][static_cast<std::size_t>(node.state)]
                               [static_cast<std::size_t>(action)][static_cast<std::size_t>(next_state)];
    return p;
}

std::optional<std::vector<double>> belief_update(const ModelFamily& family, const BeliefNode& node,
                                                 int action, int next_state) {
    check_indices(family, node, action, next_state);
    std::vector<double> numerators(static_cast<std::size_t>(family.num_models));
    double denom = 0.0;
    for (int i = 0; i < family.num_models; ++i) {
        const double n =
            family.transitions[static_cast<std::size_t>(i)][static_cast<std::size_t>(node.state)]
                              [static_cast<std::size_t>(action)][static_cast<std::size_t>(next_state)] *
            node.belief[static_cast<std::size_t>(i)];
        numerators[static_cast<std::size_t>(i)] = n;
        denom += n;
    }
    if (denom == 0.0) return std::nullopt;
    for (double& n : numerators) n /= denom;
    return numerators;
}

std::optional<int> decide(const DecisionSpec& spec, const BeliefNode& node) {
    if (static_cast<int>(spec.thresholds.size()) != static_cast<int>(node.belief.size()))
        throw std::invalid_argument("decide: threshold count does not match belief length");
    for (int i = 0; i < static_cast<int>(node.belief.size()); ++i)
        if (node.belief[static_cast<std::size_t>(i)] >= spec.thresholds[static_cast<std::size_t>(i)])
            return i;
    return std::nullopt;
}

bool is_safe(const DecisionSpec& spec, const BeliefNode& node) {
    if (!spec.safe_states) return true;
    return spec.safe_states->count(node.state) > 0;
}

NodeKey make_key(const BeliefNode& node) {
    NodeKey key;
    key.state = node.state;
    key.cost = node.cost;
    key.quantized.reserve(node.belief.size());
    for (double b : node.belief)
        key.quantized.push_back(std::llround(b * 1e9));
    return key;
}

std::size_t NodeKeyHash::operator()(const NodeKey& key) const {
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, static_cast<std::uint64_t>(key.state));
    fnv_mix(h, static_cast<std::uint64_t>(key.cost));
    for (std::int64_t q : key.quantized) fnv_mix(h, static_cast<std::uint64_t>(q));
    return static_cast<std::size_t>(h);
}

}  // namespace mdpsift
