#include "mdpsift/rational.hpp"

#include <cmath>

#include "mdpsift/model.hpp"

namespace mdpsift {

RatTensor rationalize_transitions(const ModelFamily& family, std::int64_t max_den) {
    RatTensor out(static_cast<std::size_t>(family.num_models));
    for (int i = 0; i < family.num_models; ++i) {
        auto& per_state = out[static_cast<std::size_t>(i)];
        per_state.resize(static_cast<std::size_t>(family.num_states));
        for (int s = 0; s < family.num_states; ++s) {
            auto& per_action = per_state[static_cast<std::size_t>(s)];
            per_action.resize(static_cast<std::size_t>(family.num_actions));
            for (int a = 0; a < family.num_actions; ++a)
                per_action[static_cast<std::size_t>(a)] =
                    rationalize_vector(family.transitions[static_cast<std::size_t>(i)]
                                                         [static_cast<std::size_t>(s)]
                                                         [static_cast<std::size_t>(a)],
                                       max_den);
        }
    }
    return out;
}

std::vector<Rat> rationalize_vector(const std::vector<double>& values, std::int64_t max_den) {
    std::vector<Rat> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(rationalize(v, max_den));
    return out;
}

Rat rationalize(double x, std::int64_t max_den) {
    if (!std::isfinite(x)) throw std::invalid_argument("rationalize: non-finite input");
    const bool negative = x < 0;
    double v = negative ? -x : x;

    // Continued-fraction convergents p/q of v until the denominator cap.
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double frac = v;
    for (int iter = 0; iter < 64; ++iter) {
        const double whole = std::floor(frac);
        if (whole > static_cast<double>(INT64_MAX / 2)) break;
        const std::int64_t a = static_cast<std::int64_t>(whole);
        const std::int64_t p2 = a * p1 + p0;
        const std::int64_t q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        const double rem = frac - whole;
        if (rem < 1e-15) break;
        frac = 1.0 / rem;
    }
    if (q1 == 0) throw std::invalid_argument("rationalize: no approximation under denominator cap");
    Rat r(negative ? -p1 : p1, q1);
    if (std::abs(to_double(r) - x) > 1e-12)
        throw std::invalid_argument("rationalize: value is not a small fraction");
    return r;
}

Rat rat_transition_prob(const RatTensor& transitions, const std::vector<Rat>& belief, int state,
                        int action, int next_state) {
    Rat p(0, 1);
    for (std::size_t i = 0; i < belief.size(); ++i)
        p = p + belief[i] * transitions[i][static_cast<std::size_t>(state)]
                                       [static_cast<std::size_t>(action)][static_cast<std::size_t>(next_state)];
    return p;
}

std::vector<Rat> rat_belief_update(const RatTensor& transitions, const std::vector<Rat>& belief,
                                   int state, int action, int next_state) {
    std::vector<Rat> numerators(belief.size());
    Rat denom(0, 1);
    for (std::size_t i = 0; i < belief.size(); ++i) {
        numerators[i] = transitions[i][static_cast<std::size_t>(state)]
                                   [static_cast<std::size_t>(action)][static_cast<std::size_t>(next_state)] *
                        belief[i];
        denom = denom + numerators[i];
    }
    if (denom.num == 0) return {};
    for (Rat& n : numerators) n = n / denom;
    return numerators;
}

}  // namespace mdpsift
