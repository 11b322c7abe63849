#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace mdpsift {

// Exact fraction support for golden tests of the belief arithmetic.  Kept
// deliberately small: normalized int64 numerator/denominator with __int128
// intermediates, throwing on overflow rather than silently degrading.
struct Rat {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rat() = default;
    Rat(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw std::invalid_argument("Rat: zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        if (num == 0) den = 1;
    }

    bool operator==(const Rat& other) const = default;
};

namespace detail {
inline Rat reduce128(__int128 n, __int128 d) {
    if (d == 0) throw std::invalid_argument("Rat: zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    __int128 a = n < 0 ? -n : n;
    __int128 b = d;
    while (b != 0) {
        const __int128 t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        n /= a;
        d /= a;
    }
    const __int128 lim = static_cast<__int128>(INT64_MAX);
    if (n > lim || n < -lim || d > lim) throw std::overflow_error("Rat: overflow");
    Rat r;
    r.num = static_cast<std::int64_t>(n);
    r.den = static_cast<std::int64_t>(d);
    if (r.num == 0) r.den = 1;
    return r;
}
}  // namespace detail

inline Rat operator+(const Rat& a, const Rat& b) {
    return detail::reduce128(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                             static_cast<__int128>(a.den) * b.den);
}

inline Rat operator*(const Rat& a, const Rat& b) {
    return detail::reduce128(static_cast<__int128>(a.num) * b.num,
                             static_cast<__int128>(a.den) * b.den);
}

inline Rat operator/(const Rat& a, const Rat& b) {
    if (b.num == 0) throw std::invalid_argument("Rat: division by zero");
    return detail::reduce128(static_cast<__int128>(a.num) * b.den,
                             static_cast<__int128>(a.den) * b.num);
}

inline double to_double(const Rat& r) { return static_cast<double>(r.num) / static_cast<double>(r.den); }

// Continued-fraction recovery of a fraction with denominator <= max_den.
// Used to lift stored doubles that originated from exact small fractions back
// to exact form; throws when no denominator that small reproduces the value
// to 1e-12.
Rat rationalize(double x, std::int64_t max_den = 1000000);

// Exact counterparts of transition_prob / belief_update over rational tensors.
// transitions indexed [model][state][action][next_state].
using RatTensor = std::vector<std::vector<std::vector<std::vector<Rat>>>>;

struct ModelFamily;

// Lifts a family's stored doubles to exact fractions; throws when any entry
// is not a small fraction (see rationalize).
RatTensor rationalize_transitions(const ModelFamily& family, std::int64_t max_den = 1000000);
std::vector<Rat> rationalize_vector(const std::vector<double>& values,
                                    std::int64_t max_den = 1000000);

Rat rat_transition_prob(const RatTensor& transitions, const std::vector<Rat>& belief, int state,
                        int action, int next_state);

// Empty result means unreachable (zero denominator).
std::vector<Rat> rat_belief_update(const RatTensor& transitions, const std::vector<Rat>& belief,
                                   int state, int action, int next_state);

}  // namespace mdpsift
