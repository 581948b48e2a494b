#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace thetars {

// Exact rational scalar. GMP keeps values in lowest terms with positive
// denominator, which is the canonical form used throughout.
using Rat = mpq_class;

inline Rat ratOf(long num, long den = 1) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    Rat q(num, den);
    q.canonicalize();
    return q;
}

inline bool isZero(const Rat& q) { return sgn(q) == 0; }
inline bool isInteger(const Rat& q) { return q.get_den() == 1; }

// Serialized form is "p/q" in lowest terms ("p" when q == 1).
inline std::string toString(const Rat& q) { return q.get_str(); }

inline Rat ratFromString(const std::string& s) {
    Rat q;
    if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal: " + s);
    q.canonicalize();
    return q;
}

inline Rat ratPow(const Rat& base, long e) {
    if (e == 0) return Rat(1);
    Rat b = base;
    bool inv = e < 0;
    unsigned long n = inv ? -(unsigned long)e : (unsigned long)e;
    Rat acc(1);
    while (n) {
        if (n & 1) acc *= b;
        b *= b;
        n >>= 1;
    }
    if (inv) {
        if (isZero(acc)) throw std::domain_error("inverse of zero");
        acc = Rat(1) / acc;
    }
    return acc;
}

inline Rat binomial(const Rat& top, long p) {
    // Generalized binomial coefficient; top may be any rational.
    if (p < 0) return Rat(0);
    Rat acc(1);
    for (long t = 0; t < p; ++t) acc *= (top - t) / Rat(t + 1);
    return acc;
}

inline Rat doubleFactorialOdd(long n) {
    // (2n-1)!! with the convention (-1)!! = 1.
    Rat acc(1);
    for (long t = 1; t <= 2 * n - 1; t += 2) acc *= t;
    return acc;
}

// m!^{(r)} = m (m-r) (m-2r) ... down to the representative in [1, r].
inline Rat multifactorial(long m, long r) {
    if (m < 1 || r < 1) throw std::domain_error("multifactorial needs m,r >= 1");
    Rat acc(1);
    while (m > 0) {
        acc *= m;
        m -= r;
    }
    return acc;
}

}  // namespace thetars
