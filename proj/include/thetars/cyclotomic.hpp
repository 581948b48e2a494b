#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "thetars/rational.hpp"

namespace thetars {

struct NotRational : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shared data for the quotient ring Q[x]/Phi_n(x): the cyclotomic polynomial
// and reduction rows for x^k, deg(Phi) <= k <= 2 deg(Phi) - 2.
struct CycRing {
    int order = 0;                             // n; elements are residues mod Phi_n
    int deg = 0;                               // phi(n)
    std::vector<Rat> phi;                      // monic Phi_n, low-to-high, size deg+1
    std::vector<std::vector<Rat>> powRows;     // x^(deg+i) reduced, i = 0..deg-2
    std::vector<std::vector<Rat>> genPow;      // x^k reduced for k = 0..n-1

    static const CycRing& get(int order);
};

// Element of Q[x]/Phi_n(x). For order n = 2r the residue of x is a primitive
// 2r-th root of unity eta; theta = eta^2 is the primitive r-th root used by
// sheet substitutions and root-of-unity sums.
class Cyc {
  public:
    Cyc() : order_(0) {}
    explicit Cyc(int order) : order_(order), c_(CycRing::get(order).deg, Rat(0)) {}
    Cyc(int order, const Rat& r) : Cyc(order) { c_[0] = r; }

    static Cyc etaPow(int order, long e);
    static Cyc thetaPow(int order, long e) { return etaPow(order, 2 * e); }

    int order() const { return order_; }
    bool isZero() const;
    bool isRational() const;
    // Degree-0 coefficient; throws NotRational if any higher coefficient
    // survives (a Galois-invariant sum must never do that).
    Rat rationalPart() const;

    const std::vector<Rat>& coeffs() const { return c_; }

    Cyc operator-() const;
    Cyc& operator+=(const Cyc& o);
    Cyc& operator-=(const Cyc& o);
    Cyc operator+(const Cyc& o) const { Cyc t = *this; t += o; return t; }
    Cyc operator-(const Cyc& o) const { Cyc t = *this; t -= o; return t; }
    Cyc operator*(const Cyc& o) const;
    Cyc& operator*=(const Cyc& o) { *this = *this * o; return *this; }
    Cyc operator*(const Rat& s) const;
    Cyc& operator*=(const Rat& s) { *this = *this * s; return *this; }
    bool operator==(const Cyc& o) const;
    bool operator!=(const Cyc& o) const { return !(*this == o); }

    // Multiplicative inverse in the cyclotomic field (Phi_n is irreducible).
    Cyc inverse() const;

    std::string str() const;

  private:
    int order_;
    std::vector<Rat> c_;
    friend Cyc cycReduce(const std::map<long, Rat>& poly, int order);
};

// Canonical representative of an integer-indexed power sum of eta.
Cyc cycReduce(const std::map<long, Rat>& poly, int order);

}  // namespace thetars
