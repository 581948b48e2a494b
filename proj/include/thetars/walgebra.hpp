#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "thetars/cyclotomic.hpp"
#include "thetars/rational.hpp"

namespace thetars {

struct CutoffTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConstraintViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonTriangular : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A_i = e_i((2l+s-r-1)/(2(r-s)), l in [r-s]); zero for odd i.
Rat aConstant(int r, int s, int i);

// Psi^{(j)}_r(a_{2j+1},...,a_i): the root-of-unity pair sum with i = 2j+#args;
// depends on the arguments mod r only. Rational whenever sum(args) = 0 mod r.
Cyc psiSum(int r, int j, const std::vector<long>& args);

// Polynomials in x_1, x_2, ... graded by hbar: (hbar power, sorted monomial)
// -> coefficient.
using XMonomial = std::vector<int>;
using DPoly = std::map<std::pair<int, XMonomial>, Rat>;

// Truncated store of the free energies: C_{g,n}(m_1<=...<=m_n) such that
// log Z = sum_{g,n} hbar^{2g-2+n}/n! sum_{ordered m} C_{g,n}(m) prod x_{m_i}.
struct PotentialTrunc {
    int r = 0, s = 0;
    int order = 0;  // complete for 2g-2+n <= order
    std::map<std::pair<int, int>, std::map<std::vector<int>, Rat>> F;

    Rat coeffC(int g, int n, std::vector<int> m) const {
        std::sort(m.begin(), m.end());
        auto it = F.find({g, n});
        if (it == F.end()) return Rat(0);
        auto jt = it->second.find(m);
        return jt == it->second.end() ? Rat(0) : jt->second;
    }
    void setCoeffC(int g, int n, std::vector<int> m, const Rat& v) {
        std::sort(m.begin(), m.end());
        if (isZero(v))
            F[{g, n}].erase(m);
        else
            F[{g, n}][m] = v;
    }
    int maxVarIndex() const {
        int mx = 0;
        for (const auto& [gn, mp] : F)
            for (const auto& [m, v] : mp)
                for (int mi : m) mx = std::max(mx, mi);
        return mx;
    }
    bool dependsOnMultiplesOfR() const {
        for (const auto& [gn, mp] : F)
            for (const auto& [m, v] : mp)
                for (int mi : m)
                    if (mi % r == 0 && !isZero(v)) return true;
        return false;
    }
};

// One normal-ordered summand of a W-mode: coef * hbar^h * prod x_q prod d/dx_p.
struct WTerm {
    Rat coef;
    int hbar = 0;
    std::vector<int> xs;    // multiplication indices q
    std::vector<int> ders;  // derivative indices p (positive)
};

struct WOperator {
    int r = 0, s = 0, i = 0, k = 0;
    std::vector<WTerm> terms;
};

// The mode H^i_k restricted to derivative indices <= posMax and
// multiplication indices <= negMax. Dilaton contributions at p = -s are
// expanded into their x_s and -1/hbar branches.
WOperator wMode(int r, int s, int i, int k, int posMax, int negMax);

// Z^{-1} (op Z), truncated to hbar <= hMax, monomial degree <= degMax and
// variable indices <= varMax. Exact within that window provided the
// potential is complete for 2g-2+n <= hMax-1 (each derivative block of the
// exponential costs at least one power of hbar).
DPoly applyToPotential(const WOperator& op, const PotentialTrunc& Z, int hMax, int degMax,
                       int varMax);

struct WReportItem {
    int i = 0, k = 0;
    bool ok = true;
    std::string detail;
};
struct WVerifyReport {
    std::vector<WReportItem> items;
    int kChecked = 0;
    bool allOk() const {
        for (auto& it : items)
            if (!it.ok) return false;
        return true;
    }
};

// Checks H^i_k Z = hbar^i A_i delta_{k,0} Z for i in [r-s], k >= 0, and
// H^i_k Z = 0 for r-s < i <= r, k >= r-s-i+1, on the stated window.
WVerifyReport verifyWConstraints(const PotentialTrunc& Z, int hMax, int degMax, int varMax);

// Gap set K_{r,s}, the mode index set I_{r,s} and the map (i,k) -> (i-1)s+rk.
struct IndexSets {
    int r = 0, s = 0, bound = 0;
    std::vector<int> gaps;

    static IndexSets build(int r, int s, int bound);
    bool isGap(int m) const {
        return std::binary_search(gaps.begin(), gaps.end(), m);
    }
    bool inIndexSet(int i, int k) const {
        if (i < 1 || i > r) return false;
        return (i <= r - s) ? k >= 0 : k >= r - s - i + 1;
    }
    long piMap(int i, int k) const { return (long)(i - 1) * s + (long)r * k; }
    // image = positives \ gaps, gcd(r,s)-to-one: verified by enumeration
    bool verifyImage(std::string* detail = nullptr) const;
};

// Leading coefficient C_l of the constraint whose hbar-linear part is
// C_l hbar d/dx_l; used by the triangular reconstruction.
Rat leadingCoefficient(int r, int s, int i, int k);

// Finds (i,k) in I_{r,s} with (i-1)s + rk = l and nonzero leading
// coefficient; throws NonTriangular when none exists.
std::pair<int, int> generatorForIndex(int r, int s, long l);

// Rebuilds the full potential from the reduced one (coefficients supported
// on gap-set monomials only), recursively in 2g-2+n <= order.
PotentialTrunc reconstructPotential(int r, int s, const PotentialTrunc& reduced, int order,
                                    int varMax);

}  // namespace thetars
