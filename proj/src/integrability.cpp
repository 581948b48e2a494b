#include "thetars/integrability.hpp"

namespace thetars {

PotentialTrunc assemblePotential(CorrelatorEngine& eng, int order,
                                 const std::vector<std::pair<int, int>>& gnList) {
    PotentialTrunc Z;
    Z.r = eng.r();
    Z.s = eng.s();
    Z.order = order;
    for (const auto& [g, n] : gnList) {
        if (2 * g - 2 + n < 1 || 2 * g - 2 + n > order) continue;
        const CorrelatorTable& t = eng.omega(g, n);
        Rat norm = ratPow(Rat(-Z.r), 2 * g - 2 + n);
        for (const auto& [m, v] : t.entries) {
            if (isZero(v)) continue;
            std::vector<int> ms = m;
            std::sort(ms.begin(), ms.end());
            auto& slot = Z.F[{g, n}][ms];
            // the table is symmetric; keep one representative
            slot = norm * v;
        }
    }
    return Z;
}

InitialCondition initialConditions(const PotentialTrunc& Z, int alpha, int N) {
    const int r = Z.r, s = Z.s;
    if (alpha < 1 || alpha > r - 1) throw std::domain_error("alpha outside [r-1]");
    InitialCondition ic;
    ic.alpha = alpha;
    ic.orderChecked = N;
    for (const auto& [gn, mp] : Z.F) {
        auto [g, n] = gn;
        if (n < 2) continue;
        int lam = 2 * g - 2 + n;
        if (lam > N) continue;
        std::vector<int> m(n, 1);
        m[n - 1] = alpha;
        std::sort(m.begin(), m.end());
        Rat C = Z.coeffC(g, n, m);
        if (isZero(C)) continue;
        Rat fact(1);
        for (int t = 2; t <= n - 2; ++t) fact *= t;
        ic.series[{lam, n - 2}] += C / fact;
    }
    for (auto it = ic.series.begin(); it != ic.series.end();)
        it = isZero(it->second) ? ic.series.erase(it) : std::next(it);

    if (s == 1) {
        // closed form d_alpha (hbar/(1-hbar x_1))^{alpha+1}; d_alpha vanishes
        // for even alpha
        if (alpha % 2 == 1) {
            int g = (alpha + 1) / 2;
            ic.dAlpha = Rat(alpha) * Z.coeffC(g, 1, {alpha});
        } else {
            ic.dAlpha = Rat(0);
        }
        std::map<std::pair<int, int>, Rat> expect;
        for (int j = 0; alpha + 1 + j <= N; ++j)
            if (!isZero(ic.dAlpha)) expect[{alpha + 1 + j, j}] = ic.dAlpha * binomial(Rat(alpha + j), j);
        if (expect != ic.series)
            throw FormMismatch("normal coordinate u_" + std::to_string(alpha) +
                               " misses its closed geometric form");
        ic.closedFormS1 = true;
    } else {
        // support predicate: alpha = s(2g-2+n) - n + 1
        for (const auto& [key, v] : ic.series) {
            auto [lam, j] = key;
            int n = j + 2;
            if (alpha != s * lam - n + 1)
                throw FormMismatch("u_" + std::to_string(alpha) +
                                   " has support outside the dimension locus");
        }
    }
    return ic;
}

DPoly stringEquationResidual(const PotentialTrunc& Z, const Rat& dOne, int hMax, int degMax,
                             int varMax) {
    WOperator op;
    op.r = Z.r;
    op.s = Z.s;
    op.terms.push_back({Rat(1), 1, {}, {1}});
    int mx = std::min(varMax, Z.maxVarIndex());
    for (int m = 1; m <= mx; ++m) op.terms.push_back({Rat(-m), 2, {m}, {m}});
    op.terms.push_back({-dOne, 2, {}, {}});
    return applyToPotential(op, Z, hMax, degMax, varMax);
}

}  // namespace thetars
