#include "thetars/wave.hpp"

namespace thetars {

WaveTable::WaveTable(int r, int s) : r_(r), s_(s) {
    if (r < 2 || s < 1 || s > r - 1) throw std::domain_error("wave table needs r >= 2, s in [r-1]");
    // The stationary-phase expansion fixes the propagator sign once; a
    // mismatch against the defining relations means the moment bookkeeping
    // broke, so fail at construction.
    if (!checkRelations(*this, 1 - (r - s) - 2, r + 2, 2).empty())
        throw OracleMismatch("wave coefficients fail the defining relations at low order");
}

Rat WaveTable::gTail(long j) const {
    // Phase g(u) = u^{s-r} + ((r-s)/s) u^s about u = 1: g(1+t) = r/s +
    // (r(r-s)/2) t^2 + sum_{j>=3} g_j t^j.
    return binomial(Rat(s_ - r_), j) + ratOf(r_ - s_, s_) * binomial(Rat(s_), j);
}

Rat WaveTable::coeff(long k, long m) const {
    if (m < 0) return Rat(0);
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = memo_.find({k, m});
        if (it != memo_.end()) return it->second;
    }
    // Gaussian moments with propagator <t^2> = -(hbar z^{-s})/(r(r-s));
    // the coefficient of (hbar z^{-s})^m collects all count vectors {c_j}
    // of cubic-and-higher phase insertions with sum_j (j-2) c_j <= 2m.
    const Rat nu = Rat(k - 1) + ratOf(s_ - r_ - 1, 2);
    const Rat prop = ratOf(-1, (long)r_ * (r_ - s_));
    Rat total(0);
    long budget = 2 * m;

    struct Walker {
        const WaveTable& t;
        const Rat& nu;
        const Rat& prop;
        long m;
        Rat total = Rat(0);
        void rec(long j, long budgetLeft, long a, long sumJ, Rat prod) {
            // close the current count vector
            long n = m + a;
            long p = 2 * n - sumJ;
            if (p >= 0) {
                Rat term = prod * binomial(nu, p) * doubleFactorialOdd(n) * ratPow(prop, n);
                total += term;
            }
            // extend with insertions of order j' >= j
            for (long jp = j; jp - 2 <= budgetLeft; ++jp) {
                Rat gj = t.gTail(jp);
                if (isZero(gj)) continue;
                Rat fact = prod;
                long cnt = 1;
                long used = jp - 2;
                while (used <= budgetLeft) {
                    fact *= gj / Rat(cnt);
                    rec(jp + 1, budgetLeft - used, a + cnt, sumJ + jp * cnt, fact);
                    ++cnt;
                    used += jp - 2;
                }
            }
        }
    } w{*this, nu, prop, m};
    w.rec(3, budget, 0, 0, Rat(1));
    total = w.total;

    std::lock_guard<std::mutex> lock(mu_);
    memo_[{k, m}] = total;
    return total;
}

std::vector<RelationViolation> checkRelations(const WaveTable& t, long kLo, long kHi, long M) {
    std::vector<RelationViolation> out;
    const int r = t.r(), s = t.s();
    for (long k = kLo; k <= kHi; ++k) {
        for (long m = 0; m <= M; ++m) {
            // hbar d/dx psi_k = psi_{k+s-r}, in coefficient form.
            Rat r1 = t.coeff(k + s - r, m) - t.coeff(k, m);
            if (m >= 1)
                r1 -= (ratOf(2 * k - r - 1, 2) - Rat(s) * Rat(m - 1)) / Rat(r) * t.coeff(k, m - 1);
            if (!isZero(r1)) out.push_back({"d/dx", k, m, r1});
            // x psi_k = psi_{k+r} + hbar ((2k+r-s-1)/(2(r-s))) psi_{k+r-s}.
            Rat r2 = t.coeff(k, m) - t.coeff(k + r, m);
            if (m >= 1) r2 -= ratOf(2 * k + r - s - 1, 2 * (long)(r - s)) * t.coeff(k + r - s, m - 1);
            if (!isZero(r2)) out.push_back({"x-mult", k, m, r2});
        }
    }
    return out;
}

RatSeries relationResidualSeries(const WaveTable& t, const std::string& relation, long k, long M) {
    const int r = t.r(), s = t.s();
    VarWindow zw{-(int)(s * M) - 1, 1};
    RatSeries out(1, {zw}, {0, (int)M});
    for (long m = 0; m <= M; ++m) {
        Rat res;
        if (relation == "d/dx") {
            res = t.coeff(k + s - r, m) - t.coeff(k, m);
            if (m >= 1)
                res -= (ratOf(2 * k - r - 1, 2) - Rat(s) * Rat(m - 1)) / Rat(r) * t.coeff(k, m - 1);
        } else if (relation == "x-mult") {
            res = t.coeff(k, m) - t.coeff(k + r, m);
            if (m >= 1)
                res -= ratOf(2 * k + r - s - 1, 2 * (long)(r - s)) * t.coeff(k + r - s, m - 1);
        } else {
            throw std::invalid_argument("unknown relation " + relation);
        }
        int e = (int)(-s * m);
        out.addTerm(&e, (int)m, res);
    }
    return out;
}

ConnectionMatrix ConnectionMatrix::build(int r, int s) {
    ConnectionMatrix d;
    d.r = r;
    d.s = s;
    d.e.assign(r, std::vector<Entry>(r));
    for (int k = 1; k <= r - s; ++k) {
        d.e[k - 1][k - 1].beta = ratOf(2 * k + s - r - 1, 2 * (long)(r - s));
        d.e[k - 1][k + s - 1].alpha = Rat(1);
    }
    for (int k = r - s + 1; k <= r; ++k) d.e[k - 1][k - (r - s) - 1].gamma = Rat(1);
    return d;
}

Rat ConnectionMatrix::trace() const {
    Rat t(0);
    for (int k = 1; k <= r; ++k) t += at(k, k).gamma;
    return t;  // the 1/x parts cancel pairwise; only gamma survives off the fiber
}

CycSeries applyConnectionEntry(const ConnectionMatrix::Entry& en, const CycSeries& s, int r) {
    CycSeries out(s.nvars(), s.windows(), s.hbarWindow());
    if (!isZero(en.gamma)) {
        CycSeries t = s;
        t.scaleRat(en.gamma);
        out += t;
    }
    std::vector<int> shift(s.nvars(), 0);
    shift[0] = -r;
    if (!isZero(en.alpha)) {
        CycSeries t = s.shifted(shift, 0);
        t.scaleRat(en.alpha);
        out += t;
    }
    if (!isZero(en.beta)) {
        CycSeries t = s.shifted(shift, 1);
        t.scaleRat(en.beta);
        out += t;
    }
    return out;
}

WaveMatrix::WaveMatrix(const WaveTable& table, int M, int zHalfWidth)
    : table_(table), M_(M), conn_(ConnectionMatrix::build(table.r(), table.s())) {
    const int r = table.r(), s = table.s();
    const int order = 2 * r;
    int W = zHalfWidth > 0 ? zHalfWidth : 2 * (s * M + 2 * r + 2);
    zwin_ = {-W, W};
    hwin_ = {0, M + 1};
    psiHat_.assign(r, std::vector<CycSeries>(r));
    psiInvHat_.assign(r, std::vector<CycSeries>(r));
    for (int k = 1; k <= r; ++k) {
        for (int a = 1; a <= r; ++a) {
            CycSeries ps(1, {zwin_}, hwin_);
            for (int m = 0; m <= M; ++m) {
                int e = k - 1 - s * m;
                ps.addTerm(&e, m, Cyc::thetaPow(order, (long)a * e) * table.coeff(k, m));
            }
            psiHat_[k - 1][a - 1] = std::move(ps);

            int j = (k <= r - s) ? 1 - k : r + 1 - k;
            int xpow = (k <= r - s) ? r : 0;
            CycSeries pi(1, {zwin_}, hwin_);
            for (int m = 0; m <= M; ++m) {
                int e = j - 1 - s * m;  // theta power tracks the sheet before the x-factor
                int ee = e + xpow;
                pi.addTerm(&ee, m, Cyc::thetaPow(order, (long)a * e) * table.dualCoeff(j, m));
            }
            psiInvHat_[a - 1][k - 1] = std::move(pi);
        }
    }
}

CycSeries WaveMatrix::productEntry(int k, int kp) const {
    const int r = table_.r();
    const int order = 2 * r;
    CycSeries acc(1, {zwin_}, hwin_);
    for (int a = 1; a <= r; ++a) {
        CycSeries prod = psiHat_[k - 1][a - 1].mul(psiInvHat_[a - 1][kp - 1], {zwin_}, hwin_);
        prod.scale(Cyc::thetaPow(order, -(long)a * (r - 1)));
        acc += prod;
    }
    std::vector<int> shift{1 - r};
    acc = acc.shifted(shift, 0);
    acc.scaleRat(ratOf(1, r));
    acc.compress();
    return acc;
}

void WaveMatrix::verifyInverse() const {
    const int r = table_.r();
    for (int k = 1; k <= r; ++k) {
        for (int kp = 1; kp <= r; ++kp) {
            CycSeries p = productEntry(k, kp);
            bool ok = true;
            p.forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
                if (h > M_) return;  // beyond certified order
                Cyc expect = (k == kp && e[0] == 0 && h == 0) ? Cyc(2 * r, Rat(1)) : Cyc(2 * r);
                if (!(v == expect)) ok = false;
            });
            if (k == kp) {
                std::vector<int> z{0};
                if (!(p.coeff(z, 0) == Cyc(2 * r, Rat(1)))) ok = false;
            }
            if (!ok)
                throw InverseMismatch("wave matrix product deviates from identity at entry (" +
                                      std::to_string(k) + "," + std::to_string(kp) + ")");
        }
    }
}

CycSeries WaveMatrix::systemResidual(int k, int a) const {
    const int r = table_.r(), s = table_.s();
    const int order = 2 * r;
    const CycSeries& ph = psiHat_[k - 1][a - 1];
    // hbar d/dx acting through the exponential charge, the half-density
    // prefactor, and the series itself:
    CycSeries lhs(1, {zwin_}, hwin_);
    {
        std::vector<int> sh{s - r};
        CycSeries t = ph.shifted(sh, 0);
        t.scale(Cyc::thetaPow(order, (long)a * s));
        lhs += t;
    }
    {
        std::vector<int> sh{-r};
        CycSeries t = ph.shifted(sh, 1);
        t.scaleRat(ratOf(-(long)(r - 1), 2 * (long)r));
        lhs += t;
    }
    {
        CycSeries d = ph.derivative(0);
        std::vector<int> sh{1 - r};
        d = d.shifted(sh, 1);
        d.scaleRat(ratOf(1, r));
        lhs += d;
    }
    for (int kp = 1; kp <= r; ++kp) {
        const auto& en = conn_.at(k, kp);
        if (en.zero()) continue;
        lhs += -applyConnectionEntry(en, psiHat_[kp - 1][a - 1], r);
    }
    lhs.compress();
    return lhs;
}

CycSeries WaveMatrix::inverseSystemResidual(int a, int k) const {
    const int r = table_.r(), s = table_.s();
    const int order = 2 * r;
    const CycSeries& pi = psiInvHat_[a - 1][k - 1];
    // -hbar d/dx Psi^{-1} = Psi^{-1} D; the dual charge differentiates with
    // the opposite sign.
    CycSeries lhs(1, {zwin_}, hwin_);
    {
        std::vector<int> sh{s - r};
        CycSeries t = pi.shifted(sh, 0);
        t.scale(Cyc::thetaPow(order, (long)a * s));
        lhs += t;
    }
    {
        std::vector<int> sh{-r};
        CycSeries t = pi.shifted(sh, 1);
        t.scaleRat(ratOf((long)(r - 1), 2 * (long)r));
        lhs += t;
    }
    {
        CycSeries d = pi.derivative(0);
        std::vector<int> sh{1 - r};
        d = d.shifted(sh, 1);
        d.scaleRat(ratOf(-1, r));
        lhs += d;
    }
    for (int kp = 1; kp <= r; ++kp) {
        const auto& en = conn_.at(kp, k);
        if (en.zero()) continue;
        lhs += -applyConnectionEntry(en, psiInvHat_[a - 1][kp - 1], r);
    }
    lhs.compress();
    return lhs;
}

}  // namespace thetars
