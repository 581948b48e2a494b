#include "thetars/walgebra.hpp"

#include <algorithm>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>

#include "thetars/correlators.hpp"

namespace thetars {

Rat aConstant(int r, int s, int i) { return loopShiftConstant(r, s, i); }

namespace {

std::mutex g_psiMutex;
std::map<std::tuple<int, int, std::vector<long>>, Cyc> g_psiCache;

// pair factor theta^{m1+m2}/(theta^{m1}-theta^{m2})^2
const std::vector<std::vector<Cyc>>& pairFactors(int r) {
    static std::map<int, std::vector<std::vector<Cyc>>> cache;
    auto it = cache.find(r);
    if (it != cache.end()) return it->second;
    int order = 2 * r;
    std::vector<std::vector<Cyc>> pf(r, std::vector<Cyc>(r));
    for (int m1 = 0; m1 < r; ++m1)
        for (int m2 = 0; m2 < r; ++m2) {
            if (m1 == m2) continue;
            Cyc den = Cyc::thetaPow(order, m1) - Cyc::thetaPow(order, m2);
            pf[m1][m2] = Cyc::thetaPow(order, m1 + m2) * (den * den).inverse();
        }
    return cache.emplace(r, std::move(pf)).first->second;
}

}  // namespace

Cyc psiSum(int r, int j, const std::vector<long>& args) {
    int i = 2 * j + (int)args.size();
    if (i > r) return Cyc(2 * r);  // no tuple of pairwise-distinct residues exists
    std::vector<long> key = args;
    for (long& a : key) a = ((a % r) + r) % r;
    std::sort(key.begin(), key.end());
    {
        std::lock_guard<std::mutex> lock(g_psiMutex);
        auto it = g_psiCache.find({r, j, key});
        if (it != g_psiCache.end()) return it->second;
    }
    const int order = 2 * r;
    const auto& pf = pairFactors(r);
    Cyc total(order);
    std::vector<int> m(i);
    std::vector<bool> used(r, false);
    std::function<void(int)> rec = [&](int pos) {
        if (pos == i) {
            Cyc term(order, Rat(1));
            for (int t = 0; t < j; ++t) term *= pf[m[2 * t]][m[2 * t + 1]];
            long power = 0;
            for (size_t l = 0; l < key.size(); ++l) power -= m[2 * j + l] * key[l];
            term *= Cyc::thetaPow(order, power);
            total += term;
            return;
        }
        for (int v = 0; v < r; ++v) {
            if (used[v]) continue;
            used[v] = true;
            m[pos] = v;
            rec(pos + 1);
            used[v] = false;
        }
    };
    rec(0);
    // the 1/i! normalization
    Rat fact(1);
    for (int t = 2; t <= i; ++t) fact *= t;
    total *= Rat(1) / fact;
    std::lock_guard<std::mutex> lock(g_psiMutex);
    g_psiCache[{r, j, key}] = total;
    return total;
}

WOperator wMode(int r, int s, int i, int k, int posMax, int negMax) {
    if (i < 1 || i > r) throw std::domain_error("mode weight out of [r]");
    if (negMax < s) throw CutoffTooSmall("multiplication cutoff below the dilaton index");
    WOperator op;
    op.r = r;
    op.s = s;
    op.i = i;
    op.k = k;
    Rat rPow = ratPow(Rat(r), i);

    for (int j = 0; 2 * j <= i; ++j) {
        int u = i - 2 * j;
        // i! / (2^j j! (i-2j)!)
        Rat comb(1);
        for (int t = 2; t <= i; ++t) comb *= t;
        for (int t = 2; t <= u; ++t) comb /= t;
        for (int t = 1; t <= j; ++t) comb /= Rat(2 * t);

        if (u == 0) {
            if (k != 0) continue;  // the empty product carries delta_{k,0}
            Rat psi = psiSum(r, j, {}).rationalPart();
            if (!isZero(psi)) op.terms.push_back({comb * psi / rPow, i, {}, {}});
            continue;
        }

        // nondecreasing multisets p_1 <= ... <= p_u, p != 0, sum = rk
        std::vector<int> p(u);
        long target = (long)r * k;
        std::function<void(int, int, long)> rec = [&](int pos, int low, long sum) {
            if (pos == u) {
                if (sum != target) return;
                // multiplicity factor: number of orderings of the multiset
                Rat orderings(1);
                for (int t = 2; t <= u; ++t) orderings *= t;
                int run = 1;
                for (int t = 1; t < u; ++t) {
                    if (p[t] == p[t - 1])
                        ++run;
                    else
                        run = 1;
                    if (run > 1) orderings /= run;
                }
                std::vector<long> args(p.begin(), p.end());
                Rat psi;
                {
                    Cyc c = psiSum(r, j, args);
                    if (!c.isRational())
                        throw ConstraintViolation("mode sum fails Galois rationality");
                    psi = c.rationalPart();
                }
                if (isZero(psi)) return;
                Rat base = comb * orderings * psi / rPow;
                // expand the dilaton binomials at p = -s
                std::vector<int> xsFixed, ders;
                int d = 0;
                Rat negProd(1);
                for (int v : p) {
                    if (v > 0)
                        ders.push_back(v);
                    else if (v == -s)
                        ++d;
                    else {
                        xsFixed.push_back(-v);
                        negProd *= Rat(-v);
                    }
                }
                for (int t = 0; t <= d; ++t) {
                    Rat c = base * negProd * binomial(Rat(d), t) * ratPow(Rat(s), d - t);
                    if (t % 2) c = -c;
                    WTerm term;
                    term.coef = c;
                    term.hbar = i - t;
                    term.xs = xsFixed;
                    for (int cnt = 0; cnt < d - t; ++cnt) term.xs.push_back(s);
                    term.ders = ders;
                    std::sort(term.xs.begin(), term.xs.end());
                    op.terms.push_back(std::move(term));
                }
                return;
            }
            int remaining = u - pos;
            for (int v = low; v <= posMax; ++v) {
                if (v == 0) continue;
                // feasibility: remaining values in [v, posMax]
                long lo = sum + (long)v * remaining;
                long hi = sum + (long)posMax * remaining;
                if (target < lo || target > hi) {
                    if (target < lo) break;
                    continue;
                }
                p[pos] = v;
                rec(pos + 1, v, sum + v);
            }
        };
        rec(0, -negMax, 0);
    }
    return op;
}

namespace {

// derivative of the coefficient-form free energy by a multiset of indices
DPoly blockDerivative(const PotentialTrunc& Z, const std::vector<int>& block, int degMax,
                      int varMax, int hMax) {
    DPoly out;
    std::map<int, int> bCount;
    for (int p : block) bCount[p]++;
    for (const auto& [gn, mp] : Z.F) {
        int h = 2 * gn.first - 2 + gn.second;
        if (h > hMax) continue;
        for (const auto& [m, C] : mp) {
            std::map<int, int> e;
            for (int mi : m) e[mi]++;
            bool ok = true;
            Rat factor = C;
            XMonomial rest;
            for (const auto& [v, cnt] : e) {
                int b = bCount.count(v) ? bCount.at(v) : 0;
                if (b > cnt) {
                    ok = false;
                    break;
                }
                // C / prod e! times falling factorials = C / prod (e-b)!
                for (int t = 2; t <= cnt - b; ++t) factor /= t;
                for (int t = 0; t < cnt - b; ++t) rest.push_back(v);
            }
            if (!ok) continue;
            for (const auto& [v, cnt] : bCount)
                if (!e.count(v) || e[v] < cnt) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            if ((int)rest.size() > degMax) continue;
            bool fits = true;
            for (int v : rest)
                if (v > varMax) fits = false;
            if (!fits) continue;
            out[{h, rest}] += factor;
        }
    }
    for (auto it = out.begin(); it != out.end();)
        it = isZero(it->second) ? out.erase(it) : std::next(it);
    return out;
}

void setPartitionsOf(int m, std::vector<std::vector<std::vector<int>>>& out) {
    std::vector<int> assign(m, 0);
    std::function<void(int, int)> rec = [&](int i, int used) {
        if (i == m) {
            std::vector<std::vector<int>> blocks(used);
            for (int j = 0; j < m; ++j) blocks[assign[j]].push_back(j);
            out.push_back(std::move(blocks));
            return;
        }
        for (int b = 0; b <= used; ++b) {
            assign[i] = b;
            rec(i + 1, std::max(used, b + 1));
        }
    };
    if (m > 0) rec(0, 0);
}

DPoly mulPoly(const DPoly& a, const DPoly& b, int hMax, int degMax, int varMax) {
    DPoly out;
    for (const auto& [ka, va] : a) {
        for (const auto& [kb, vb] : b) {
            int h = ka.first + kb.first;
            if (h > hMax) continue;
            if ((int)(ka.second.size() + kb.second.size()) > degMax) continue;
            XMonomial m = ka.second;
            m.insert(m.end(), kb.second.begin(), kb.second.end());
            std::sort(m.begin(), m.end());
            out[{h, m}] += va * vb;
        }
    }
    (void)varMax;
    for (auto it = out.begin(); it != out.end();)
        it = isZero(it->second) ? out.erase(it) : std::next(it);
    return out;
}

}  // namespace

DPoly applyToPotential(const WOperator& op, const PotentialTrunc& Z, int hMax, int degMax,
                       int varMax) {
    DPoly total;
    std::map<std::vector<int>, DPoly> derCache;
    for (const WTerm& term : op.terms) {
        if (term.hbar > hMax) continue;
        if ((int)term.xs.size() > degMax) continue;
        bool xsFit = true;
        for (int q : term.xs)
            if (q > varMax) xsFit = false;
        if (!xsFit) continue;
        // derivatives with indices divisible by r, or beyond the stored
        // support, annihilate the potential
        bool killed = false;
        int maxIdx = Z.maxVarIndex();
        for (int p : term.ders)
            if (p % Z.r == 0 || p > maxIdx) killed = true;
        if (killed) continue;
        if (!term.ders.empty() && term.hbar + 1 > hMax) continue;

        DPoly expanded;  // sum over partitions of the derivative multiset
        if (term.ders.empty()) {
            expanded[{0, {}}] = Rat(1);
        } else {
            std::vector<std::vector<std::vector<int>>> parts;
            setPartitionsOf((int)term.ders.size(), parts);
            for (const auto& blocks : parts) {
                DPoly prod;
                prod[{0, {}}] = Rat(1);
                bool dead = false;
                for (const auto& blk : blocks) {
                    std::vector<int> idx;
                    for (int pos : blk) idx.push_back(term.ders[pos]);
                    std::sort(idx.begin(), idx.end());
                    DPoly* dz;
                    auto itc = derCache.find(idx);
                    if (itc == derCache.end())
                        dz = &derCache.emplace(idx, blockDerivative(Z, idx, degMax, varMax, hMax))
                                  .first->second;
                    else
                        dz = &itc->second;
                    if (dz->empty()) {
                        dead = true;
                        break;
                    }
                    prod = mulPoly(prod, *dz, hMax - term.hbar, degMax, varMax);
                    if (prod.empty()) {
                        dead = true;
                        break;
                    }
                }
                if (dead) continue;
                for (const auto& [kk, vv] : prod) expanded[kk] += vv;
            }
        }
        for (const auto& [kk, vv] : expanded) {
            if (isZero(vv)) continue;
            int h = kk.first + term.hbar;
            if (h > hMax) continue;
            XMonomial m = kk.second;
            m.insert(m.end(), term.xs.begin(), term.xs.end());
            std::sort(m.begin(), m.end());
            if ((int)m.size() > degMax) continue;
            total[{h, m}] += vv * term.coef;
        }
    }
    for (auto it = total.begin(); it != total.end();)
        it = isZero(it->second) ? total.erase(it) : std::next(it);
    return total;
}

WVerifyReport verifyWConstraints(const PotentialTrunc& Z, int hMax, int degMax, int varMax) {
    WVerifyReport rep;
    const int r = Z.r, s = Z.s;
    int pMax = Z.maxVarIndex();
    for (int i = 1; i <= r; ++i) {
        int kLo = (i <= r - s) ? 0 : (r - s - i + 1);
        int kHi = (int)((long)(pMax + (long)(i - 1) * varMax) / r) + 1;
        rep.kChecked = std::max(rep.kChecked, kHi);
        for (int k = kLo; k <= kHi; ++k) {
            WOperator op = wMode(r, s, i, k, pMax, varMax);
            DPoly res = applyToPotential(op, Z, hMax, degMax, varMax);
            if (i <= r - s && k == 0) {
                Rat eig = aConstant(r, s, i);
                res[{i, {}}] -= eig;
                if (isZero(res[{i, {}}])) res.erase({i, {}});
            }
            // negative hbar powers must never appear
            WReportItem item{i, k, true, ""};
            std::ostringstream bad;
            for (const auto& [kk, vv] : res) {
                if (isZero(vv)) continue;
                item.ok = false;
                bad << " hbar^" << kk.first << " x(";
                for (size_t t = 0; t < kk.second.size(); ++t)
                    bad << (t ? "," : "") << kk.second[t];
                bad << ") = " << toString(vv) << ";";
                if ((int)bad.str().size() > 200) break;
            }
            if (!item.ok) item.detail = "residual non-zero:" + bad.str();
            rep.items.push_back(item);
        }
    }
    return rep;
}

IndexSets IndexSets::build(int r, int s, int bound) {
    IndexSets is;
    is.r = r;
    is.s = s;
    is.bound = bound;
    std::vector<bool> reachable(bound + 1, false);
    for (int a = 0; a * (r - s) <= bound; ++a)
        for (int b = 0; a * (r - s) + b * s <= bound; ++b) reachable[a * (r - s) + b * s] = true;
    for (int m = 1; m <= bound; ++m)
        if (!reachable[m]) is.gaps.push_back(m);
    return is;
}

bool IndexSets::verifyImage(std::string* detail) const {
    int g = std::gcd(r, s);
    std::map<int, int> hits;
    for (int i = 1; i <= r; ++i) {
        int kLo = (i <= r - s) ? 0 : (r - s - i + 1);
        for (int k = kLo;; ++k) {
            long m = piMap(i, k);
            if (m > bound) break;
            if (m >= 1) hits[(int)m]++;
        }
    }
    for (int m = 1; m <= bound; ++m) {
        bool gap = isGap(m);
        int h = hits.count(m) ? hits[m] : 0;
        if (gap && h != 0) {
            if (detail) *detail = "gap value " + std::to_string(m) + " is hit";
            return false;
        }
        if (gap) continue;
        // multiplicity is gcd(r,s)-to-one; in the non-coprime case the
        // smallest representable values can miss some of the gcd shifted
        // representations (non-negativity of the coin-exchange pair), so the
        // exact count is certified from s(r-s) upward
        if (h < 1 || h > g) {
            if (detail)
                *detail = "value " + std::to_string(m) + " hit " + std::to_string(h) +
                          " times, outside [1," + std::to_string(g) + "]";
            return false;
        }
        if (m >= s * (r - s) && h != g) {
            if (detail)
                *detail = "value " + std::to_string(m) + " hit " + std::to_string(h) +
                          " times, expected " + std::to_string(g);
            return false;
        }
    }
    return true;
}

Rat leadingCoefficient(int r, int s, int i, int k) {
    long l = (long)(i - 1) * s + (long)r * k;
    std::vector<long> args(i, -s);
    args[i - 1] = l;
    Cyc psi = psiSum(r, 0, args);
    Rat val = psi.rationalPart();
    // (hbar/r)^i * i * (-1/hbar)^{i-1} aggregated
    Rat c = Rat(i) / ratPow(Rat(r), i) * val;
    if ((i - 1) % 2) c = -c;
    return c;
}

std::pair<int, int> generatorForIndex(int r, int s, long l) {
    for (int i = 1; i <= r; ++i) {
        long num = l - (long)(i - 1) * s;
        if (num % r != 0) continue;
        int k = (int)(num / r);
        bool inSet = (i <= r - s) ? k >= 0 : k >= r - s - i + 1;
        if (!inSet) continue;
        if (!isZero(leadingCoefficient(r, s, i, k))) return {i, k};
    }
    throw NonTriangular("no constraint with leading derivative index " + std::to_string(l));
}

PotentialTrunc reconstructPotential(int r, int s, const PotentialTrunc& reduced, int order,
                                    int varMax) {
    IndexSets is = IndexSets::build(r, s, varMax);
    PotentialTrunc Z;
    Z.r = r;
    Z.s = s;
    Z.order = order;
    // seed with the reduced data (gap-set monomials only)
    for (const auto& [gn, mp] : reduced.F) {
        for (const auto& [m, v] : mp) {
            for (int mi : m)
                if (!is.isGap(mi))
                    throw std::invalid_argument("reduced data contains a non-gap index");
            Z.F[gn][m] = v;
        }
    }
    for (int lam = 1; lam <= order; ++lam) {
        for (int n = 1; n <= lam + 2; ++n) {
            if ((lam + 2 - n) % 2 != 0) continue;
            int g = (lam + 2 - n) / 2;
            if (g < 0) continue;
            int bnd = std::min(varMax, r * (3 * g - 3 + n) + r - 1);
            if (bnd < 1) continue;
            // enumerate sorted monomials with at least one non-gap entry,
            // grouped by the generator of their largest non-gap index
            std::map<std::pair<int, int>, std::vector<std::vector<int>>> targets;
            std::vector<int> m(n);
            std::function<void(int, int)> rec = [&](int pos, int low) {
                if (pos == n) {
                    int lead = -1;
                    for (int mi : m)
                        if (!is.isGap(mi)) lead = std::max(lead, mi);
                    if (lead < 0) return;  // pure gap monomial: given data
                    targets[generatorForIndex(r, s, lead)].push_back(m);
                    return;
                }
                for (int v = low; v <= bnd; ++v) {
                    m[pos] = v;
                    rec(pos + 1, v);
                }
            };
            rec(0, 1);
            for (const auto& [ik, list] : targets) {
                auto [i, k] = ik;
                Rat lead = leadingCoefficient(r, s, i, k);
                long l = (long)(i - 1) * s + (long)r * k;
                WOperator op = wMode(r, s, i, k, varMax, varMax);
                DPoly res = applyToPotential(op, Z, lam + 1, n - 1, varMax);
                if (i <= r - s && k == 0) {
                    res[{i, {}}] -= aConstant(r, s, i);  // the zero-mode eigenvalue
                    if (isZero(res[{i, {}}])) res.erase({i, {}});
                }
                for (const auto& mm : list) {
                    long ll = l;
                    // residual coefficient of hbar^{1+lam} x^{mm \ l}
                    XMonomial rest;
                    bool removed = false;
                    int el = 0;
                    for (int mi : mm) {
                        if (mi == (int)ll) ++el;
                        if (mi == (int)ll && !removed) {
                            removed = true;
                            continue;
                        }
                        rest.push_back(mi);
                    }
                    if (!removed) throw std::logic_error("target lost its leading index");
                    auto it = res.find({1 + lam, rest});
                    Rat rhs = (it == res.end()) ? Rat(0) : it->second;
                    // leading-term contribution: lead * C * e_l / prod e!
                    std::map<int, int> e;
                    for (int mi : mm) e[mi]++;
                    Rat fact(1);
                    for (const auto& [v, c] : e)
                        for (int t = 2; t <= c; ++t) fact *= t;
                    Rat val = -rhs * fact / (lead * Rat(el));
                    if (!isZero(val)) Z.setCoeffC(g, n, mm, val);
                }
            }
        }
    }
    return Z;
}

}  // namespace thetars
