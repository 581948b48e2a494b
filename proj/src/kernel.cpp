#include "thetars/kernel.hpp"

namespace thetars {

namespace {

// One wave-function slot z^{k-1} sum_m c_{k,m} hbar^m z^{-sm} (dual flips the
// sign of odd orders), embedded at variable position v, optionally shifted by
// z^{xpow}.
RatSeries waveSlot(const WaveTable& t, long k, bool dual, int xpow, int M, int v, int nvars,
                   const std::vector<VarWindow>& win, VarWindow hwin) {
    RatSeries out(nvars, win, hwin);
    std::vector<int> e(nvars, 0);
    for (int m = 0; m <= M; ++m) {
        e[v] = (int)k - 1 - t.s() * m + xpow;
        Rat c = dual ? t.dualCoeff(k, m) : t.coeff(k, m);
        out.addTerm(e.data(), m, c);
    }
    return out;
}

}  // namespace

RatSeries kernelNumerator(const WaveTable& t, int M, int vi, int vj, int nvars,
                          const std::vector<VarWindow>& win, VarWindow hwin) {
    // The dual function sits in the second slot. With the opposite
    // orientation the one-point function acquires -y dx as its hbar^{-1}
    // part and the Bessel anchor <Theta^{2,1}_{1,1}(1)> = 1/8 flips sign, so
    // this choice is pinned by the unstable term and the anchor together.
    const int r = t.r(), s = t.s();
    RatSeries acc(nvars, win, hwin);
    for (int k = 1; k <= r; ++k) {
        long j = (k <= r - s) ? 1 - k : r + 1 - k;
        int xpow = (k <= r - s) ? r : 0;
        RatSeries left = waveSlot(t, j, /*dual=*/false, xpow, M, vi, nvars, win, hwin);
        RatSeries right = waveSlot(t, k, /*dual=*/true, 0, M, vj, nvars, win, hwin);
        acc += left.mul(right, win, hwin);
    }
    acc.compress();
    return acc;
}

RatSeries kernelReduced(const WaveTable& t, int M, int vi, int vj, int depth, int nvars,
                        const std::vector<VarWindow>& win, VarWindow hwin) {
    RatSeries num = kernelNumerator(t, M, vi, vj, nvars, win, hwin);
    int outer = std::min(vi, vj), inner = std::max(vi, vj);
    RatSeries geo = geomExpand(t.r(), outer, inner, depth, nvars, win, hwin);
    RatSeries out = num.mul(geo, win, hwin);
    if (vi > vj) out.scaleRat(Rat(-1));  // 1/(x_i - x_j) = -1/(x_j - x_i)
    return out;
}

RatSeries kernelBySum(const WaveTable& t, int M, int kMax, int vi, int vj, int nvars,
                      const std::vector<VarWindow>& win, VarWindow hwin) {
    RatSeries acc(nvars, win, hwin);
    for (int k = 1; k <= kMax; ++k) {
        RatSeries left = waveSlot(t, 1 - k, /*dual=*/false, 0, M, vi, nvars, win, hwin);
        RatSeries right = waveSlot(t, k, /*dual=*/true, 0, M, vj, nvars, win, hwin);
        acc += left.mul(right, win, hwin);
    }
    acc.compress();
    return acc;
}

MatrixKernelDiag MatrixKernelDiag::build(const WaveMatrix& wm, VarWindow zwin, VarWindow hwin) {
    // (1/hbar) Psi^{-1} D Psi dx at reversed hbar-orientation: the odd
    // hbar-flip keeps the hbar^{-1} part equal to +y dx on every sheet and
    // reproduces the regularized off-diagonal limit (checked independently).
    const int r = wm.r(), s = wm.s();
    const int order = 2 * r;
    MatrixKernelDiag mk;
    mk.r = r;
    mk.s = s;
    mk.M = wm.order();
    mk.entry.assign(r, std::vector<CycSeries>(r));
    const auto& conn = wm.connection();
    for (int a = 1; a <= r; ++a) {
        for (int b = 1; b <= r; ++b) {
            CycSeries acc(1, {zwin}, hwin);
            for (int k = 1; k <= r; ++k) {
                for (int kp = 1; kp <= r; ++kp) {
                    const auto& en = conn.at(k, kp);
                    if (en.zero()) continue;
                    CycSeries dpsi = applyConnectionEntry(en, wm.psiHat(kp, b), r);
                    acc += wm.psiInvHat(a, k).mulRemap(dpsi, {0}, {zwin}, hwin);
                }
            }
            CycSeries flipped(1, {zwin}, hwin);
            acc.forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
                flipped.addTerm(e.data(), h, (h % 2) ? -v : v);
            });
            std::vector<int> noshift{0};
            flipped = flipped.shifted(noshift, -1);  // the overall 1/hbar
            flipped.scale(Cyc::etaPow(order, -(long)(a + b) * (r - 1)));
            flipped.compress();
            mk.entry[a - 1][b - 1] = std::move(flipped);
        }
    }
    return mk;
}

CycSeries MatrixKernelDiag::trace() const {
    CycSeries acc = entry[0][0];
    for (int a = 2; a <= r; ++a) acc += entry[a - 1][a - 1];
    acc.compress();
    return acc;
}

CycSeries sheetKernel(const WaveMatrix& wm, int a, int b, int vFirst, int vSecond, bool firstOuter,
                      int depth, int nvars, const std::vector<VarWindow>& win, VarWindow hwin) {
    const int r = wm.r();
    const int order = 2 * r;
    CycSeries acc(nvars, win, hwin);
    for (int k = 1; k <= r; ++k) {
        // embed the one-variable factors at their slots
        CycSeries left(nvars, win, hwin);
        wm.psiInvHat(a, k).forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
            std::vector<int> ee(nvars, 0);
            ee[vFirst] = e[0];
            left.addTerm(ee.data(), h, v);
        });
        CycSeries right(nvars, win, hwin);
        wm.psiHat(k, b).forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
            std::vector<int> ee(nvars, 0);
            ee[vSecond] = e[0];
            right.addTerm(ee.data(), h, v);
        });
        acc += left.mul(right, win, hwin);
    }
    int outer = firstOuter ? vFirst : vSecond;
    int inner = firstOuter ? vSecond : vFirst;
    RatSeries geo = geomExpandFree(r, outer, inner, depth, nvars, win, hwin);
    std::vector<int> id(nvars);
    for (int i = 0; i < nvars; ++i) id[i] = i;
    CycSeries prod = acc.mulRemap(geo, id, win, hwin);
    // 1/(x_first - x_second) = -1/(x_second - x_first) when the second slot
    // is the expansion's outer variable; the odd hbar-flip matches the
    // orientation of the scalar kernel.
    // the sheet gauge eta^{-(a+b)(r-1)} of the half-density prefactors; it
    // must match the diagonal matrix kernel for minors to assemble
    Cyc gauge = Cyc::etaPow(order, -(long)(a + b) * (r - 1));
    CycSeries out(nvars, win, hwin);
    prod.forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
        Cyc val = (h % 2) ? -v : v;
        if (!firstOuter) val = -val;
        out.addTerm(e.data(), h, val * gauge);
    });
    out.compress();
    return out;
}

CycSeries regularizedDiagonalByLimit(const WaveTable& t, int M, VarWindow zwin, VarWindow hwin) {
    const int r = t.r(), s = t.s();
    const int order = 2 * r;
    // Two-variable numerator on a window wide enough for the diagonal
    // restriction; eps-expansion uses z_2 = z (1 + eps) to first order. The
    // product of two order-M slots is complete only up to hbar^M.
    int W = 2 * (s * M + 2 * r + 2);
    std::vector<VarWindow> win2{{-W, W}, {-W, W}};
    VarWindow hNum{0, std::min(hwin.hi, M)};
    RatSeries num = kernelNumerator(t, M, 0, 1, 2, win2, hNum);
    RatSeries n0(1, {zwin}, hwin), n1(1, {zwin}, hwin);
    num.forEach([&](const std::vector<int>& e, int h, const Rat& v) {
        int ee = e[0] + e[1];
        n0.addTerm(&ee, h, v);
        n1.addTerm(&ee, h, v * Rat(e[1]));
    });
    // lim [K(z,z2) - sqrt(dz dz2)/(z - z2)] = (-z^{-r}/r) N1 + (r-1)/(2z),
    // using N0 = r z^{r-1} (wave-matrix unit identity); then add y dx / hbar.
    n0.forEach([&](const std::vector<int>& e, int h, const Rat& v) {
        Rat expect = (e[0] == r - 1 && h == 0) ? Rat(r) : Rat(0);
        if (v != expect)
            throw ChargeMismatch("kernel numerator fails the coincident-point identity");
    });
    CycSeries out(1, {zwin}, hwin);
    n1.forEach([&](const std::vector<int>& e, int h, const Rat& v) {
        int ee = e[0] - r;
        out.addTerm(&ee, h, Cyc(order, v * ratOf(-1, r)));
    });
    int em = -1;
    out.addTerm(&em, 0, Cyc(order, ratOf(r - 1, 2)));
    int ey = s - 1;
    out.addTerm(&ey, -1, Cyc(order, Rat(r)));
    out.compress();
    return out;
}

}  // namespace thetars
