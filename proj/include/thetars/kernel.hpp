#pragma once

#include "thetars/series.hpp"
#include "thetars/wave.hpp"

namespace thetars {

struct ChargeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DenomMode { Geometric, Symbolic };

// Numerator N(z_i,z_j) of the two-point kernel in reduced normalization,
//   K(z_i,z_j) = sqrt(dz_i dz_j) N(z_i,z_j) / (x_i - x_j),   x = z^r,
// carrying exponential charge -1 on slot i and +1 on slot j. Slots are
// embedded at variable positions (vi, vj) of an nvars-dimensional space.
RatSeries kernelNumerator(const WaveTable& t, int M, int vi, int vj, int nvars,
                          const std::vector<VarWindow>& win, VarWindow hwin);

// Reduced kernel with the pole expanded geometrically in the declared global
// ordering: the variable with the smaller position is the outer one.
RatSeries kernelReduced(const WaveTable& t, int M, int vi, int vj, int depth, int nvars,
                        const std::vector<VarWindow>& win, VarWindow hwin);

// The two equivalent representations: Symbolic returns the finite numerator
// with the 1/(x_i - x_j) pole held implicit, Geometric expands it in the
// declared ordering.
inline RatSeries kernelOffdiag(const WaveTable& t, int M, int vi, int vj, DenomMode mode,
                               int depth, int nvars, const std::vector<VarWindow>& win,
                               VarWindow hwin) {
    return mode == DenomMode::Symbolic ? kernelNumerator(t, M, vi, vj, nvars, win, hwin)
                                       : kernelReduced(t, M, vi, vj, depth, nvars, win, hwin);
}

// Kernel via the defining wave-function sum truncated at kMax. Valid as a
// series in the regime |z_vi| > |z_vj|; agrees with kernelReduced on a window.
RatSeries kernelBySum(const WaveTable& t, int M, int kMax, int vi, int vj, int nvars,
                      const std::vector<VarWindow>& win, VarWindow hwin);

// Matrix kernel on the fiber of x at coincident base points, computed by the
// closed formula -(1/hbar) Psi^{-1} D Psi dx (never by a limit). Entry (a,b)
// is stored per dz with the sheet gauge eta^{-(a+b)(r-1)} folded in; its
// exponential charge is theta^{bs} - theta^{as}.
struct MatrixKernelDiag {
    int r = 0, s = 0, M = 0;
    std::vector<std::vector<CycSeries>> entry;  // [a-1][b-1]

    static MatrixKernelDiag build(const WaveMatrix& wm, VarWindow zwin, VarWindow hwin);
    const CycSeries& at(int a, int b) const { return entry[a - 1][b - 1]; }

    // Scalar regularized kernel on the untwisted sheet: the (r,r) entry.
    const CycSeries& regularizedDiagonal() const { return entry[r - 1][r - 1]; }

    // Sum of the diagonal entries; equals -(1/hbar) tr D dx.
    CycSeries trace() const;
};

// Sheeted off-diagonal kernel K(theta^a z_first, theta^b z_second) in the
// same reduced normalization/gauge, pole expanded geometrically with the
// declared outer slot.
CycSeries sheetKernel(const WaveMatrix& wm, int a, int b, int vFirst, int vSecond, bool firstOuter,
                      int depth, int nvars, const std::vector<VarWindow>& win, VarWindow hwin);

// Independent regularization check: the diagonal (r,r) entry recomputed from
// the off-diagonal kernel by expanding z_2 = z(1+eps), removing the
// sqrt(dz dz_2)/(z - z_2) singularity, and adding y dx / hbar.
CycSeries regularizedDiagonalByLimit(const WaveTable& t, int M, VarWindow zwin, VarWindow hwin);

}  // namespace thetars
