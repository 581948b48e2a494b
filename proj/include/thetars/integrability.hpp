#pragma once

#include "thetars/correlators.hpp"
#include "thetars/walgebra.hpp"

namespace thetars {

struct FormMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Assembles the truncated descendant potential from correlator tables:
// C_{g,n}(m) = (-r)^{2g-2+n} * entry(m). Tables are computed on demand for
// every (g,n) in the list.
PotentialTrunc assemblePotential(CorrelatorEngine& eng, int order,
                                 const std::vector<std::pair<int, int>>& gnList);

// Normal-coordinate initial data u_alpha = d_1 d_alpha log Z at x_{>=2} = 0.
struct InitialCondition {
    int alpha = 0;
    bool closedFormS1 = false;                 // matched d_alpha (hbar/(1-hbar x_1))^{alpha+1}
    Rat dAlpha;                                // s = 1 only
    std::map<std::pair<int, int>, Rat> series; // (hbar power, x_1 power) -> coefficient
    int orderChecked = 0;
};

// For s = 1 the series must match the closed geometric form coefficient by
// coefficient (FormMismatch otherwise); for s >= 2 it must be supported on
// the finitely many (g,n) with alpha = s(2g-2+n)-n+1.
InitialCondition initialConditions(const PotentialTrunc& Z, int alpha, int N);

// Residual of the string equation
//   (hbar d_1 - hbar^2 sum_m m x_m d_m - hbar^2 d_1) Z = 0      (s = 1),
// as a graded polynomial; empty means the equation holds on the window.
DPoly stringEquationResidual(const PotentialTrunc& Z, const Rat& dOne, int hMax, int degMax,
                             int varMax);

}  // namespace thetars
