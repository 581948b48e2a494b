#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "thetars/series.hpp"

namespace thetars {

struct OracleMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InverseMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coefficients c_{k,m} of the wave-function expansions
//   psi_k(z;hbar) = e^{(r/s) z^s/hbar} (r z^{r-1})^{-1/2} z^{k-1}
//                     sum_{m>=0} c_{k,m} (hbar z^{-s})^m,
// computed by the formal stationary-phase expansion of the defining contour
// integral around zeta = z. Dual coefficients obey c*_{k,m} = (-1)^m c_{k,m}.
class WaveTable {
  public:
    WaveTable(int r, int s);

    int r() const { return r_; }
    int s() const { return s_; }

    Rat coeff(long k, long m) const;
    Rat dualCoeff(long k, long m) const {
        Rat c = coeff(k, m);
        return (m % 2) ? Rat(-c) : c;
    }

    // cache support: computed entries out, trusted entries in
    std::map<std::pair<long, long>, Rat> snapshot() const {
        std::lock_guard<std::mutex> lock(mu_);
        return memo_;
    }
    void preload(long k, long m, const Rat& v) const {
        std::lock_guard<std::mutex> lock(mu_);
        memo_[{k, m}] = v;
    }

  private:
    int r_, s_;
    Rat gTail(long j) const;  // Taylor coefficient g_j of the phase at the saddle, j >= 3
    mutable std::mutex mu_;
    mutable std::map<std::pair<long, long>, Rat> memo_;
};

struct RelationViolation {
    std::string relation;  // "d/dx" or "x-mult"
    long k = 0;
    long m = 0;
    Rat residual;
};

// Residuals of hbar (d/dx) psi_k - psi_{k+s-r} and of
// x psi_k - psi_{k+r} - hbar ((2k+r-s-1)/(2(r-s))) psi_{k+r-s},
// reduced to coefficient form; empty report == identities hold to order M.
std::vector<RelationViolation> checkRelations(const WaveTable& t, long kLo, long kHi, long M);

// Same residuals as one-variable graded series in (hbar z^{-s}).
RatSeries relationResidualSeries(const WaveTable& t, const std::string& relation, long k, long M);

// Connection matrix D(x;hbar) of the rank-r differential system
// hbar d/dx Psi = D Psi; entries are gamma + (alpha + beta*hbar)/x.
struct ConnectionMatrix {
    int r = 0, s = 0;
    struct Entry {
        Rat gamma, alpha, beta;
        bool zero() const { return isZero(gamma) && isZero(alpha) && isZero(beta); }
    };
    std::vector<std::vector<Entry>> e;  // 1-based logical, stored 0-based

    static ConnectionMatrix build(int r, int s);
    const Entry& at(int k, int kp) const { return e[k - 1][kp - 1]; }
    Rat trace() const;
};

// Applies gamma + (alpha + beta hbar)/x with x = z^r to a one-variable series.
CycSeries applyConnectionEntry(const ConnectionMatrix::Entry& en, const CycSeries& s, int r);

// The wave matrix Psi_{k,a} = psi_k(theta^a z) and its inverse, stored as
// reduced series (exponential prefactor e^{(r/s) theta^{as} z^s / hbar} and
// half-density (r z^{r-1})^{-1/2} eta^{-a(r-1)} tracked as charges and
// stripped from the series).
class WaveMatrix {
  public:
    WaveMatrix(const WaveTable& table, int M, int zHalfWidth = 0);

    int r() const { return table_.r(); }
    int s() const { return table_.s(); }
    int order() const { return M_; }

    // Reduced entries; indices 1-based, sheets a in [r].
    const CycSeries& psiHat(int k, int a) const { return psiHat_[k - 1][a - 1]; }
    const CycSeries& psiInvHat(int a, int k) const { return psiInvHat_[a - 1][k - 1]; }

    // (Psi Psi^{-1})_{k,k'} as a reduced series; equals delta_{k,k'} to order M.
    CycSeries productEntry(int k, int kp) const;
    // Throws InverseMismatch when the product deviates from Id within the
    // certified hbar window.
    void verifyInverse() const;

    // Residual of the differential system, entry (k,a): hbar d/dx Psi - D Psi.
    CycSeries systemResidual(int k, int a) const;
    // Residual of -hbar d/dx Psi^{-1} = Psi^{-1} D, entry (a,k).
    CycSeries inverseSystemResidual(int a, int k) const;

    const WaveTable& table() const { return table_; }
    const ConnectionMatrix& connection() const { return conn_; }
    std::vector<VarWindow> window() const { return {zwin_}; }
    VarWindow hbarWindow() const { return hwin_; }

  private:
    const WaveTable& table_;
    int M_;
    VarWindow zwin_;
    VarWindow hwin_;
    ConnectionMatrix conn_;
    std::vector<std::vector<CycSeries>> psiHat_;     // [k-1][a-1]
    std::vector<std::vector<CycSeries>> psiInvHat_;  // [a-1][k-1]
};

}  // namespace thetars
