#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "thetars/kernel.hpp"
#include "thetars/series.hpp"
#include "thetars/wave.hpp"

namespace thetars {

struct TruncationInsufficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LoopViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotCoprime : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// omega_{g,n} as a finite coefficient table: entry (m_1..m_n) is the
// coefficient of prod_i dz_i / z_i^{m_i+1}.
struct CorrelatorTable {
    int r = 0, s = 0, g = 0, n = 0;
    bool singular02 = false;  // the (0,2) table carries the Bergman-kernel part
    std::map<std::vector<int>, Rat> entries;

    int supportBound() const { return r * (3 * g - 3 + n) + r - 1; }
    Rat at(const std::vector<int>& m) const {
        auto it = entries.find(m);
        return it == entries.end() ? Rat(0) : it->second;
    }
    bool operator==(const CorrelatorTable& o) const {
        return r == o.r && s == o.s && g == o.g && n == o.n && entries == o.entries;
    }
    std::vector<std::vector<int>> violatingAsymmetry() const;
    std::vector<std::vector<int>> violatingModR() const;
};

struct IntersectionRecord {
    int r = 0, s = 0, g = 0, n = 0;
    std::vector<int> a;  // primary fields, in [r-1]
    std::vector<int> k;  // psi powers
    Rat value;
};

// Descendant integrals from a correlator table:
//   <Theta_{g,n}(a) prod psi^{k_i}> = (-r)^{2g-2+n} entry(m) / prod m_i!^{(r)}
// with m_i = r k_i + a_i. Checks the dimension constraint on every
// non-vanishing entry.
std::vector<IntersectionRecord> intersectionNumbers(const CorrelatorTable& table);

// One elementary symmetric value A_i of the ramification half-integers; kept
// here for the loop-equation side (also exposed by the W-algebra module).
Rat loopShiftConstant(int r, int s, int i);

struct LoopCheckItem {
    int k = 0, n = 0, h = 0;  // E^{(k)}_n, hbar-graded piece
    bool ok = true;
    std::string detail;
};

struct LoopReport {
    std::vector<LoopCheckItem> items;
    bool allOk() const {
        for (auto& it : items)
            if (!it.ok) return false;
        return true;
    }
    void require() const {
        for (auto& it : items)
            if (!it.ok)
                throw LoopViolation("E^(" + std::to_string(it.k) + ")_" + std::to_string(it.n) +
                                    ": " + it.detail);
    }
};

class CorrelatorEngine {
  public:
    CorrelatorEngine(int r, int s, int waveOrder = 8);

    int r() const { return r_; }
    int s() const { return s_; }
    const WaveTable& waves() const { return table_; }
    const WaveMatrix& waveMatrix() const { return *wm_; }
    const MatrixKernelDiag& diagKernel() const { return *mk_; }

    // ---- determinantal route ----
    // All hbar-graded pieces h <= hMax of the n-point function in one pass;
    // stable pieces become tables (g = (h+2-n)/2). Results are cached.
    void computeFamily(int n, int hMax);
    const CorrelatorTable& omega(int g, int n);
    bool hasOmega(int g, int n) const;
    void adoptTable(const CorrelatorTable& t);  // accept a table computed by another route

    // Unstable parts. omega1Series is the full regularized diagonal (per dz);
    // omega2GradedPiece(h) is the h-th piece of the 2-point function.
    const CycSeries& omega1Series();
    RatSeries omega2GradedPiece(int h, int mMax);

    // ---- loop-equation side ----
    // E^{(k)}_0 as a one-variable series (per dz^k), from principal minors of
    // the matrix kernel on the fiber.
    CycSeries Ek0(int k);
    // Same object from the characteristic polynomial of the connection
    // matrix (conjugation-invariance cross-check).
    CycSeries Ek0FromConnection(int k);
    // E^{(k)}_1 as a two-variable series in (z, z_1), per dz^k dz_1.
    CycSeries Ek1(int k, int hbarMax);

    LoopReport checkLoopEquations(int gradedMax = 4);

    // ---- alternative recursions ----
    // Shifted topological recursion for s = 1 (A_k = 0 beyond k = r-s).
    CorrelatorTable shiftedTROmega(int g, int n);
    // Bouchard-Eynard-style n=1 formula for coprime (r,s).
    CorrelatorTable omegaG1Coprime(int g);

    // Semi-connected correlators at fiber points: sum over set partitions of
    // the sheet multiset Z (and distributions of the external variables),
    // with fixed total genus g and the unstable (0,1)/(0,2) blocks included;
    // primed omits every omega_{0,1} factor.
    CycSeries semiConnected(int g, const std::vector<int>& sheets, int nExt, bool primed,
                            const std::vector<VarWindow>& win, VarWindow hwin);

    int waveOrder() const { return M_; }

  private:
    int r_, s_, M_;
    WaveTable table_;
    std::unique_ptr<WaveMatrix> wm_;
    std::unique_ptr<MatrixKernelDiag> mk_;
    std::unique_ptr<CycSeries> omega1_;
    std::map<std::pair<int, int>, CorrelatorTable> cache_;

    CorrelatorTable extractTable(const RatSeries& total, int g, int n);
    void computeFamilyN1(int hMax);

    // One omega_{g,m} block evaluated at a mix of fiber sheets and external
    // variables, as a series in (z, externals).
    CycSeries omegaBlockAt(int gB, const std::vector<std::pair<bool, int>>& pts,
                           const std::vector<VarWindow>& win, VarWindow hwin);

    CorrelatorTable residueRecursion(int g, int n);
};

}  // namespace thetars
