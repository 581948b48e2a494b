#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "thetars/correlators.hpp"

using namespace thetars;

TEST_CASE("one-point tables: the Bessel anchor and d_1(r)") {
    CorrelatorEngine e21(2, 1);
    const CorrelatorTable& t = e21.omega(1, 1);
    CHECK(t.entries.size() == 1);
    CHECK(t.at({1}) == ratOf(-1, 16));
    auto recs = intersectionNumbers(t);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].a == std::vector<int>{1});
    CHECK(recs[0].k == std::vector<int>{0});
    CHECK(recs[0].value == ratOf(1, 8));

    // d_1(r) = ((r-1)r+1)/(24(r-1))
    CorrelatorEngine e31(3, 1);
    auto recs3 = intersectionNumbers(e31.omega(1, 1));
    REQUIRE(recs3.size() == 1);
    CHECK(recs3[0].value == ratOf(7, 48));

    CorrelatorEngine e51(5, 1);
    auto recs5 = intersectionNumbers(e51.omega(1, 1));
    REQUIRE(recs5.size() == 1);
    CHECK(recs5[0].value == ratOf(7, 32));
}

TEST_CASE("omega_{0,3} vanishes for s <= 2 and not beyond") {
    CorrelatorEngine e21(2, 1);
    CHECK(e21.omega(0, 3).entries.empty());
    CorrelatorEngine e32(3, 2);
    CHECK(e32.omega(0, 3).entries.empty());
    CorrelatorEngine e43(4, 3);
    const CorrelatorTable& t = e43.omega(0, 3);
    CHECK(!t.entries.empty());
    CHECK(t.at({1, 1, 1}) != Rat(0));
    CHECK(t.violatingAsymmetry().empty());
    CHECK(t.violatingModR().empty());
    CHECK_NOTHROW(intersectionNumbers(t));
}

TEST_CASE("two-point function at hbar^0 is the Bergman expansion") {
    for (auto [r, s] : std::vector<std::pair<int, int>>{{2, 1}, {3, 2}, {5, 3}}) {
        CorrelatorEngine eng(r, s);
        RatSeries b = eng.omega2GradedPiece(0, 12);
        for (int m = 1; m <= 10; ++m) {
            CHECK(b.coeff({-m - 1, m - 1}, 0) == Rat(m));
        }
        // nothing outside the diagonal-singularity profile
        b.forEach([&](const std::vector<int>& e, int, const Rat& v) {
            if (isZero(v)) return;
            CHECK(e[0] + e[1] == -2);
            CHECK(e[1] >= 0);
        });
    }
}

TEST_CASE("stable tables: symmetry, mod-r vanishing, dimension filter") {
    for (auto [r, s] : std::vector<std::pair<int, int>>{{2, 1}, {3, 2}, {4, 1}}) {
        CorrelatorEngine eng(r, s);
        for (auto [g, n] : std::vector<std::pair<int, int>>{{1, 2}, {0, 4}, {1, 1}}) {
            const CorrelatorTable& t = eng.omega(g, n);
            CHECK(t.violatingAsymmetry().empty());
            CHECK(t.violatingModR().empty());
            CHECK_NOTHROW(intersectionNumbers(t));
        }
    }
}

TEST_CASE("modified unit axiom pins the orientation across n = 1,2,3") {
    // <Theta^{r,1}_{g,n+1}(a,1)> = (2g-2+n) <Theta^{r,1}_{g,n}(a)>
    CorrelatorEngine eng(2, 1);
    Rat v11 = ratPow(Rat(-2), 1) * eng.omega(1, 1).at({1});           // <Theta_{1,1}(1)>
    Rat v12 = ratPow(Rat(-2), 2) * eng.omega(1, 2).at({1, 1});        // <Theta_{1,2}(1,1)>
    Rat v13 = ratPow(Rat(-2), 3) * eng.omega(1, 3).at({1, 1, 1});     // <Theta_{1,3}(1,1,1)>
    CHECK(v11 == ratOf(1, 8));
    CHECK(v12 == Rat(1) * v11);       // 2g-2+n at (g,n)=(1,1)
    CHECK(v13 == Rat(2) * v12);       // 2g-2+n at (g,n)=(1,2)
}

TEST_CASE("unit-insertion axiom at a = s for every twist") {
    // <Theta_{g,n+1}(a,s)> = (2g-2+n) <Theta_{g,n}(a)> on psi-free entries;
    // in table coefficients: entry_{g,n+1}(m,s) * (-r) / s!^{(r)} = (2g-2+n) entry_{g,n}(m)
    for (auto [r, s] : std::vector<std::pair<int, int>>{{3, 2}, {4, 3}, {5, 2}, {5, 3}}) {
        CorrelatorEngine eng(r, s);
        for (auto [g, n] : std::vector<std::pair<int, int>>{{0, 3}, {1, 1}, {1, 2}}) {
            const CorrelatorTable& small = eng.omega(g, n);
            const CorrelatorTable& big = eng.omega(g, n + 1);
            for (const auto& [m, v] : small.entries) {
                bool psiFree = true;
                for (int mi : m)
                    if (mi >= r) psiFree = false;  // keep to primary-field entries
                if (!psiFree) continue;
                std::vector<int> m1 = m;
                m1.push_back(s);
                Rat lhs = big.at(m1) * Rat(-r) / multifactorial(s, r);
                Rat rhs = Rat(2 * g - 2 + n) * v;
                INFO("(r,s)=(", r, ",", s, ") (g,n)=(", g, ",", n, ")");
                CHECK(lhs == rhs);
            }
        }
    }
}

TEST_CASE("the empty-subset loop correlator is the unit") {
    CorrelatorEngine eng(3, 2);
    CycSeries e0 = eng.Ek0(0);
    CHECK(e0.coeff({0}, 0) == Cyc(6, Rat(1)));
    CHECK(e0.termCount() == 1);
}

TEST_CASE("loop equations hold for small cases") {
    for (auto [r, s] : std::vector<std::pair<int, int>>{{2, 1}, {3, 2}}) {
        CorrelatorEngine eng(r, s);
        LoopReport rep = eng.checkLoopEquations(4);
        for (const auto& it : rep.items) {
            INFO("E^(", it.k, ")_", it.n, " h=", it.h, " : ", it.detail);
            CHECK(it.ok);
        }
        CHECK_NOTHROW(rep.require());
    }
}

TEST_CASE("fiber product term of E^(2)_0 for the Bessel curve") {
    CorrelatorEngine eng(2, 1);
    CycSeries e2 = eng.Ek0(2);
    CHECK(e2.coeff({0}, -2) == Cyc(4, Rat(-4)));  // -(y dx / hbar)^2 per dz^2
}

TEST_CASE("semi-connected correlators: partitions of a 2-subset") {
    CorrelatorEngine eng(2, 1);
    std::vector<VarWindow> win{{-30, 30}};
    VarWindow hw{-4, 6};
    // unprimed: contains omega_{0,1}(z) omega_{0,1}(-z) at hbar^{-2}
    CycSeries full = eng.semiConnected(0, {2, 1}, 0, false, win, hw);
    // omega_{0,1}(z) omega_{0,1}(theta z) = (2 dz)(-2 dz): coefficient -4 at z^0
    CHECK(full.coeff({0}, -2) == Cyc(4, Rat(-4)));
    // primed: the ydx^2 term drops; the Bergman block sits in the genus-1
    // layer (a single (0,2) block has sum (g_B - 1) = -1 = g - k)
    CycSeries primed0 = eng.semiConnected(0, {2, 1}, 0, true, win, hw);
    bool hasHm2 = false;
    primed0.forEach([&](const std::vector<int>&, int h, const Cyc& v) {
        if (h == -2 && !v.isZero()) hasHm2 = true;
    });
    CHECK(!hasHm2);
    // B(z,-z) = -dz^2/(4 z^2)
    CycSeries primed1 = eng.semiConnected(1, {2, 1}, 0, true, win, hw);
    CHECK(primed1.coeff({-2}, 0) == Cyc(4, ratOf(-1, 4)));
    // single-block: omega_{1;0} = omega_1
    CycSeries one = eng.semiConnected(1, {2}, 0, false, win, hw);
    CHECK(one.coeff({-2}, 1) == Cyc(4, ratOf(-1, 16)));
}

TEST_CASE("loop correlators from minors equal the partition sums") {
    // E^{(2)}_0 assembled from principal minors of the fiber kernel must
    // agree with the sum of semi-connected correlators over 2-subsets.
    for (auto [r, s] : std::vector<std::pair<int, int>>{{2, 1}, {3, 2}}) {
        CorrelatorEngine eng(r, s);
        eng.omega(1, 1);
        eng.omega(1, 2);
        eng.omega(2, 1);
        CycSeries viaMinors = eng.Ek0(2);
        std::vector<VarWindow> win{viaMinors.windows()[0]};
        VarWindow hw{-2, 2};
        CycSeries viaPartitions(1, win, hw);
        for (int a = 1; a <= r; ++a)
            for (int b = a + 1; b <= r; ++b)
                for (int g = 0; g <= 2; ++g)
                    viaPartitions += eng.semiConnected(g, {a, b}, 0, false, win, hw);
        bool ok = true;
        viaPartitions.forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
            if (h > 2) return;
            if (!(viaMinors.coeff(e, h) == v)) ok = false;
        });
        viaMinors.forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
            if (h > 2) return;
            if (!(viaPartitions.coeff(e, h) == v)) ok = false;
        });
        CHECK(ok);
    }
}

TEST_CASE("one-external loop correlator from minors equals the table route") {
    // E^{(1)}_1 = sum_a omega_2(theta^a z, z_1): rebuild it from the stored
    // two-point tables plus the Bergman expansion and compare.
    for (auto [r, s] : std::vector<std::pair<int, int>>{{2, 1}, {3, 2}}) {
        CorrelatorEngine eng(r, s);
        int hMax = 4;
        CycSeries viaMinors = eng.Ek1(1, hMax);
        const int order = 2 * r;
        bool ok = true;
        auto expectCoeff = [&](int ez, int e1, int h) {
            Cyc acc(order);
            if (h == 0) {
                // sum_a B(theta^a z, z_1): only m = 0 mod r survives
                int m = -e1 - 1;
                if (m >= 1 && ez == m - 1 && m % r == 0) acc += Cyc(order, Rat((long)m * r));
            } else if (h % 2 == 0 && h >= 2) {
                const CorrelatorTable& t = eng.omega(h / 2, 2);
                for (const auto& [mm, v] : t.entries) {
                    if (-mm[1] - 1 != e1 || -mm[0] - 1 != ez) continue;
                    // the sheet sum kills residues away from 0 mod r
                    if (mm[0] % r == 0) acc += Cyc(order, v * Rat(r));
                }
            }
            return acc;
        };
        viaMinors.forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
            if (h > hMax || v.isZero()) return;
            if (!(expectCoeff(e[0], e[1], h) == v)) ok = false;
        });
        // spot-check a grid of coefficients including zero entries
        for (int h : {0, 2}) {
            for (int ez = -2; ez <= 6; ++ez) {
                for (int e1 = -8; e1 <= -2; ++e1) {
                    std::vector<int> e{ez, e1};
                    if (!(viaMinors.coeff(e, h) == expectCoeff(ez, e1, h))) ok = false;
                }
            }
        }
        CHECK(ok);
    }
}

TEST_CASE("route agreement: shifted recursion reproduces the determinantal tables (s=1)") {
    for (int r : {2, 3}) {
        CorrelatorEngine eng(r, 1);
        CorrelatorTable det11 = eng.omega(1, 1);
        CorrelatorTable str11 = eng.shiftedTROmega(1, 1);
        CHECK(det11 == str11);
        CorrelatorTable det12 = eng.omega(1, 2);
        CorrelatorTable str12 = eng.shiftedTROmega(1, 2);
        CHECK(det12 == str12);
    }
}

TEST_CASE("route agreement: coprime one-point formula (3,2)") {
    CorrelatorEngine eng(3, 2);
    CorrelatorTable det = eng.omega(1, 1);
    CorrelatorTable res = eng.omegaG1Coprime(1);
    CHECK(det == res);
}

TEST_CASE("coprime guard") {
    CHECK_THROWS_AS(CorrelatorEngine(4, 2).omegaG1Coprime(1), NotCoprime);
}

TEST_CASE("dimension filter rejects corrupted tables") {
    CorrelatorTable bad;
    bad.r = 3;
    bad.s = 2;
    bad.g = 1;
    bad.n = 1;
    bad.entries[{3}] = Rat(1);  // index divisible by r
    CHECK_THROWS_AS(intersectionNumbers(bad), DimensionViolation);
    CorrelatorTable bad2;
    bad2.r = 3;
    bad2.s = 2;
    bad2.g = 1;
    bad2.n = 1;
    bad2.entries[{5}] = Rat(1);  // wrong residue class for (g,n) = (1,1)
    CHECK_THROWS_AS(intersectionNumbers(bad2), DimensionViolation);
}
