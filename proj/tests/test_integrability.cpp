#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "thetars/integrability.hpp"

using namespace thetars;

TEST_CASE("assembled potential: no dependence on x_{rm}, anchor coefficient") {
    CorrelatorEngine eng(2, 1);
    PotentialTrunc Z = assemblePotential(eng, 3, {{0, 3}, {0, 4}, {1, 1}, {1, 2}, {1, 3}, {2, 1}});
    CHECK(!Z.dependsOnMultiplesOfR());
    // coefficient of hbar x_1 in F_{1,1} is 1 * 1 * 1/8
    CHECK(Z.coeffC(1, 1, {1}) == ratOf(1, 8));
    // F_{0,3} vanishes for s <= 2
    auto it = Z.F.find({0, 3});
    CHECK((it == Z.F.end() || it->second.empty()));
}

TEST_CASE("normal coordinates, closed geometric branch (2,1)") {
    CorrelatorEngine eng(2, 1);
    PotentialTrunc Z = assemblePotential(
        eng, 4, {{0, 3}, {0, 4}, {1, 1}, {1, 2}, {1, 3}, {1, 4}, {2, 1}, {2, 2}});
    InitialCondition ic = initialConditions(Z, 1, 4);
    CHECK(ic.closedFormS1);
    CHECK(ic.dAlpha == ratOf(1, 8));
    // u_1 = (1/8) (hbar/(1-hbar x_1))^2 = (1/8) sum (j+1) hbar^{2+j} x_1^j
    CHECK(ic.series.at({2, 0}) == ratOf(1, 8));
    CHECK(ic.series.at({3, 1}) == ratOf(2, 8));
    CHECK(ic.series.at({4, 2}) == ratOf(3, 8));
}

TEST_CASE("normal coordinates, closed geometric branch (3,1), both alphas") {
    CorrelatorEngine eng(3, 1);
    PotentialTrunc Z = assemblePotential(
        eng, 4, {{0, 3}, {0, 4}, {1, 1}, {1, 2}, {1, 3}, {1, 4}, {2, 1}, {2, 2}});
    InitialCondition ic1 = initialConditions(Z, 1, 4);
    CHECK(ic1.closedFormS1);
    CHECK(ic1.dAlpha == ratOf(7, 48));
    CHECK(ic1.series.at({3, 1}) == ratOf(7, 24));
    // even alpha: d_2 = 0 and the series vanishes identically
    InitialCondition ic2 = initialConditions(Z, 2, 4);
    CHECK(ic2.closedFormS1);
    CHECK(isZero(ic2.dAlpha));
    CHECK(ic2.series.empty());
}

TEST_CASE("normal coordinates, polynomial branch") {
    {
        CorrelatorEngine eng(3, 2);
        PotentialTrunc Z =
            assemblePotential(eng, 3, {{0, 3}, {0, 4}, {0, 5}, {1, 1}, {1, 2}, {1, 3}, {2, 1}});
        // u_1 is supported on (0,4) alone up to this order
        InitialCondition ic1 = initialConditions(Z, 1, 3);
        for (const auto& [key, v] : ic1.series) CHECK(key == std::make_pair(2, 2));
        CHECK(!ic1.series.empty());
        // u_2 is supported on (0,5) alone
        InitialCondition ic2 = initialConditions(Z, 2, 3);
        for (const auto& [key, v] : ic2.series) CHECK(key == std::make_pair(3, 3));
        CHECK(!ic2.series.empty());
    }
    {
        CorrelatorEngine eng(4, 3);
        PotentialTrunc Z = assemblePotential(eng, 2, {{0, 3}, {0, 4}, {1, 1}, {1, 2}});
        // u_1 = hbar <Theta_{0,3}(1,1,1)> x_1 exactly at this order
        InitialCondition ic1 = initialConditions(Z, 1, 2);
        CHECK(ic1.series.size() == 1);
        CHECK(ic1.series.count({1, 1}) == 1);
        // u_2 has empty support
        InitialCondition ic2 = initialConditions(Z, 2, 2);
        CHECK(ic2.series.empty());
    }
}

TEST_CASE("string equation holds for s = 1") {
    for (int r : {2, 3}) {
        CorrelatorEngine eng(r, 1);
        PotentialTrunc Z =
            assemblePotential(eng, 3, {{0, 3}, {0, 4}, {1, 1}, {1, 2}, {1, 3}, {2, 1}});
        Rat d1 = Rat(1) * Z.coeffC(1, 1, {1});  // alpha = 1 anchor
        CHECK(d1 == ratOf((long)(r - 1) * r + 1, 24 * (long)(r - 1)));
        DPoly res = stringEquationResidual(Z, d1, 4, 3, Z.maxVarIndex());
        for (const auto& [key, v] : res) {
            INFO("residual at hbar^", key.first);
            CHECK(isZero(v));
        }
    }
}

TEST_CASE("string constant splits as d_1 = (r^2-1)/24 + r A_2") {
    for (int r = 2; r <= 6; ++r) {
        Rat d1 = ratOf((long)(r - 1) * r + 1, 24 * (long)(r - 1));
        CHECK(d1 == ratOf((long)r * r - 1, 24) + Rat(r) * aConstant(r, 1, 2));
    }
}

TEST_CASE("wrong string constant is rejected") {
    CorrelatorEngine eng(2, 1);
    PotentialTrunc Z = assemblePotential(eng, 3, {{0, 3}, {0, 4}, {1, 1}, {1, 2}, {1, 3}, {2, 1}});
    DPoly res = stringEquationResidual(Z, ratOf(1, 7), 4, 3, Z.maxVarIndex());
    bool nonzero = false;
    for (const auto& [key, v] : res)
        if (!isZero(v)) nonzero = true;
    CHECK(nonzero);
}

TEST_CASE("a corrupted potential fails the closed geometric form") {
    CorrelatorEngine eng(2, 1);
    PotentialTrunc Z = assemblePotential(eng, 3, {{1, 1}, {1, 2}, {1, 3}});
    Z.setCoeffC(1, 3, {1, 1, 1}, Z.coeffC(1, 3, {1, 1, 1}) + Rat(1));
    CHECK_THROWS_AS(initialConditions(Z, 1, 3), FormMismatch);
}

TEST_CASE("modified unit axiom on computed (r,1) data") {
    for (int r : {2, 3}) {
        CorrelatorEngine eng(r, 1);
        PotentialTrunc Z =
            assemblePotential(eng, 4, {{1, 1}, {1, 2}, {1, 3}, {1, 4}, {2, 1}, {2, 2}});
        // <Theta_{g,n+1}(a,1)> = (2g-2+n) <Theta_{g,n}(a)>; C-coefficients
        // carry one extra multifactorial 1!^{(r)} = 1 per unit insertion
        for (auto [g, n] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {1, 3}, {2, 1}}) {
            for (int a = 1; a <= r - 1; ++a) {
                std::vector<int> m(n, 1);
                m[0] = a;
                std::vector<int> m1(n + 1, 1);
                m1[0] = a;
                Rat lhs = Z.coeffC(g, n + 1, m1);
                Rat rhs = Rat(2 * g - 2 + n) * Z.coeffC(g, n, m);
                CHECK(lhs == rhs);
            }
        }
    }
}
