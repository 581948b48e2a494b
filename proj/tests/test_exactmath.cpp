#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "thetars/cyclotomic.hpp"
#include "thetars/rational.hpp"
#include "thetars/series.hpp"

using namespace thetars;

namespace {

Rat randRat(std::mt19937& rng) {
    std::uniform_int_distribution<int> num(-6, 6), den(1, 5);
    return ratOf(num(rng), den(rng));
}

Cyc randCyc(int order, std::mt19937& rng) {
    std::uniform_int_distribution<int> pw(0, 2 * order);
    std::map<long, Rat> poly;
    for (int t = 0; t < 3; ++t) poly[pw(rng)] += randRat(rng);
    return cycReduce(poly, order);
}

}  // namespace

TEST_CASE("rational basics and serialization") {
    Rat a = ratOf(2, 4);
    CHECK(toString(a) == "1/2");
    CHECK(toString(ratOf(-9, 3)) == "-3");
    CHECK(ratFromString("5/3") == ratOf(5, 3));
    CHECK(ratFromString("-7") == ratOf(-7));
    CHECK(toString(ratFromString("12/8")) == "3/2");
    CHECK(ratPow(ratOf(2, 3), -2) == ratOf(9, 4));
    CHECK(binomial(ratOf(-1, 2), 2) == ratOf(3, 8));
    CHECK(doubleFactorialOdd(3) == Rat(15));
    CHECK(doubleFactorialOdd(0) == Rat(1));
}

TEST_CASE("multifactorials") {
    CHECK(multifactorial(7, 3) == Rat(28));
    CHECK(multifactorial(5, 2) == Rat(15));
    CHECK(multifactorial(3, 3) == Rat(3));
    CHECK(multifactorial(1, 5) == Rat(1));
    CHECK(multifactorial(9, 4) == Rat(45));
}

TEST_CASE("cyclotomic: geometric sums of roots of unity vanish") {
    for (int r = 2; r <= 8; ++r) {
        int order = 2 * r;
        Cyc sum(order);
        for (int m = 0; m < r; ++m) sum += Cyc::thetaPow(order, m);
        CHECK(sum.isZero());
        CHECK(Cyc::thetaPow(order, r) == Cyc(order, Rat(1)));
    }
}

TEST_CASE("cyclotomic: rational part extraction") {
    for (int r = 3; r <= 7; ++r) {
        int order = 2 * r;
        Cyc c(order, ratOf(5, 3));
        CHECK(c.rationalPart() == ratOf(5, 3));
        Cyc sum(order);
        for (int m = 1; m < r; ++m) sum += Cyc::thetaPow(order, m);
        CHECK(sum.rationalPart() == Rat(-1));
        CHECK_THROWS_AS(Cyc::thetaPow(order, 1).rationalPart(), NotRational);
    }
}

TEST_CASE("cyclotomic: inverse in the order-4 ring gives 1/(1-theta)=1/2") {
    // r = 2: theta = eta^2 = -1, so 1/(1-theta) = 1/2
    int order = 4;
    Cyc den = Cyc(order, Rat(1)) - Cyc::thetaPow(order, 1);
    CHECK(den.inverse() == Cyc(order, ratOf(1, 2)));
}

TEST_CASE("cyclotomic: field inverses and ring axioms on random elements") {
    std::mt19937 rng(7);
    for (int r = 2; r <= 8; ++r) {
        int order = 2 * r;
        for (int trial = 0; trial < 20; ++trial) {
            Cyc a = randCyc(order, rng), b = randCyc(order, rng), c = randCyc(order, rng);
            CHECK((a * b) * c == a * (b * c));
            CHECK(a * (b + c) == a * b + a * c);
            CHECK((a + b) - b == a);
            if (!a.isZero()) CHECK(a * a.inverse() == Cyc(order, Rat(1)));
        }
    }
}

TEST_CASE("cyclotomic: canonical reduction is idempotent") {
    std::mt19937 rng(11);
    for (int r = 2; r <= 6; ++r) {
        int order = 2 * r;
        for (int trial = 0; trial < 10; ++trial) {
            Cyc a = randCyc(order, rng);
            std::map<long, Rat> poly;
            for (size_t i = 0; i < a.coeffs().size(); ++i) poly[(long)i] = a.coeffs()[i];
            CHECK(cycReduce(poly, order) == a);
        }
    }
}

TEST_CASE("series: derivative, substitution and hbar arithmetic") {
    VarWindow w{-12, 12};
    RatSeries s(1, {w}, {0, 4});
    int e = 5;
    s.addTerm(&e, 0, Rat(1));
    RatSeries d = s.derivative(0);
    std::vector<int> q{4};
    CHECK(d.coeff(q, 0) == Rat(5));

    // (1 + hbar z^{-2}) (1 - hbar z^{-2}) = 1 - hbar^2 z^{-4}
    RatSeries a(1, {w}, {0, 4}), b(1, {w}, {0, 4});
    int z0 = 0, zm2 = -2;
    a.addTerm(&z0, 0, Rat(1));
    a.addTerm(&zm2, 1, Rat(1));
    b.addTerm(&z0, 0, Rat(1));
    b.addTerm(&zm2, 1, Rat(-1));
    RatSeries p = a.mul(b, {w}, {0, 4});
    std::vector<int> at0{0}, atm4{-4};
    CHECK(p.coeff(at0, 0) == Rat(1));
    CHECK(p.coeff(atm4, 2) == Rat(-1));
    CHECK(p.coeff(atm4, 1) == Rat(0));
}

TEST_CASE("series: sheet substitution at a = r is the identity") {
    int r = 5, order = 10;
    std::mt19937 rng(3);
    CycSeries s(1, {{-8, 8}}, {0, 3});
    for (int t = 0; t < 6; ++t) {
        int e = (int)(rng() % 17) - 8;
        s.addTerm(&e, (int)(rng() % 3), randCyc(order, rng));
    }
    CycSeries sub = sheetSubstitute(s, 0, r, r);
    s.forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
        CHECK(sub.coeff(e, h) == v);
    });
    // successive substitutions with sheet indices summing to 0 mod r
    CycSeries t = sheetSubstitute(sheetSubstitute(sheetSubstitute(s, 0, 1, r), 0, 2, r), 0, 2, r);
    t = sheetSubstitute(t, 0, 2 * r - 5, r);
    s.forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
        CHECK(t.coeff(e, h) == v);
    });
}

TEST_CASE("series: geometric expansion of the pole in x") {
    // r=2, depth=1: z1^{-2} + z2^2 z1^{-4}
    std::vector<VarWindow> w{{-10, 10}, {-10, 10}};
    RatSeries g = geomExpand(2, 0, 1, 1, 2, w, {0, 0});
    CHECK(g.coeff({-2, 0}, 0) == Rat(1));
    CHECK(g.coeff({-4, 2}, 0) == Rat(1));
    CHECK(g.termCount() == 2);

    RatSeries g3 = geomExpand(3, 0, 1, 0, 2, w, {0, 0});
    CHECK(g3.coeff({-3, 0}, 0) == Rat(1));
    CHECK(g3.termCount() == 1);

    CHECK_THROWS_AS(geomExpand(2, 1, 0, 1, 2, w, {0, 0}), OrderingViolation);

    // (z1^r - z2^r) * geom = 1 + O(z2^{r(D+1)})
    int r = 3, D = 4;
    std::vector<VarWindow> wide{{-40, 40}, {-40, 40}};
    RatSeries geo = geomExpand(r, 0, 1, D, 2, wide, {0, 0});
    RatSeries xdiff(2, wide, {0, 0});
    xdiff.addTerm(std::vector<int>{r, 0}, 0, Rat(1));
    xdiff.addTerm(std::vector<int>{0, r}, 0, Rat(-1));
    RatSeries prod = xdiff.mul(geo, wide, {0, 0});
    CHECK(prod.coeff({0, 0}, 0) == Rat(1));
    CHECK(prod.coeff({-r * (D + 1), r * (D + 1)}, 0) == Rat(-1));
    size_t nonzero = 0;
    prod.forEach([&](const std::vector<int>&, int, const Rat& v) {
        if (!isZero(v)) ++nonzero;
    });
    CHECK(nonzero == 2);
}

TEST_CASE("series: window mismatch raises, out-of-window inserts record truncation") {
    RatSeries s(1, {{-2, 2}}, {0, 1});
    CHECK_THROWS_AS(s.coeff({5}, 0), WindowMismatch);
    CHECK_THROWS_AS(s.coeff({0}, 3), WindowMismatch);
    int e = 4;
    CHECK(!s.truncated());
    s.addTerm(&e, 0, Rat(1));
    CHECK(s.truncated());
}

TEST_CASE("series: associativity and distributivity with exact cancellation") {
    std::mt19937 rng(23);
    std::vector<VarWindow> w{{-30, 30}, {-30, 30}};
    VarWindow hw{0, 6};
    auto randSeries = [&]() {
        RatSeries s(2, w, hw);
        for (int t = 0; t < 8; ++t) {
            std::vector<int> e{(int)(rng() % 9) - 4, (int)(rng() % 9) - 4};
            s.addTerm(e, (int)(rng() % 3), randRat(rng));
        }
        return s;
    };
    for (int trial = 0; trial < 10; ++trial) {
        RatSeries a = randSeries(), b = randSeries(), c = randSeries();
        RatSeries ab_c = a.mul(b, w, hw).mul(c, w, hw);
        RatSeries a_bc = a.mul(b.mul(c, w, hw), w, hw);
        ab_c += -a_bc;
        ab_c.compress();
        CHECK(ab_c.empty());
        RatSeries bc = b;
        bc += c;
        RatSeries dist = a.mul(bc, w, hw);
        dist += -a.mul(b, w, hw);
        dist += -a.mul(c, w, hw);
        dist.compress();
        CHECK(dist.empty());
    }
}
