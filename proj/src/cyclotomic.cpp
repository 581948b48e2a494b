#include "thetars/cyclotomic.hpp"

#include <mutex>
#include <sstream>

namespace thetars {

namespace {

using Poly = std::vector<Rat>;  // low-to-high, no trailing zeros enforced by normalize()

void normalize(Poly& p) {
    while (!p.empty() && isZero(p.back())) p.pop_back();
}

// Quotient of exact polynomial division (remainder must vanish).
Poly divExact(Poly num, const Poly& den) {
    Poly q(num.size() >= den.size() ? num.size() - den.size() + 1 : 0, Rat(0));
    while (num.size() >= den.size() && !num.empty()) {
        Rat lead = num.back() / den.back();
        size_t shift = num.size() - den.size();
        q[shift] = lead;
        for (size_t i = 0; i < den.size(); ++i) num[shift + i] -= lead * den[i];
        normalize(num);
        if (num.size() >=den.size() && num.size() && isZero(num.back())) normalize(num);
    }
    if (!num.empty()) throw std::logic_error("inexact polynomial division");
    return q;
}

Poly cyclotomicPoly(int n) {
    // Phi_n = (x^n - 1) / prod_{d | n, d < n} Phi_d.
    static std::map<int, Poly> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Poly num(n + 1, Rat(0));
    num[0] = Rat(-1);
    num[n] = Rat(1);
    for (int d = 1; d < n; ++d) {
        if (n % d != 0) continue;
        num = divExact(num, cyclotomicPoly(d));
    }
    cache[n] = num;
    return num;
}

std::vector<Rat> reduceMod(Poly p, const Poly& phi) {
    int deg = (int)phi.size() - 1;
    while ((int)p.size() > deg) {
        Rat lead = p.back();
        size_t shift = p.size() - phi.size();
        if (!isZero(lead)) {
            for (size_t i = 0; i < phi.size(); ++i) p[shift + i] -= lead * phi[i];
        }
        p.pop_back();
        normalize(p);
        if ((int)p.size() <= deg) break;
    }
    p.resize(deg, Rat(0));
    return p;
}

std::mutex g_ringMutex;
std::map<int, std::unique_ptr<CycRing>> g_rings;

}  // namespace

const CycRing& CycRing::get(int order) {
    if (order < 2) throw std::domain_error("cyclotomic order must be >= 2");
    std::lock_guard<std::mutex> lock(g_ringMutex);
    auto it = g_rings.find(order);
    if (it != g_rings.end()) return *it->second;
    auto ring = std::make_unique<CycRing>();
    ring->order = order;
    ring->phi = cyclotomicPoly(order);
    ring->deg = (int)ring->phi.size() - 1;
    int d = ring->deg;
    // x^(d+i) mod Phi for i = 0..d-2
    Poly cur(d + 1, Rat(0));
    cur[d] = Rat(1);
    for (int i = 0; i <= d - 2; ++i) {
        ring->powRows.push_back(reduceMod(cur, ring->phi));
        // multiply by x
        cur.assign(d + 1 + i + 1, Rat(0));
        cur[d + i + 1] = Rat(1);
    }
    for (int k = 0; k < order; ++k) {
        Poly xk(k + 1, Rat(0));
        xk[k] = Rat(1);
        ring->genPow.push_back(reduceMod(xk, ring->phi));
    }
    auto& ref = *ring;
    g_rings[order] = std::move(ring);
    return ref;
}

Cyc Cyc::etaPow(int order, long e) {
    const CycRing& ring = CycRing::get(order);
    long k = e % order;
    if (k < 0) k += order;
    Cyc out(order);
    out.c_ = ring.genPow[(size_t)k];
    return out;
}

bool Cyc::isZero() const {
    for (const Rat& x : c_)
        if (!thetars::isZero(x)) return false;
    return true;
}

bool Cyc::isRational() const {
    for (size_t i = 1; i < c_.size(); ++i)
        if (!thetars::isZero(c_[i])) return false;
    return true;
}

Rat Cyc::rationalPart() const {
    if (!isRational()) throw NotRational("cyclotomic element has non-rational residue: " + str());
    return c_.empty() ? Rat(0) : c_[0];
}

Cyc Cyc::operator-() const {
    Cyc out = *this;
    for (Rat& x : out.c_) x = -x;
    return out;
}

Cyc& Cyc::operator+=(const Cyc& o) {
    if (order_ == 0) { *this = o; return *this; }
    if (o.order_ == 0) return *this;
    if (order_ != o.order_) throw std::logic_error("cyclotomic order mismatch");
    for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Cyc& Cyc::operator-=(const Cyc& o) {
    *this += -o;
    return *this;
}

Cyc Cyc::operator*(const Cyc& o) const {
    if (order_ == 0 || o.order_ == 0) return Cyc();
    if (order_ != o.order_) throw std::logic_error("cyclotomic order mismatch");
    const CycRing& ring = CycRing::get(order_);
    int d = ring.deg;
    std::vector<Rat> conv(2 * d - 1, Rat(0));
    for (int i = 0; i < d; ++i) {
        if (thetars::isZero(c_[i])) continue;
        for (int j = 0; j < d; ++j) {
            if (thetars::isZero(o.c_[j])) continue;
            conv[i + j] += c_[i] * o.c_[j];
        }
    }
    Cyc out(order_);
    for (int i = 0; i < d; ++i) out.c_[i] = conv[i];
    for (int i = 0; i <= d - 2; ++i) {
        if (thetars::isZero(conv[d + i])) continue;
        const auto& row = ring.powRows[(size_t)i];
        for (int j = 0; j < d; ++j) out.c_[j] += conv[d + i] * row[j];
    }
    return out;
}

Cyc Cyc::operator*(const Rat& s) const {
    Cyc out = *this;
    for (Rat& x : out.c_) x *= s;
    return out;
}

bool Cyc::operator==(const Cyc& o) const {
    if (order_ == 0) return o.isZero();
    if (o.order_ == 0) return isZero();
    if (order_ != o.order_) return false;
    for (size_t i = 0; i < c_.size(); ++i)
        if (c_[i] != o.c_[i]) return false;
    return true;
}

Cyc Cyc::inverse() const {
    if (isZero()) throw std::domain_error("inverse of zero cyclotomic element");
    const CycRing& ring = CycRing::get(order_);
    // Extended Euclid over Q[x] for gcd(a, Phi); Phi irreducible makes the
    // gcd a nonzero constant, so a * s == const (mod Phi).
    Poly a(c_.begin(), c_.end());
    normalize(a);
    Poly b = ring.phi;
    Poly s0{Rat(1)}, s1{};
    Poly r0 = a, r1 = b;
    auto polySub = [](Poly x, const Poly& y, const Poly& q) {
        // x - q*y
        for (size_t i = 0; i < q.size(); ++i) {
            if (thetars::isZero(q[i])) continue;
            if (x.size() < y.size() + i) x.resize(y.size() + i, Rat(0));
            for (size_t j = 0; j < y.size(); ++j) x[i + j] -= q[i] * y[j];
        }
        normalize(x);
        return x;
    };
    auto polyDiv = [](Poly num, const Poly& den) {
        Poly q(num.size() >= den.size() ? num.size() - den.size() + 1 : 0, Rat(0));
        while (num.size() >= den.size() && !num.empty()) {
            Rat lead = num.back() / den.back();
            size_t shift = num.size() - den.size();
            q[shift] += lead;
            for (size_t i = 0; i < den.size(); ++i) num[shift + i] -= lead * den[i];
            normalize(num);
        }
        return q;
    };
    while (!(r1.size() == 0)) {
        Poly q = polyDiv(r0, r1);
        Poly r2 = polySub(r0, r1, q);
        Poly s2 = polySub(s0, s1, q);
        r0 = r1; r1 = r2;
        s0 = s1; s1 = s2;
    }
    if (r0.size() != 1) throw std::logic_error("cyclotomic inverse: gcd not constant");
    Rat invc = Rat(1) / r0[0];
    Poly res = reduceMod(s0, ring.phi);
    Cyc out(order_);
    for (int i = 0; i < ring.deg; ++i) out.c_[i] = res[i] * invc;
    return out;
}

std::string Cyc::str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < c_.size(); ++i) {
        if (i) os << ",";
        os << toString(c_[i]);
    }
    os << "]_" << order_;
    return os.str();
}

Cyc cycReduce(const std::map<long, Rat>& poly, int order) {
    Cyc out(order);
    for (const auto& [e, coef] : poly) out += Cyc::etaPow(order, e) * coef;
    return out;
}

}  // namespace thetars
