#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "thetars/cyclotomic.hpp"
#include "thetars/rational.hpp"

namespace thetars {

struct WindowMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OrderingViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VarWindow {
    int lo = 0;
    int hi = 0;
    bool contains(int e) const { return e >= lo && e <= hi; }
};

namespace detail {

// Exponent key: up to 6 z-variables at 10 bits each plus hbar at 4 bits.
constexpr int kMaxVars = 6;
constexpr int kExpBias = 512;
constexpr int kHbarBias = 8;

inline uint64_t packKey(const int* e, int nvars, int h) {
    uint64_t key = (uint64_t)(h + kHbarBias);
    for (int i = 0; i < nvars; ++i) key = (key << 10) | (uint64_t)(e[i] + kExpBias);
    return key;
}

inline void unpackKey(uint64_t key, int nvars, int* e, int& h) {
    for (int i = nvars - 1; i >= 0; --i) {
        e[i] = (int)(key & 0x3ff) - kExpBias;
        key >>= 10;
    }
    h = (int)key - kHbarBias;
}

struct KeyHash {
    size_t operator()(uint64_t x) const {
        x ^= x >> 33;
        x *= 0xff51afd7ed558ccdULL;
        x ^= x >> 33;
        return (size_t)x;
    }
};

template <class T>
inline bool scalarIsZero(const T& v) {
    return v.isZero();
}
template <>
inline bool scalarIsZero<Rat>(const Rat& v) {
    return isZero(v);
}

}  // namespace detail

// Truncated Laurent series in several z-variables with coefficients in T
// (Rat or Cyc) that are Laurent-polynomial in hbar. Every exponent lives in
// an explicit per-variable window; inserts outside a window are dropped and
// recorded in truncated().
template <class T>
class GradedSeries {
  public:
    GradedSeries() = default;
    GradedSeries(int nvars, std::vector<VarWindow> win, VarWindow hwin)
        : nvars_(nvars), win_(std::move(win)), hwin_(hwin) {
        if (nvars_ > detail::kMaxVars) throw std::invalid_argument("too many series variables");
        if ((int)win_.size() != nvars_) throw std::invalid_argument("window count mismatch");
    }

    int nvars() const { return nvars_; }
    const std::vector<VarWindow>& windows() const { return win_; }
    const VarWindow& hbarWindow() const { return hwin_; }
    bool truncated() const { return truncated_; }
    void markTruncated() { truncated_ = true; }
    size_t termCount() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    void addTerm(const int* e, int h, const T& val) {
        if (detail::scalarIsZero(val)) return;
        if (!hwin_.contains(h)) {
            truncated_ = true;
            return;
        }
        for (int i = 0; i < nvars_; ++i) {
            if (!win_[i].contains(e[i])) {
                truncated_ = true;
                return;
            }
        }
        terms_[detail::packKey(e, nvars_, h)] += val;
    }
    void addTerm(const std::vector<int>& e, int h, const T& val) { addTerm(e.data(), h, val); }

    // Coefficient of prod z_i^{e_i} * hbar^h; throws when outside the window.
    T coeff(const std::vector<int>& e, int h) const {
        if (!hwin_.contains(h)) throw WindowMismatch("hbar exponent outside window");
        for (int i = 0; i < nvars_; ++i)
            if (!win_[i].contains(e[i])) throw WindowMismatch("z exponent outside window");
        auto it = terms_.find(detail::packKey(e.data(), nvars_, h));
        return it == terms_.end() ? T() : it->second;
    }

    void forEach(const std::function<void(const std::vector<int>&, int, const T&)>& f) const {
        std::vector<int> e(nvars_);
        int h;
        for (const auto& [key, val] : terms_) {
            if (detail::scalarIsZero(val)) continue;
            detail::unpackKey(key, nvars_, e.data(), h);
            f(e, h, val);
        }
    }

    void compress() {
        for (auto it = terms_.begin(); it != terms_.end();) {
            if (detail::scalarIsZero(it->second))
                it = terms_.erase(it);
            else
                ++it;
        }
    }

    GradedSeries& operator+=(const GradedSeries& o) {
        if (o.nvars_ != nvars_) throw std::logic_error("series arity mismatch");
        truncated_ = truncated_ || o.truncated_;
        std::vector<int> e(nvars_);
        int h;
        for (const auto& [key, val] : o.terms_) {
            if (detail::scalarIsZero(val)) continue;
            detail::unpackKey(key, nvars_, e.data(), h);
            addTerm(e.data(), h, val);
        }
        return *this;
    }

    GradedSeries operator-() const {
        GradedSeries out = *this;
        for (auto& [k, v] : out.terms_) v = -v;
        return out;
    }

    GradedSeries& scale(const T& s) {
        for (auto& [k, v] : terms_) v = v * s;
        return *this;
    }
    GradedSeries& scaleRat(const Rat& s) {
        for (auto& [k, v] : terms_) v = v * s;
        return *this;
    }

    // Multiply by the monomial hbar^dh * prod z_i^{de_i}; terms leaving the
    // window are dropped (recorded as truncation).
    GradedSeries shifted(const std::vector<int>& de, int dh) const {
        GradedSeries out(nvars_, win_, hwin_);
        out.truncated_ = truncated_;
        std::vector<int> e(nvars_);
        int h;
        std::vector<int> e2(nvars_);
        for (const auto& [key, val] : terms_) {
            if (detail::scalarIsZero(val)) continue;
            detail::unpackKey(key, nvars_, e.data(), h);
            for (int i = 0; i < nvars_; ++i) e2[i] = e[i] + de[i];
            out.addTerm(e2.data(), h + dh, val);
        }
        return out;
    }

    GradedSeries derivative(int var) const {
        GradedSeries out(nvars_, win_, hwin_);
        out.truncated_ = truncated_;
        std::vector<int> e(nvars_);
        int h;
        for (const auto& [key, val] : terms_) {
            if (detail::scalarIsZero(val)) continue;
            detail::unpackKey(key, nvars_, e.data(), h);
            if (e[var] == 0) continue;
            T v = val * Rat(e[var]);
            e[var] -= 1;
            out.addTerm(e.data(), h, v);
            e[var] += 1;
        }
        return out;
    }

    GradedSeries rewindow(std::vector<VarWindow> win, VarWindow hwin) const {
        GradedSeries out(nvars_, std::move(win), hwin);
        out.truncated_ = truncated_;
        std::vector<int> e(nvars_);
        int h;
        for (const auto& [key, val] : terms_) {
            if (detail::scalarIsZero(val)) continue;
            detail::unpackKey(key, nvars_, e.data(), h);
            out.addTerm(e.data(), h, val);
        }
        return out;
    }

    static GradedSeries one(int nvars, std::vector<VarWindow> win, VarWindow hwin, const T& unit) {
        GradedSeries out(nvars, std::move(win), hwin);
        std::vector<int> e(nvars, 0);
        out.addTerm(e.data(), 0, unit);
        return out;
    }

    // this * factor, where factor's variable j is this's variable varMap[j].
    // The product is clipped to outWin/outH.
    template <class TF>
    GradedSeries mulRemap(const GradedSeries<TF>& factor, const std::vector<int>& varMap,
                          const std::vector<VarWindow>& outWin, VarWindow outH) const {
        GradedSeries out(nvars_, outWin, outH);
        out.truncated_ = truncated_ || factor.truncated();
        std::vector<std::pair<std::vector<int>, std::pair<int, TF>>> fterms;
        factor.forEach([&](const std::vector<int>& fe, int fh, const TF& fv) {
            fterms.push_back({fe, {fh, fv}});
        });
        std::vector<int> e(nvars_);
        int h;
        std::vector<int> e2(nvars_);
        for (const auto& [key, val] : terms_) {
            if (detail::scalarIsZero(val)) continue;
            detail::unpackKey(key, nvars_, e.data(), h);
            for (const auto& [fe, fhv] : fterms) {
                int h2 = h + fhv.first;
                if (!outH.contains(h2)) {
                    out.truncated_ = true;
                    continue;
                }
                e2 = e;
                for (size_t j = 0; j < fe.size(); ++j) e2[varMap[j]] += fe[j];
                out.addTerm(e2.data(), h2, val * fhv.second);
            }
        }
        out.compress();
        return out;
    }

    GradedSeries mul(const GradedSeries& o, const std::vector<VarWindow>& outWin,
                     VarWindow outH) const {
        std::vector<int> idmap(nvars_);
        for (int i = 0; i < nvars_; ++i) idmap[i] = i;
        return mulRemap(o, idmap, outWin, outH);
    }

    bool isZeroSeries() const {
        for (const auto& [k, v] : terms_)
            if (!detail::scalarIsZero(v)) return false;
        return true;
    }

  private:
    int nvars_ = 0;
    std::vector<VarWindow> win_;
    VarWindow hwin_;
    std::unordered_map<uint64_t, T, detail::KeyHash> terms_;
    bool truncated_ = false;

    template <class U>
    friend class GradedSeries;
};

using RatSeries = GradedSeries<Rat>;
using CycSeries = GradedSeries<Cyc>;

// 1/(z_outer^r - z_inner^r) expanded in the regime |z_outer| > |z_inner|:
// sum_{p<=depth} z_inner^{rp} z_outer^{-r-rp}.
inline RatSeries geomExpandFree(int r, int vOuter, int vInner, int depth, int nvars,
                                const std::vector<VarWindow>& win, VarWindow hwin) {
    RatSeries out(nvars, win, hwin);
    std::vector<int> e(nvars, 0);
    for (int p = 0; p <= depth; ++p) {
        e[vOuter] = -r - r * p;
        e[vInner] = r * p;
        out.addTerm(e.data(), 0, Rat(1));
        e[vOuter] = e[vInner] = 0;
    }
    return out;
}

// Same, under the global ordering convention |z_0| > |z_1| > ...; the outer
// variable must precede the inner one.
inline RatSeries geomExpand(int r, int vi, int vj, int depth, int nvars,
                            const std::vector<VarWindow>& win, VarWindow hwin) {
    if (vi >= vj) throw OrderingViolation("geometric expansion requires the outer variable first");
    return geomExpandFree(r, vi, vj, depth, nvars, win, hwin);
}

// Substitute z_var -> theta^a z_var in a cyclotomic-coefficient series
// (theta the primitive r-th root inside the order-2r ring).
inline CycSeries sheetSubstitute(const CycSeries& s, int var, int a, int r) {
    CycSeries out(s.nvars(), s.windows(), s.hbarWindow());
    if (s.truncated()) out.markTruncated();
    int order = 2 * r;
    s.forEach([&](const std::vector<int>& e, int h, const Cyc& v) {
        out.addTerm(e.data(), h, v * Cyc::thetaPow(order, (long)a * e[var]));
    });
    return out;
}

inline CycSeries toCyc(const RatSeries& s, int order) {
    CycSeries out(s.nvars(), s.windows(), s.hbarWindow());
    if (s.truncated()) out.markTruncated();
    s.forEach([&](const std::vector<int>& e, int h, const Rat& v) {
        out.addTerm(e.data(), h, Cyc(order, v));
    });
    return out;
}

}  // namespace thetars
