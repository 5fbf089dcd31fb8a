#pragma once

// Extended-range signed real arithmetic.
//
// XReal stores a number v as
//     v = sign * exp( lsign * T(h, m) ),   T(0,m) = m,  T(h,m) = exp(T(h-1,m)),
// i.e. the log-magnitude of v is a power tower of height h ending in the
// double payload m. Height 0 with |ln v| <= 1e100 covers everything an
// ordinary double (or its log) can hold; each extra level survives one more
// exponentiation. Doubly/triply exponential chains (iterated tower growth,
// profile recursions) stay representable with h growing by one per level.
//
// Arithmetic is exact to double rounding while operands are height 0; at
// height >= 1, additive corrections that fall below the resolution of the
// top payload are absorbed. The absorbed terms change the value by a
// relative amount below exp(-1e100), which is far under any tolerance used
// at those magnitudes.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <cstdio>

namespace escm {

namespace detail {

constexpr double kPayloadCap = 1e100;
// ln(kPayloadCap)
constexpr double kPayloadCapLog = 230.25850929940457;

// Magnitude tower T(h, m) >= 0. Normal form: h minimal, so for h >= 1 the
// payload satisfies m > kPayloadCapLog (its exp would exceed the cap).
struct Tower {
    int32_t h = 0;
    double m = 0.0;
};

inline Tower tower_normalize(int32_t h, double m) {
    if (std::isnan(m)) throw std::domain_error("XReal: NaN payload");
    while (m > kPayloadCap) {
        m = std::log(m);
        ++h;
    }
    while (h > 0 && m <= kPayloadCapLog) {
        m = std::exp(m);
        --h;
    }
    if (h == 0 && m < 0.0) m = 0.0;  // clamp tiny negative round-off
    return Tower{h, m};
}

// Value of the tower as a saturating double.
inline double tower_value_sat(const Tower& t) {
    if (t.h == 0) return t.m;
    if (t.h == 1) {
        if (t.m > 709.0) return std::numeric_limits<double>::infinity();
        return std::exp(t.m);
    }
    return std::numeric_limits<double>::infinity();
}

// ln of the tower value, saturating.
inline double tower_log_sat(const Tower& t) {
    if (t.h == 0) return (t.m > 0.0) ? std::log(t.m) : -std::numeric_limits<double>::infinity();
    return tower_value_sat(Tower{t.h - 1, t.m});
}

inline int tower_cmp(const Tower& a, const Tower& b) {
    if (a.h != b.h) return a.h < b.h ? -1 : 1;
    if (a.m != b.m) return a.m < b.m ? -1 : 1;
    return 0;
}

// T(h, m) + c for a plain double c with |c| small compared to the tower
// whenever h >= 1. Exact at h == 0.
inline Tower tower_add_double(const Tower& t, double c) {
    if (c == 0.0) return t;
    if (t.h == 0) return tower_normalize(0, t.m + c);
    // T(h,m) + c = exp(T(h-1,m) + log1p(c * exp(-T(h-1,m))))
    const double inner_log = tower_value_sat(Tower{t.h - 1, t.m});
    if (inner_log > 745.0) return t;  // correction underflows
    const double d = std::log1p(c * std::exp(-inner_log));
    Tower base = tower_add_double(Tower{t.h - 1, t.m}, d);
    return tower_normalize(base.h + 1, base.m);
}

// a + b for magnitude towers.
inline Tower tower_add(Tower a, Tower b) {
    if (b.h == 0 && b.m == 0.0) return a;
    if (a.h == 0 && a.m == 0.0) return b;
    if (tower_cmp(a, b) < 0) std::swap(a, b);
    if (a.h == 0) return tower_normalize(0, a.m + b.m);
    const double delta = tower_log_sat(b) - tower_log_sat(a);  // <= 0
    if (!(delta > -745.0)) return a;
    return tower_add_double(a, std::log1p(std::exp(delta)));
}

// a - b for magnitude towers, requires a >= b. Returns zero tower on ties.
inline Tower tower_sub(const Tower& a, const Tower& b) {
    const int c = tower_cmp(a, b);
    if (c == 0) return Tower{0, 0.0};
    if (c < 0) throw std::domain_error("tower_sub: negative result");
    if (a.h == 0) return tower_normalize(0, a.m - b.m);
    const double delta = tower_log_sat(b) - tower_log_sat(a);  // < 0
    if (!(delta > -745.0)) return a;
    const double corr = std::log1p(-std::exp(delta));
    return tower_add_double(a, corr);
}

// T(h, m) * q for q > 0.
inline Tower tower_scale(const Tower& t, double q) {
    if (q <= 0.0) throw std::domain_error("tower_scale: factor must be positive");
    if (t.h == 0) return tower_normalize(0, t.m * q);
    Tower base = tower_add_double(Tower{t.h - 1, t.m}, std::log(q));
    return tower_normalize(base.h + 1, base.m);
}

// Signed tower: s * T(h, m), used for log-magnitudes.
struct STower {
    int8_t s = 0;  // -1, 0, +1
    Tower t;
};

inline STower st_normalize(int8_t s, Tower t) {
    if (s == 0 || (t.h == 0 && t.m == 0.0)) return STower{0, Tower{0, 0.0}};
    return STower{s, t};
}

inline STower st_from_double(double x) {
    if (x == 0.0) return STower{};
    return st_normalize(x > 0 ? int8_t{1} : int8_t{-1}, tower_normalize(0, std::fabs(x)));
}

inline double st_value_sat(const STower& a) {
    if (a.s == 0) return 0.0;
    return a.s * tower_value_sat(a.t);
}

inline int st_cmp(const STower& a, const STower& b) {
    if (a.s != b.s) return a.s < b.s ? -1 : 1;
    if (a.s == 0) return 0;
    const int c = tower_cmp(a.t, b.t);
    return a.s > 0 ? c : -c;
}

inline STower st_neg(STower a) {
    a.s = static_cast<int8_t>(-a.s);
    return a;
}

inline STower st_add(const STower& a, const STower& b) {
    if (a.s == 0) return b;
    if (b.s == 0) return a;
    if (a.s == b.s) return st_normalize(a.s, tower_add(a.t, b.t));
    const int c = tower_cmp(a.t, b.t);
    if (c == 0) return STower{};
    if (c > 0) return st_normalize(a.s, tower_sub(a.t, b.t));
    return st_normalize(b.s, tower_sub(b.t, a.t));
}

inline STower st_sub(const STower& a, const STower& b) { return st_add(a, st_neg(b)); }

inline STower st_scale(const STower& a, double q) {
    if (q == 0.0 || a.s == 0) return STower{};
    const int8_t s = static_cast<int8_t>(q > 0 ? a.s : -a.s);
    return st_normalize(s, tower_scale(a.t, std::fabs(q)));
}

inline STower st_add_double(const STower& a, double c) {
    return st_add(a, st_from_double(c));
}

}  // namespace detail

class XReal {
public:
    XReal() = default;

    static XReal zero() { return XReal(); }
    static XReal one() {
        XReal r;
        r.sign_ = 1;
        return r;
    }
    static XReal infinity(int sign = 1) {
        XReal r;
        r.sign_ = static_cast<int8_t>(sign >= 0 ? 1 : -1);
        r.inf_ = true;
        return r;
    }

    static XReal from_double(double x) {
        if (std::isnan(x)) throw std::domain_error("XReal: NaN");
        XReal r;
        if (x == 0.0) return r;
        if (std::isinf(x)) return infinity(x > 0 ? 1 : -1);
        r.sign_ = static_cast<int8_t>(x > 0 ? 1 : -1);
        r.ln_ = detail::st_from_double(std::log(std::fabs(x)));
        return r;
    }

    // Positive value given by its natural log.
    static XReal from_ln(double ln_v) {
        XReal r;
        r.sign_ = 1;
        if (std::isinf(ln_v)) {
            if (ln_v > 0) return infinity();
            return zero();
        }
        r.ln_ = detail::st_from_double(ln_v);
        return r;
    }

    // Positive value v with ln v = s * T(h, m).
    static XReal from_log_tower(int sign_of_log, int32_t h, double m) {
        XReal r;
        r.sign_ = 1;
        r.ln_ = detail::st_normalize(static_cast<int8_t>(sign_of_log), detail::tower_normalize(h, m));
        return r;
    }

    bool is_zero() const { return sign_ == 0; }
    bool is_inf() const { return inf_; }
    int sign() const { return sign_; }

    XReal operator-() const {
        XReal r = *this;
        r.sign_ = static_cast<int8_t>(-r.sign_);
        return r;
    }

    XReal abs() const {
        XReal r = *this;
        if (r.sign_ < 0) r.sign_ = 1;
        return r;
    }

    friend XReal operator*(const XReal& a, const XReal& b) {
        if (a.sign_ == 0 || b.sign_ == 0) return zero();
        XReal r;
        r.sign_ = static_cast<int8_t>(a.sign_ * b.sign_);
        r.inf_ = a.inf_ || b.inf_;
        if (!r.inf_) r.ln_ = detail::st_add(a.ln_, b.ln_);
        return r;
    }

    friend XReal operator/(const XReal& a, const XReal& b) {
        if (b.sign_ == 0) throw std::domain_error("XReal: division by zero");
        if (b.inf_) return zero();
        if (a.sign_ == 0) return zero();
        XReal r;
        r.sign_ = static_cast<int8_t>(a.sign_ * b.sign_);
        r.inf_ = a.inf_;
        if (!r.inf_) r.ln_ = detail::st_sub(a.ln_, b.ln_);
        return r;
    }

    friend XReal operator+(const XReal& a, const XReal& b) {
        if (a.sign_ == 0) return b;
        if (b.sign_ == 0) return a;
        if (a.inf_ || b.inf_) {
            if (a.inf_ && b.inf_ && a.sign_ != b.sign_)
                throw std::domain_error("XReal: inf - inf");
            return a.inf_ ? a : b;
        }
        const int mc = detail::st_cmp(a.ln_, b.ln_);
        const XReal& big = (mc >= 0) ? a : b;
        const XReal& small = (mc >= 0) ? b : a;
        const double delta = ln_diff_sat(small.ln_, big.ln_);  // <= 0
        if (a.sign_ == b.sign_) {
            XReal r = big;
            if (delta > -745.0) r.ln_ = detail::st_add_double(r.ln_, std::log1p(std::exp(delta)));
            return r;
        }
        if (mc == 0) return zero();
        XReal r = big;
        if (delta > -745.0) {
            const double corr = std::log1p(-std::exp(delta));
            if (std::isinf(corr)) return zero();
            r.ln_ = detail::st_add_double(r.ln_, corr);
        }
        return r;
    }

    friend XReal operator-(const XReal& a, const XReal& b) { return a + (-b); }

    XReal pow(double p) const {
        if (p == 0.0) return one();
        if (sign_ == 0) {
            if (p > 0) return zero();
            throw std::domain_error("XReal: 0 to a negative power");
        }
        if (sign_ < 0) throw std::domain_error("XReal: pow of negative value");
        XReal r;
        r.sign_ = 1;
        if (inf_) {
            if (p > 0) return infinity();
            return zero();
        }
        r.ln_ = detail::st_scale(ln_, p);
        return r;
    }

    // exp(x) for x of any magnitude.
    static XReal exp_of(const XReal& x) {
        XReal r;
        r.sign_ = 1;
        if (x.sign_ == 0) {
            r.ln_ = detail::STower{};
            return r;  // exp(0) = 1
        }
        if (x.inf_) return x.sign_ > 0 ? infinity() : zero();
        // ln(result) = x; express the value of x as a tower.
        detail::Tower mag;
        if (x.ln_.s > 0) {
            mag = detail::tower_normalize(x.ln_.t.h + 1, x.ln_.t.m);
        } else if (x.ln_.s == 0) {
            mag = detail::tower_normalize(0, 1.0);
        } else {
            const double lv = detail::tower_value_sat(x.ln_.t);
            if (lv > 745.0) return one();  // |x| < exp(-745): saturates to 1
            mag = detail::tower_normalize(0, std::exp(-lv));
        }
        r.ln_ = detail::st_normalize(x.sign_, mag);
        return r;
    }

    // Natural log; requires a positive value.
    static XReal log_of(const XReal& v) {
        if (v.sign_ <= 0) throw std::domain_error("XReal: log of non-positive value");
        if (v.inf_) return infinity();
        XReal r;
        if (v.ln_.s == 0) return zero();
        r.sign_ = v.ln_.s;
        if (v.ln_.t.h >= 1) {
            r.ln_ = detail::st_normalize(1, detail::tower_normalize(v.ln_.t.h - 1, v.ln_.t.m));
        } else {
            r.ln_ = detail::st_from_double(std::log(v.ln_.t.m));
        }
        return r;
    }

    double to_double() const {
        if (sign_ == 0) return 0.0;
        if (inf_) return sign_ * std::numeric_limits<double>::infinity();
        const double lv = detail::st_value_sat(ln_);
        if (lv > 709.0) return sign_ * std::numeric_limits<double>::infinity();
        if (lv < -745.0) return 0.0;
        return sign_ * std::exp(lv);
    }

    // ln|v| as a saturating double.
    double ln_double() const {
        if (sign_ == 0) return -std::numeric_limits<double>::infinity();
        if (inf_) return std::numeric_limits<double>::infinity();
        return detail::st_value_sat(ln_);
    }

    // Height of the log-magnitude tower (0 when ln v fits a double).
    int log_height() const { return ln_.s == 0 ? 0 : ln_.t.h; }

    friend int cmp(const XReal& a, const XReal& b) {
        if (a.sign_ != b.sign_) return a.sign_ < b.sign_ ? -1 : 1;
        if (a.sign_ == 0) return 0;
        int c;
        if (a.inf_ || b.inf_) {
            c = (a.inf_ && b.inf_) ? 0 : (b.inf_ ? -1 : 1);
        } else {
            c = detail::st_cmp(a.ln_, b.ln_);
        }
        return a.sign_ > 0 ? c : -c;
    }

    friend bool operator<(const XReal& a, const XReal& b) { return cmp(a, b) < 0; }
    friend bool operator>(const XReal& a, const XReal& b) { return cmp(a, b) > 0; }
    friend bool operator<=(const XReal& a, const XReal& b) { return cmp(a, b) <= 0; }
    friend bool operator>=(const XReal& a, const XReal& b) { return cmp(a, b) >= 0; }
    friend bool operator==(const XReal& a, const XReal& b) { return cmp(a, b) == 0; }
    friend bool operator!=(const XReal& a, const XReal& b) { return cmp(a, b) != 0; }

    // Deterministic textual form for reports: plain decimal when the value
    // fits a double, otherwise the log (or log-tower) of the magnitude.
    std::string to_string() const {
        char buf[64];
        if (sign_ == 0) return "0";
        if (inf_) return sign_ > 0 ? "inf" : "-inf";
        const double d = to_double();
        if (d != 0.0 && !std::isinf(d)) {
            std::snprintf(buf, sizeof buf, "%.17g", d);
            return buf;
        }
        const char* vs = sign_ > 0 ? "" : "-";
        if (ln_.t.h == 0) {
            std::snprintf(buf, sizeof buf, "%sexp(%c%.17g)", vs, ln_.s > 0 ? '+' : '-', ln_.t.m);
            return buf;
        }
        std::snprintf(buf, sizeof buf, "%sexp(%cT%d(%.17g))", vs, ln_.s > 0 ? '+' : '-',
                      ln_.t.h, ln_.t.m);
        return buf;
    }

private:
    // ln|small| - ln|big| as a saturating double (<= 0).
    static double ln_diff_sat(const detail::STower& small, const detail::STower& big) {
        const detail::STower d = detail::st_sub(small, big);
        return detail::st_value_sat(d);
    }

    int8_t sign_ = 0;       // value sign
    bool inf_ = false;      // +/- infinity
    detail::STower ln_;     // log-magnitude; meaningful when sign_ != 0 && !inf_
};

inline XReal xmin(const XReal& a, const XReal& b) { return a <= b ? a : b; }
inline XReal xmax(const XReal& a, const XReal& b) { return a >= b ? a : b; }

}  // namespace escm
