#pragma once

// Strips S = {x + iy : x > 0, |y| < phi(x)} with decreasing half-width
// profiles: Ahlfors-type two-sided estimates for strip maps, the function
// tau driving the profile recursion, profile construction by iterating
// beta along the orbit of sigma(x) = x + alpha(x), an explicit approximate
// strip map, and the contour-integral construction of an entire function
// that is large inside the strip and small outside it.
//
// Profile values collapse doubly-exponentially fast, so constructed
// profiles store breakpoint values as extended-range reals and queries
// return the enclosing step envelope (upper: value at the last breakpoint
// at or before x; lower: value at the first breakpoint after x).

#include <algorithm>
#include <functional>
#include <memory>
#include <vector>

#include "core.hpp"
#include "extended_real.hpp"
#include "gauge.hpp"
#include "io.hpp"

namespace escm::strip {

struct StripProfile {
    double x0 = 0.0;
    double L = 1.0;  // sup phi = phi(x0); the extension below x0 is constant
    std::function<double(double)> plain;  // closed-form profiles
    std::vector<double> bx;               // breakpoint abscissas (increasing)
    std::vector<XReal> bv;                // values at breakpoints (decreasing)

    bool has_plain() const { return static_cast<bool>(plain); }
    bool has_breakpoints() const { return !bx.empty(); }

    // Plain evaluation with the constant extension below x0. For breakpoint
    // profiles this is the upper step envelope collapsed to double (0 when
    // the value underflows).
    double phi(double x) const {
        if (x < x0) x = x0;
        if (plain) return plain(x);
        return upper(x).to_double();
    }

    // Upper envelope: phi at the last breakpoint <= x (>= true phi(x)).
    XReal upper(double x) const {
        if (plain) return XReal::from_double(phi(x));
        if (x <= bx.front()) return bv.front();
        auto it = std::upper_bound(bx.begin(), bx.end(), x);
        return bv[static_cast<size_t>(it - bx.begin() - 1)];
    }

    // Lower envelope: phi at the first breakpoint > x (<= true phi(x));
    // beyond the last breakpoint the profile is not constructed.
    XReal lower(double x) const {
        if (plain) return XReal::from_double(phi(x));
        auto it = std::upper_bound(bx.begin(), bx.end(), x);
        if (it == bx.end()) throw precondition_error("StripProfile: x beyond construction");
        return bv[static_cast<size_t>(it - bx.begin())];
    }

    double max_x() const {
        if (!bx.empty()) return bx.back();
        return std::numeric_limits<double>::infinity();
    }

    // CSV serialization: x, phi (17 significant digits, 0 on underflow),
    // and the log-tower encoding of the value (depth, top) for losslessness.
    std::string to_csv() const {
        io::CsvWriter csv({"x", "phi", "value_repr"});
        if (has_breakpoints()) {
            for (size_t i = 0; i < bx.size(); ++i)
                csv.row({io::fmt_double(bx[i]), io::fmt_double(bv[i].to_double()),
                         bv[i].to_string()});
        } else {
            for (int i = 0; i <= 256; ++i) {
                const double x = x0 + i * 0.125;
                csv.row({io::fmt_double(x), io::fmt_double(phi(x)),
                         XReal::from_double(phi(x)).to_string()});
            }
        }
        return csv.str();
    }
};

inline StripProfile constant_profile(double c, double x0 = 0.0) {
    if (!(c > 0.0)) throw precondition_error("constant_profile: width must be positive");
    StripProfile p;
    p.x0 = x0;
    p.L = c;
    p.plain = [c](double) { return c; };
    return p;
}

// phi(x) = min(cap, 1/x), decreasing, eventually below 1/x.
inline StripProfile capped_reciprocal_profile(double cap = 1.0, double x0 = 0.0) {
    if (!(cap > 0.0)) throw precondition_error("capped_reciprocal_profile: bad cap");
    StripProfile p;
    p.x0 = x0;
    p.L = x0 > 1.0 / cap ? 1.0 / x0 : cap;
    const double c = p.L;
    p.plain = [c](double x) { return std::min(c, x > 0.0 ? 1.0 / x : c); };
    return p;
}

inline StripProfile reciprocal_profile(double x0) {
    if (!(x0 > 0.0)) throw precondition_error("reciprocal_profile: need x0 > 0");
    StripProfile p;
    p.x0 = x0;
    p.L = 1.0 / x0;
    p.plain = [](double x) { return 1.0 / x; };
    return p;
}

// Integral of 1/phi over [a, b] (adaptive; profile plain-evaluable there).
inline double inv_phi_integral(const StripProfile& p, double a, double b) {
    if (a == b) return 0.0;
    return integrate([&p](double x) { return 1.0 / p.phi(x); }, a, b, 1e-11);
}

// ---------------------------------------------------------------------------
// Ahlfors distortion bounds.
// ---------------------------------------------------------------------------

struct AhlforsLower {
    bool applicable = false;  // requires integral > 4
    double integral = 0.0;
    double bound = -std::numeric_limits<double>::infinity();
};

// Lower bound on inf-Re at x2 minus sup-Re at x1 under a conformal strip map.
inline AhlforsLower ahlfors_lower(const StripProfile& p, double x1, double x2) {
    if (!(x2 > x1)) throw precondition_error("ahlfors_lower: need x2 > x1");
    AhlforsLower out;
    out.integral = inv_phi_integral(p, x1, x2);
    if (out.integral > 4.0) {
        out.applicable = true;
        out.bound = M_PI * out.integral - 8.0 * M_PI;
    }
    return out;
}

// Boundary-abscissa slack for the opposite direction: xbar <= x + 8 phi(x).
inline double upper_abscissa_shift(const StripProfile& p, double x) {
    return x + 8.0 * p.phi(x);
}

// Upper bound on sup-Re at x2bar minus inf-Re at x1low for decreasing
// profiles: pi * integral + 8 pi L^4 / phi(x2bar)^4.
inline double ahlfors_upper(const StripProfile& p, double x1_low, double x2_bar) {
    if (!(x2_bar > x1_low)) throw precondition_error("ahlfors_upper: need x2bar > x1low");
    const double integral = inv_phi_integral(p, x1_low, x2_bar);
    const double tail = 8.0 * M_PI * std::pow(p.L, 4.0) / std::pow(p.phi(x2_bar), 4.0);
    return M_PI * integral + tail;
}

// Growth cap C / phi(x + 8 phi(x))^4; requires the phi <= 1/x regime.
inline double tract_growth_bound(const StripProfile& p, double x, double C = 1.0) {
    if (!(p.phi(x) <= 1.0 / x))
        throw precondition_error("tract_growth_bound: phi(x) <= 1/x regime not reached");
    return C / std::pow(p.phi(x + 8.0 * p.phi(x)), 4.0);
}

// ---------------------------------------------------------------------------
// tau and the profile recursion.
// ---------------------------------------------------------------------------

// tau(t) = ((t/4) exp(-exp(t^-5)))^(1/t), computed in log space:
// ln tau = (ln(t/4) - exp(t^-5)) / t. The inner exponential exceeds double
// range almost immediately, so the value is carried as an extended real.
inline XReal tau_x(const XReal& t) {
    if (!(t > XReal::zero()) || t > XReal::one())
        throw precondition_error("tau: t must lie in (0, 1]");
    const XReal ln_t = XReal::log_of(t);
    const XReal inner = XReal::exp_of(XReal::exp_of(XReal::from_double(-5.0) * ln_t));
    const XReal ln_tau = (ln_t - XReal::from_double(std::log(4.0)) - inner) / t;
    return XReal::exp_of(ln_tau);
}

inline XReal tau(double t) { return tau_x(XReal::from_double(t)); }

// Sampled monotonicity of a map on (0,1] at log-spaced points; the profile
// recursion requires its step map to be increasing and fails loudly here
// rather than assuming it.
inline bool monotone_on_grid(const std::function<XReal(const XReal&)>& f, double ln_t_min,
                             int n = 1000) {
    XReal prev;
    bool first = true;
    for (int i = 0; i < n; ++i) {
        const double ln_t = ln_t_min + (0.0 - ln_t_min) * (i + 0.5) / n;
        const XReal v = f(XReal::from_ln(ln_t));
        if (!first && v < prev) return false;
        prev = v;
        first = false;
    }
    return true;
}

struct ProfileBuild {
    StripProfile profile;
    long long levels = 0;
    std::function<double(double)> alpha_used;
};

// Construct a decreasing profile with phi(sigma(x)) = beta*(phi(x)) along
// the orbit of sigma(x) = x + alpha(x), linear seed values on the first
// interval, beta*(t) = min(beta(t), t/2). The orbit points (subdivided by
// `subdiv` seed points) are the breakpoints; sigma is kept increasing by
// clamping the step when a decreasing alpha sample would fold the order.
inline ProfileBuild build_phi(const std::function<double(double)>& alpha,
                              const std::function<XReal(const XReal&)>& beta, double x0,
                              double x_max, double seed = 1.0, int subdiv = 8,
                              long long max_breakpoints = 6000000) {
    if (!(x_max > x0)) throw precondition_error("build_phi: x_max below x0");
    if (!(seed > 0.0 && seed <= 1.0)) throw precondition_error("build_phi: seed in (0,1]");
    auto beta_star = [&beta](const XReal& t) {
        return xmin(beta(t), t * XReal::from_double(0.5));
    };
    ProfileBuild out;
    StripProfile& p = out.profile;
    p.x0 = x0;
    p.L = seed;
    const double a0 = alpha(x0);
    if (!(a0 > 0.0)) throw precondition_error("build_phi: alpha must be positive");
    // Seed interval [x0, sigma(x0)] with linear values.
    const XReal seed_x = XReal::from_double(seed);
    const XReal seed_end = beta_star(seed_x);
    const double seed_end_d = seed_end.to_double();
    for (int j = 0; j < subdiv; ++j) {
        const double fx = static_cast<double>(j) / subdiv;
        p.bx.push_back(x0 + a0 * fx);
        p.bv.push_back(XReal::from_double(seed * (1.0 - fx) + seed_end_d * fx));
    }
    // Iterate sigma level by level over the subdivided seed points.
    size_t level_begin = 0;
    while (p.bx.back() < x_max) {
        const size_t level_end = p.bx.size();
        double prev_x = p.bx.back();
        for (size_t i = level_begin; i < level_end; ++i) {
            double a = alpha(p.bx[i]);
            if (!(a > 0.0)) throw precondition_error("build_phi: alpha must stay positive");
            double nx = p.bx[i] + a;
            if (nx <= prev_x) nx = prev_x + 1e-12 * std::max(1.0, std::fabs(prev_x));
            p.bx.push_back(nx);
            p.bv.push_back(beta_star(p.bv[i]));
            prev_x = nx;
            if (static_cast<long long>(p.bx.size()) > max_breakpoints)
                throw numeric_error("build_phi: breakpoint budget exhausted");
        }
        level_begin = level_end;
        ++out.levels;
    }
    out.alpha_used = alpha;
    return out;
}

struct Thm2Profile {
    StripProfile profile;
    std::function<double(double)> alpha;
    double p1 = 0.0;
    long long levels = 0;
};

// Theorem-2 style profile: alpha interpolates 1/n^2 at the rate points,
// beta = g^{-1} o tau, seed scaled so the profile sits below 1/x^2 from the
// start (the unit seed of the generic construction would violate that for
// rate points left of -1).
inline Thm2Profile build_phi_thm2(const gauge::Envelope& g,
                                  const std::function<double(long long)>& p_of_n,
                                  double x_span, int subdiv = 4) {
    Thm2Profile out;
    const double p1 = p_of_n(1);
    out.p1 = p1;
    const double x_max = p1 + x_span;
    // alpha table: alpha(p_{n-1}) = 1/n^2, linear between rate points.
    auto pn = std::make_shared<std::vector<double>>();
    pn->push_back(p1);
    for (long long n = 2;; ++n) {
        const double v = p_of_n(n);
        if (!(v > pn->back()))
            throw precondition_error("build_phi_thm2: rate sequence must increase");
        pn->push_back(v);
        if (v > x_max + 1.0) break;
        if (n > 100000) throw precondition_error("build_phi_thm2: rate sequence too flat");
    }
    auto alpha = [pn](double x) {
        if (x <= (*pn)[0]) return 0.25;
        auto it = std::upper_bound(pn->begin(), pn->end(), x);
        if (it == pn->end()) {
            const double n = static_cast<double>(pn->size());
            return 1.0 / sq(n + 1.0);
        }
        const size_t i = static_cast<size_t>(it - pn->begin());  // x in [p_i, p_{i+1}) 1-based
        const double nlo = 1.0 / sq(static_cast<double>(i) + 1.0);
        const double nhi = 1.0 / sq(static_cast<double>(i) + 2.0);
        const double t = (x - (*pn)[i - 1]) / ((*pn)[i] - (*pn)[i - 1]);
        return nlo + (nhi - nlo) * t;
    };
    auto beta = [&g](const XReal& t) { return g.inverse(tau_x(t)); };
    if (!monotone_on_grid(beta, std::log(0.05), 400))
        throw numeric_error("build_phi_thm2: step map not increasing on the working grid");
    const double seed = std::min(1.0, 1.0 / sq(std::max(std::fabs(p1), 1.0)));
    ProfileBuild built = build_phi(alpha, beta, p1, x_max, seed, subdiv);
    out.profile = std::move(built.profile);
    out.levels = built.levels;
    out.alpha = alpha;
    return out;
}

// ---------------------------------------------------------------------------
// Approximate strip map and the contour-integral function.
// ---------------------------------------------------------------------------

// what(zeta) = pi * int_{x0}^{Re zeta} dt/phi + i pi Im(zeta)/phi(Re zeta);
// exact for constant-width strips, Ahlfors-sandwiched otherwise. Requires
// zeta in the closed strip.
inline cplx approx_strip_map(const StripProfile& p, cplx zeta) {
    const double x = zeta.real();
    const double ph = p.phi(x);
    if (!(std::fabs(zeta.imag()) <= ph * (1.0 + 1e-12)))
        throw precondition_error("approx_strip_map: point outside the closed strip");
    return cplx(M_PI * inv_phi_integral(p, p.x0, x), M_PI * zeta.imag() / ph);
}

struct ApproxEntireFunction {
    StripProfile profile;
    double spacing = 0.01;
    double x_left = 0.0;   // strip start
    double x_max = 0.0;    // truncation abscissa
    double scale = 1.0;    // normalization factor
    std::vector<cplx> vertices;  // closed boundary polyline, positively oriented
    // Precomputed Gauss-Legendre node data: position and integrand weight
    // (already divided by 2 pi i and scaled by segment half-length).
    std::vector<cplx> q_nodes;
    std::vector<cplx> q_weights;
    // Cumulative integral of 1/phi on a fine grid for the strip map.
    std::vector<double> wx, wint;

    double re_w(double x) const {
        if (x <= wx.front()) return wint.front() - M_PI * (wx.front() - x) / profile.phi(wx.front());
        if (x >= wx.back()) return wint.back() + M_PI * (x - wx.back()) / profile.phi(wx.back());
        const auto it = std::upper_bound(wx.begin(), wx.end(), x);
        const size_t i = static_cast<size_t>(it - wx.begin() - 1);
        const double t = (x - wx[i]) / (wx[i + 1] - wx[i]);
        return wint[i] * (1.0 - t) + wint[i + 1] * t;
    }

    cplx w_map(cplx zeta) const {
        return cplx(re_w(zeta.real()), M_PI * zeta.imag() / profile.phi(zeta.real()));
    }

    bool inside_strip(cplx z) const {
        return z.real() > x_left && std::fabs(z.imag()) < profile.phi(z.real());
    }

    double contour_distance(cplx z) const {
        double d = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i + 1 < vertices.size(); ++i) {
            const cplx a = vertices[i], b = vertices[i + 1];
            const cplx ab = b - a;
            const double t = std::clamp(((z - a) * std::conj(ab)).real() / std::norm(ab), 0.0, 1.0);
            d = std::min(d, std::abs(z - (a + t * ab)));
        }
        return d;
    }

    // Cauchy-kernel sum over the precomputed nodes.
    cplx kernel_sum(cplx z, bool squared = false) const {
        cplx acc{0.0, 0.0};
        for (size_t i = 0; i < q_nodes.size(); ++i) {
            const cplx d = q_nodes[i] - z;
            acc += squared ? q_weights[i] / (d * d) : q_weights[i] / d;
        }
        return acc;
    }

    cplx eval_raw(cplx z) const {
        if (contour_distance(z) < spacing)
            throw precondition_error("ApproxEntireFunction: query too close to the contour");
        cplx v = kernel_sum(z);
        if (inside_strip(z) && z.real() < x_max) {
            const cplx w = w_map(z);
            const cplx ew = std::exp(w);
            if (ew.real() > 700.0)
                throw numeric_error("ApproxEntireFunction: residue term overflows; use eval_log_magnitude");
            v += std::exp(ew);
        }
        return v;
    }

    cplx eval(cplx z) const { return scale * eval_raw(z); }

    // ln |f(z)| with the inner term carried in extended range.
    XReal eval_log_magnitude(cplx z) const {
        if (inside_strip(z) && z.real() < x_max) {
            const cplx w = w_map(z);
            const double re_ew = std::exp(std::min(w.real(), 700.0)) * std::cos(w.imag());
            if (re_ew > 700.0) {
                // residue term dominates the O(1/z) contour part
                return XReal::exp_of(
                           XReal::exp_of(XReal::from_double(w.real())) *
                           XReal::from_double(std::cos(w.imag()))) *
                       XReal::from_double(scale);
            }
        }
        return XReal::from_double(std::abs(eval(z)));
    }

    // Derivative: contour kernel squared outside; inside, a small Cauchy
    // circle over eval keeps clear of the non-holomorphic strip-map proxy.
    cplx derivative(cplx z) const {
        if (!inside_strip(z)) return scale * kernel_sum(z, true);
        const double rho = 0.45 * std::min(profile.phi(z.real()) - std::fabs(z.imag()),
                                           contour_distance(z));
        if (!(rho > 4.0 * spacing)) return scale * kernel_sum(z, true);
        const int n = 32;
        cplx acc{0.0, 0.0};
        for (int k = 0; k < n; ++k) {
            const double th = 2.0 * M_PI * k / n;
            const cplx e(std::cos(th), std::sin(th));
            acc += eval(z + rho * e) / e;
        }
        return acc / (static_cast<double>(n) * rho);
    }
};

struct ContourBuildOptions {
    double spacing = 0.01;
    double truncate_re_w = 40.0;  // stop once Re w exceeds this (integrand is exactly 0)
    int norm_circle_samples = 64;
    int norm_inner_samples = 49;
    int norm_boundary_probes = 200;
};

inline ApproxEntireFunction contour_function_build(const StripProfile& profile,
                                                   const ContourBuildOptions& opt = {}) {
    ApproxEntireFunction f;
    f.profile = profile;
    f.spacing = opt.spacing;
    f.x_left = 0.0;

    // Fine cumulative table for Re w from the strip start.
    const double step = 0.25 * opt.spacing;
    f.wx.push_back(std::min(0.0, profile.x0));
    f.wint.push_back(M_PI * inv_phi_integral(profile, profile.x0, f.wx.front()));
    double re_w = f.wint.back();
    while (re_w < opt.truncate_re_w + 2.0) {
        const double x = f.wx.back();
        const double mid = 1.0 / profile.phi(x + 0.5 * step);
        re_w += M_PI * step * (1.0 / profile.phi(x) + 4.0 * mid + 1.0 / profile.phi(x + step)) / 6.0;
        f.wx.push_back(x + step);
        f.wint.push_back(re_w);
        if (f.wx.size() > 40000000) throw numeric_error("contour build: strip opens too slowly");
    }
    f.x_max = f.wx.back();
    if (!(profile.phi(f.x_max) > 4.0 * opt.spacing))
        throw precondition_error("contour build: spacing too coarse for the strip width");

    // Closed boundary polyline, counterclockwise around the truncated strip:
    // bottom edge left to right, right cap upward, top edge right to left,
    // left cap downward.
    std::vector<cplx>& vs = f.vertices;
    const int nx = static_cast<int>(std::ceil((f.x_max - f.x_left) / opt.spacing));
    for (int i = 0; i <= nx; ++i) {
        const double x = f.x_left + (f.x_max - f.x_left) * i / nx;
        vs.emplace_back(x, -profile.phi(x));
    }
    const double phi_end = profile.phi(f.x_max);
    const int ny = std::max(2, static_cast<int>(std::ceil(2.0 * phi_end / opt.spacing)));
    for (int i = 1; i <= ny; ++i)
        vs.emplace_back(f.x_max, -phi_end + 2.0 * phi_end * i / ny);
    for (int i = nx - 1; i >= 0; --i) {
        const double x = f.x_left + (f.x_max - f.x_left) * i / nx;
        vs.emplace_back(x, profile.phi(x));
    }
    const double phi_left = profile.phi(f.x_left);
    const int nyl = std::max(2, static_cast<int>(std::ceil(2.0 * phi_left / opt.spacing)));
    for (int i = 1; i <= nyl; ++i)
        vs.emplace_back(f.x_left, phi_left - 2.0 * phi_left * i / nyl);

    // Precompute integrand nodes: exp(e^{w(zeta)}) dzeta / (2 pi i) per
    // 5-point Gauss-Legendre panel.
    const cplx inv_2pii = 1.0 / (2.0 * M_PI * cplx(0.0, 1.0));
    for (size_t i = 0; i + 1 < vs.size(); ++i) {
        const cplx a = vs[i], b = vs[i + 1];
        const cplx mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int g = 0; g < 5; ++g) {
            const cplx zeta = mid + GaussLegendre5::x[g] * half;
            const cplx w = f.w_map(zeta);
            const double re_ew = std::exp(std::min(w.real(), 700.0)) * std::cos(w.imag());
            const double im_ew = std::exp(std::min(w.real(), 700.0)) * std::sin(w.imag());
            // on the boundary Im w = +/- pi, so Re e^w = -e^{Re w}: decays
            const cplx integrand = std::exp(cplx(std::min(re_ew, 700.0), im_ew));
            f.q_nodes.push_back(zeta);
            f.q_weights.push_back(integrand * GaussLegendre5::w[g] * half * inv_2pii);
        }
    }

    }
    return f;
}

}  // namespace escm::strip
