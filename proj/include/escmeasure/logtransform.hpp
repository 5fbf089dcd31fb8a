#pragma once

// Class-B model functions and the logarithmic transform F with
// exp(F(z)) = f(exp z), its tract inverse branches, the branch-square
// construction feeding second-iterate inverse-branch schemes, the growth
// lemma for increasing real functions, and the staged scheme builder.
//
// For the exponential family f = lambda e^z everything is available in
// closed form: F(z) = e^z + Log(lambda), tract branches are shifted
// principal logs. Branch squares for a square at abscissa x live at
// translate heights around exp(3h(x)/4); positions, radii and contraction
// bounds are handled through their logarithms, and the composed inverse
// branch of F^2 evaluates round trips through a fused expm1/log1p path so
// that the huge translate cancels analytically instead of numerically.

#include <functional>
#include <optional>
#include <vector>

#include "core.hpp"
#include "extended_real.hpp"
#include "ifs.hpp"

namespace escm::logtransform {

struct ClassBModel {
    std::function<cplx(cplx)> f;
    std::function<cplx(cplx)> fprime;
    cplx lambda{1.0, 0.0};
    double R = 1.0;        // sing(f^{-1}) inside D(0,R), R >= |f(0)|
    bool exact_transform = false;
    double xi = -std::numeric_limits<double>::infinity();  // inf Re of the lift domain
};

inline ClassBModel exponential_model(cplx lambda, double R) {
    if (!(std::abs(lambda) > 0.0)) throw precondition_error("exponential_model: lambda = 0");
    if (!(R >= std::abs(lambda)))
        throw precondition_error("exponential_model: need R >= |lambda|");
    ClassBModel m;
    m.lambda = lambda;
    m.R = R;
    m.exact_transform = true;
    m.f = [lambda](cplx z) { return lambda * std::exp(z); };
    m.fprime = m.f;
    const double c = std::log(R / std::abs(lambda));
    m.xi = c > 0.0 ? std::log(c) : -std::numeric_limits<double>::infinity();
    return m;
}

// Wrap an arbitrary evaluator (e.g. a contour-built function) as a model.
inline ClassBModel generic_model(std::function<cplx(cplx)> f, std::function<cplx(cplx)> fp,
                                 double R, double xi) {
    ClassBModel m;
    m.f = std::move(f);
    m.fprime = std::move(fp);
    m.R = R;
    m.xi = xi;
    return m;
}

inline cplx log_lambda(const ClassBModel& m) {
    return cplx(std::log(std::abs(m.lambda)), std::arg(m.lambda));
}

// Membership in the lift domain U = exp^{-1}{|f| > R}.
inline bool in_log_domain(const ClassBModel& m, cplx z) {
    if (m.exact_transform) {
        const double c = std::log(m.R / std::abs(m.lambda));  // >= 0
        const double x = z.real();
        const double cosy = std::cos(z.imag());
        if (x > 700.0) return cosy > c * std::exp(-x);
        return std::exp(x) * cosy > c;
    }
    return std::abs(m.f(std::exp(z))) > m.R;
}

// F(z) with exp(F(z)) = f(exp z); exact for the exponential family,
// sample-wise principal log otherwise.
inline cplx log_transform_eval(const ClassBModel& m, cplx z) {
    if (!in_log_domain(m, z))
        throw precondition_error("log_transform_eval: exp(z) outside {|f| > R}");
    if (m.exact_transform) return std::exp(z) + log_lambda(m);
    const cplx w = m.f(std::exp(z));
    return cplx(std::log(std::abs(w)), std::arg(w));
}

inline cplx log_transform_deriv(const ClassBModel& m, cplx z) {
    if (m.exact_transform) return std::exp(z);
    const cplx ez = std::exp(z);
    return m.fprime(ez) * ez / m.f(ez);
}

// Inverse branch of F for one tract: phi_k(w) = Log(w - Log lambda) + 2 pi i k,
// mapping the half-plane {Re w > log R} onto the k-th tract.
struct LogTract {
    cplx loglam;
    double logR = 0.0;
    long long k = 0;

    cplx phi(cplx w) const {
        if (!(w.real() > logR)) throw precondition_error("LogTract: Re w <= log R");
        return std::log(w - loglam) + cplx(0.0, 2.0 * M_PI * static_cast<double>(k));
    }
    cplx phi_prime(cplx w) const {
        if (!(w.real() > logR)) throw precondition_error("LogTract: Re w <= log R");
        return 1.0 / (w - loglam);
    }
};

inline LogTract make_tract(const ClassBModel& m, long long k) {
    if (!m.exact_transform)
        throw precondition_error("make_tract: closed-form tracts need the exponential family");
    return LogTract{log_lambda(m), std::log(m.R), k};
}

struct BranchBoundsReport {
    double min_slack_inverse = std::numeric_limits<double>::infinity();  // 4pi/(Re w - logR) - |phi'|
    double min_slack_forward = std::numeric_limits<double>::infinity();  // |F'| - (Re F - logR)/(4pi)
    std::vector<cplx> violations;
};

// Both half-plane bounds at each sample: the inverse-branch derivative
// bound and its restatement for F'.
inline BranchBoundsReport check_branch_bounds(const ClassBModel& m, const LogTract& tract,
                                              const std::vector<cplx>& w_samples) {
    BranchBoundsReport rep;
    for (cplx w : w_samples) {
        const double denom = w.real() - tract.logR;
        if (!(denom > 0.0)) throw precondition_error("check_branch_bounds: Re w <= log R");
        const double sa = 4.0 * M_PI / denom - std::abs(tract.phi_prime(w));
        const cplx z = tract.phi(w);
        const cplx Fz = log_transform_eval(m, z);
        const double sb = std::abs(log_transform_deriv(m, z)) -
                          (Fz.real() - tract.logR) / (4.0 * M_PI);
        rep.min_slack_inverse = std::min(rep.min_slack_inverse, sa);
        rep.min_slack_forward = std::min(rep.min_slack_forward, sb);
        if (sa < 0.0 || sb < 0.0) rep.violations.push_back(w);
    }
    return rep;
}

// h(x) = max over Re z = x of Re F(z), with the maximizing point and the
// derivative. Closed form for the exponential family; for general models a
// sampled maximum over the circle |zeta| = e^x with golden-section
// refinement, h' by symmetric difference.
struct TractGrowth {
    double h = 0.0;        // saturates to inf when e^x overflows
    double ln_h = 0.0;     // always valid
    cplx z_x;
    double hprime = 0.0;
    double ln_hprime = 0.0;
    double two_x_margin = 0.0;  // h(x) - 2x
};

inline double tract_growth_value(const ClassBModel& m, double x);

inline TractGrowth tract_growth(const ClassBModel& m, double x) {
    if (!(x > m.xi)) throw precondition_error("tract_growth: x <= xi");
    TractGrowth g;
    if (m.exact_transform) {
        const double L0 = std::log(std::abs(m.lambda));
        g.ln_hprime = x;
        g.hprime = x < 709.0 ? std::exp(x) : std::numeric_limits<double>::infinity();
        g.ln_h = x + std::log1p(x < 709.0 ? L0 / g.hprime : 0.0);
        g.h = g.ln_h < 709.0 ? std::exp(x) + L0 : std::numeric_limits<double>::infinity();
        g.z_x = cplx(x, 0.0);
        g.two_x_margin = std::isfinite(g.h) ? g.h - 2.0 * x
                                            : std::numeric_limits<double>::infinity();
        if (!(g.h > std::log(m.R)))
            throw precondition_error("tract_growth: F(z_x) below the half-plane");
        return g;
    }
    const int n = 720;
    double best = -std::numeric_limits<double>::infinity();
    double best_y = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = -M_PI + 2.0 * M_PI * i / n;
        const cplx zeta = std::exp(cplx(x, y));
        const double v = std::log(std::abs(m.f(zeta)));
        if (v > best) {
            best = v;
            best_y = y;
        }
    }
    // Golden-section refinement around the coarse maximum.
    double a = best_y - 2.0 * M_PI / n, b = best_y + 2.0 * M_PI / n;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    auto val = [&](double y) { return std::log(std::abs(m.f(std::exp(cplx(x, y))))); };
    double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    for (int it = 0; it < 80; ++it) {
        if (val(c1) < val(c2)) {
            a = c1;
            c1 = c2;
            c2 = a + gr * (b - a);
        } else {
            b = c2;
            c2 = c1;
            c1 = b - gr * (b - a);
        }
    }
    const double y_star = 0.5 * (a + b);
    g.h = val(y_star);
    g.ln_h = std::log(g.h);
    g.z_x = cplx(x, y_star);
    const double dx = 1e-5 * std::max(1.0, std::fabs(x));
    const double hp = (tract_growth_value(m, x + dx) - tract_growth_value(m, x - dx)) / (2 * dx);
    g.hprime = hp;
    g.ln_hprime = std::log(std::max(hp, 1e-300));
    g.two_x_margin = g.h - 2.0 * x;
    return g;
}

// ---------------------------------------------------------------------------
// Branch squares: the inverse-branch family of F^2 over the quarter square.
// ---------------------------------------------------------------------------

// Composite inverse branch of F^2 for translate (k, l):
//     psi(w) = Log( Log(w - Loglam) + 2 pi i k - Loglam ) + 2 pi i l.
// kappa = 2 pi k is carried by its logarithm; k is treated as an exact
// integer, so exp(2 pi i k) = 1 is applied analytically when round trips
// are evaluated. This keeps the round trip meaningful even where kappa
// dwarfs double resolution.
struct InverseBranchF2 {
    double ln_kappa = 0.0;
    long long l = 0;
    cplx z_x;
    cplx loglam;
    cplx quarter_center;
    double quarter_half = 0.0;
    double ln_t_inner = 0.0;  // inner sandwich disk radius (log)
    double ln_T_outer = 0.0;  // outer sandwich disk radius (log)
    double ln_b_norm = 0.0;   // certified lower Lipschitz bound after normalization
    double ln_c_norm = 0.0;   // certified upper Lipschitz bound after normalization

    // u = z_x - Loglam; M = u + i kappa.
    cplx u() const { return z_x - loglam; }
    bool kappa_representable() const { return ln_kappa < 700.0; }

    // ln |M + d| for an O(1) offset d.
    double ln_abs_M_plus(cplx d) const {
        const cplx v = u() + d;
        if (kappa_representable()) {
            const double kap = std::exp(ln_kappa);
            return std::log(std::hypot(v.real(), v.imag() + kap));
        }
        // corrections are below double resolution
        return ln_kappa;
    }

    // First inverse application: a = Log(w - Loglam), validated in the
    // half-plane via the caller.
    cplx first_level(cplx w) const { return std::log(w - loglam); }

    // Collapsed position of psi(w). Exact while kappa is representable; at
    // larger heights the sub-resolution offset is absorbed.
    cplx apply(cplx w) const {
        const cplx a = first_level(w);
        const double re = ln_abs_M_plus(a - z_x);
        double im;
        if (kappa_representable()) {
            const double kap = std::exp(ln_kappa);
            const cplx v = u() + (a - z_x);
            im = std::atan2(v.imag() + kap, v.real());
        } else {
            im = 0.5 * M_PI;
        }
        return cplx(re, im + 2.0 * M_PI * static_cast<double>(l));
    }

    // ln |psi'(w)|.
    double deriv_ln(cplx w) const {
        const cplx a = first_level(w);
        return -ln_abs_M_plus(a - z_x) - std::log(std::abs(w - loglam));
    }

    // |F^2(psi(w)) - w| through the fused path.
    double roundtrip_error(cplx w) const {
        const cplx a = first_level(w);
        cplx recovered_offset;  // = a - z_x after the forward map, up to rounding
        if (kappa_representable()) {
            const double kap = std::exp(ln_kappa);
            const cplx M = u() + cplx(0.0, kap);
            const cplx q = (a - z_x) / M;
            recovered_offset = M * cexpm1(clog1p(q));
        } else {
            recovered_offset = a - z_x;  // corrections underflow identically
        }
        const cplx back = std::exp(z_x + recovered_offset) + loglam;
        return std::abs(back - w);
    }
};

struct BranchFamily {
    double x = 0.0;
    TractGrowth growth;
    cplx Fzx;                   // F(z_x); representable branch geometry only
    SquareSpec quarter, half;
    double r_x = 0.0, R_x = 0.0;
    double ln_r_x = 0.0;
    double ln_kappa_lo = 0.0;   // translate range endpoints (k_1+1 .. k_2-1)
    double ln_kappa_hi = 0.0;
    XReal columns;              // number of admissible translate columns (k values)
    XReal per_column;           // vertical copies per column (N_x)
    XReal count;                // total branch squares
    XReal sum_diam_lower;       // certified lower bound for sum of diameters
    XReal sum_diam_estimate;    // integral estimate
    bool disjoint_certified = false;
    double disjoint_margin = 0.0;    // 2 pi - 4 R_x (1 + slack), must be > 0
    bool contained_certified = false;
    double containment_margin = 0.0; // 1 - max outer radius
    std::vector<InverseBranchF2> samples;
    ifs::StageSummary stage;    // scheme summary after normalization to the unit square
};

namespace detail {

// ln kappa solving ln|u + i kappa| = target (target large enough that the
// corrections, where representable, are tiny).
inline double ln_kappa_at(cplx u, double target) {
    double lk = target;
    const double c1 = -sq(u.real()) * std::exp(std::max(-700.0, -2.0 * target));
    lk += 0.5 * std::log1p(std::max(c1, -0.5));
    if (lk < 700.0) {
        const double kap = std::exp(lk);
        lk += std::log1p(std::max(-u.imag() / kap, -0.5));
    }
    return lk;
}

inline double ln_d_at(cplx u, double ln_kappa) {
    if (ln_kappa < 350.0) {
        const double kap = std::exp(ln_kappa);
        return -std::log(std::hypot(u.real(), u.imag() + kap));
    }
    return -ln_kappa;
}

}  // namespace detail

// Build the inverse-branch family of F^2 over S(F(z_x), h(x)/4). Valid for
// exponential-family models; throws "below threshold" when the runtime
// admissibility checks fail at this x.
inline BranchFamily branch_squares(const ClassBModel& m, double x, int sample_columns = 7) {
    if (!m.exact_transform)
        throw precondition_error("branch_squares: needs the exponential family");
    BranchFamily fam;
    fam.x = x;
    fam.growth = tract_growth(m, x);
    const double h = fam.growth.h;
    const double hp = fam.growth.hprime;
    if (!std::isfinite(h))
        throw precondition_error("branch_squares: h(x) beyond double range");
    const cplx loglam = log_lambda(m);
    const double logR = std::log(m.R);
    fam.Fzx = cplx(h, loglam.imag());
    fam.quarter = SquareSpec(fam.Fzx, 0.25 * h);
    fam.half = SquareSpec(fam.Fzx, 0.5 * h);
    fam.r_x = h / (16.0 * hp);
    fam.ln_r_x = std::log(fam.r_x);
    fam.R_x = 16.0 * fam.r_x;

    // Threshold checks, evaluated on the actual quantities:
    //  - the half square must stay inside the half-plane after one inverse
    //    application (min distance from Log lambda must exceed R), and the
    //    distortion factor behind the outer sandwich radius must apply;
    //  - the translate range must be non-empty with at least one vertical
    //    copy per column;
    //  - in-range derivative magnitudes must clear the spacing bounds.
    const double dist_half = 0.5 * h - loglam.real();
    if (!(dist_half > m.R + 1.0))
        throw precondition_error("branch_squares: below threshold (half square near singular disk)");
    if (!(h > 6.83 * std::max(0.0, logR) + 4.0))
        throw precondition_error("branch_squares: below threshold (outer sandwich factor)");

    const cplx u = cplx(x, 0.0) - loglam;
    fam.ln_kappa_lo = detail::ln_kappa_at(u, 0.75 * h + 1.0);
    fam.ln_kappa_hi = detail::ln_kappa_at(u, 1.25 * h - 1.0);
    const double lnN_arg = 0.5 * h - 3.0;
    if (!(lnN_arg > 2.0 * M_PI))
        throw precondition_error("branch_squares: below threshold (no vertical copies)");
    fam.per_column = XReal::from_double(std::floor(lnN_arg / (2.0 * M_PI)));
    fam.columns = (XReal::from_ln(fam.ln_kappa_hi) - XReal::from_ln(fam.ln_kappa_lo)) /
                      XReal::from_double(2.0 * M_PI) -
                  XReal::one();
    if (!(fam.columns > XReal::one()))
        throw precondition_error("branch_squares: below threshold (translate range empty)");
    fam.count = fam.columns * fam.per_column;

    const double ln_d_lo = detail::ln_d_at(u, fam.ln_kappa_lo);  // largest derivative
    const double ln_d_hi = detail::ln_d_at(u, fam.ln_kappa_hi);  // smallest
    if (!(std::exp(std::min(ln_d_lo, 0.0)) <= 1.0 / (4.0 * M_PI)))
        throw precondition_error("branch_squares: below threshold (derivative bound)");
    const double ln_T_lo = std::log(2.0 * fam.R_x) + ln_d_lo;  // largest outer radius
    if (!(ln_T_lo < 0.0))
        throw precondition_error("branch_squares: below threshold (outer radius above 1)");
    fam.containment_margin = 1.0 - std::exp(ln_T_lo);
    fam.contained_certified = fam.containment_margin > 0.0;

    // Pairwise disjointness of the outer sandwich disks: adjacent columns are
    // separated by at least 2 pi d (1 - 2 pi d); radii sum to at most
    // 4 R_x d (1 + negligible). Vertical copies are 2 pi apart with radii
    // below 1.
    const double spacing_slack = 2.0 * M_PI * std::exp(std::min(ln_d_lo, 0.0));
    fam.disjoint_margin = 2.0 * M_PI * (1.0 - spacing_slack) - 4.0 * fam.R_x;
    fam.disjoint_certified = fam.disjoint_margin > 0.0;

    // Certified sum of diameters: sum over columns of 2 t = (r_x / 2) sum d,
    // with sum d >= (h/2 - 3) / (4 pi) from the telescoped column positions.
    fam.sum_diam_lower = fam.per_column *
                         XReal::from_ln(fam.ln_r_x - std::log(2.0) +
                                        std::log(lnN_arg) - std::log(4.0 * M_PI));
    // Integral estimate of sum d: (ln kappa_hi - ln kappa_lo) / (2 pi).
    fam.sum_diam_estimate =
        fam.per_column * XReal::from_ln(fam.ln_r_x - std::log(2.0)) *
        XReal::from_double((fam.ln_kappa_hi - fam.ln_kappa_lo) / (2.0 * M_PI));

    // Certified Lipschitz data for the normalized scheme. The derivative of
    // a branch factors as 1/|M + a| * 1/|w - loglam| with |a - z_x| <= R_x;
    // the phase of (w - loglam) sweeps a bounded cone over the square.
    const double q_re = h - loglam.real();  // Re(Fzx - loglam)
    const double qmin = q_re - 0.25 * h;
    const double qmax = std::hypot(q_re + 0.25 * h, 0.25 * h);
    const double theta_half = std::atan2(0.25 * h, qmin);
    const double ln_cos = std::log(std::cos(theta_half));
    const double ln_M_slack_lo = std::log1p(std::min(fam.R_x * std::exp(std::max(-700.0,
                                      -fam.ln_kappa_lo)), 0.5));
    auto ln_b_at = [&](double ln_kappa) {
        return -(ln_kappa + ln_M_slack_lo) - std::log(qmax) + ln_cos;
    };
    auto ln_c_at = [&](double ln_kappa) {
        const double shrink = std::log1p(-std::min(fam.R_x * std::exp(std::max(-700.0, -ln_kappa)), 0.5));
        return -(ln_kappa + shrink) - std::log(qmin);
    };

    ifs::StageSummary st;
    st.count = fam.count;
    st.ln_b_min = ln_b_at(fam.ln_kappa_hi);
    st.ln_b_max = ln_b_at(fam.ln_kappa_lo);
    // Separation after normalization by 2/h: the adjacent-column gap at the
    // smallest derivative dominates.
    st.ln_separation = std::log(fam.disjoint_margin > 0 ? fam.disjoint_margin : 1e-300) +
                       ln_d_hi + std::log(2.0) - fam.growth.ln_h;
    const double lk_lo = fam.ln_kappa_lo, lk_hi = fam.ln_kappa_hi;
    const double ln_amp = -std::log(qmax) + ln_cos - ln_M_slack_lo;
    const XReal per_col = fam.per_column;
    st.sum_b_pow = [lk_lo, lk_hi, ln_amp, per_col](double s) {
        // sum over columns of (amp / kappa)^s, integral lower bound in kappa
        XReal integral;
        if (std::fabs(s - 1.0) < 1e-12) {
            integral = XReal::from_double((lk_hi - lk_lo) / (2.0 * M_PI));
        } else if (s > 1.0) {
            integral = (XReal::from_ln((1.0 - s) * lk_lo) - XReal::from_ln((1.0 - s) * lk_hi)) /
                       XReal::from_double(2.0 * M_PI * (s - 1.0));
        } else {
            integral = (XReal::from_ln((1.0 - s) * lk_hi) - XReal::from_ln((1.0 - s) * lk_lo)) /
                       XReal::from_double(2.0 * M_PI * (1.0 - s));
        }
        return per_col * XReal::from_ln(s * ln_amp) * integral;
    };
    if (st.sum_b_pow(1.0) > XReal::one()) {
        st.s = ifs::summary_similarity_exponent(st);
    } else {
        st.s = 0.0;  // below 1: stage cannot satisfy the sum condition
    }
    fam.stage = st;

    // Sample branches across the admissible range (log-uniform in kappa).
    const long long Nx_ll = static_cast<long long>(std::floor(lnN_arg / (2.0 * M_PI)));
    for (int i = 0; i < sample_columns; ++i) {
        double lk = lk_lo + (lk_hi - lk_lo) * (i + 0.5) / sample_columns;
        if (lk < 50.0) {  // snap to an exact integer k when cheap
            const double kap = std::exp(lk);
            const double k_int = std::max(1.0, std::round(kap / (2.0 * M_PI)));
            lk = std::log(2.0 * M_PI * k_int);
        }
        InverseBranchF2 br;
        br.ln_kappa = lk;
        br.z_x = fam.growth.z_x;
        br.loglam = loglam;
        br.quarter_center = fam.Fzx;
        br.quarter_half = fam.quarter.half_side;
        const double ln_d = detail::ln_d_at(u, lk);
        br.ln_t_inner = std::log(0.25 * fam.r_x) + ln_d;
        br.ln_T_outer = std::log(2.0 * fam.R_x) + ln_d;
        br.ln_b_norm = ln_b_at(lk);
        br.ln_c_norm = ln_c_at(lk);
        // vertical translate: place the column base inside the shrunk square
        double im_v = 0.5 * M_PI;
        if (lk < 700.0) {
            const double kap = std::exp(lk);
            im_v = std::atan2(u.imag() + kap, u.real());
        }
        const double target_lo = fam.Fzx.imag() - 0.25 * h + 1.0;
        br.l = static_cast<long long>(std::ceil((target_lo - im_v) / (2.0 * M_PI)));
        if (i % 2 == 1 && Nx_ll > 1) br.l += std::min<long long>(Nx_ll - 1, 4);
        fam.samples.push_back(br);
    }
    return fam;
}

// ---------------------------------------------------------------------------
// Growth lemma: cells where g' exceeds scale * g^(1+delta).
// ---------------------------------------------------------------------------

struct ExceptionalSet {
    std::vector<std::pair<double, double>> cells;  // merged grid cells
    double measure = 0.0;
    bool bound_applicable = false;  // g >= 1 on E and scale == 1
    double bound = 0.0;             // 1/delta when applicable
};

inline ExceptionalSet growth_exceptional_set(const std::function<double(double)>& g,
                                             const std::function<double(double)>& gprime,
                                             double delta, double a, double b, int grid_n,
                                             double scale = 1.0) {
    if (!(delta > 0.0)) throw precondition_error("growth_exceptional_set: delta must be positive");
    if (!(b > a) || grid_n < 2) throw precondition_error("growth_exceptional_set: bad interval");
    ExceptionalSet out;
    out.bound = 1.0 / delta;
    const double step = (b - a) / grid_n;
    bool g_ge_1_on_E = true;
    bool open = false;
    double cell_start = 0.0;
    for (int i = 0; i < grid_n; ++i) {
        const double xm = a + step * (i + 0.5);
        const double gv = g(xm);
        const bool exceptional = gprime(xm) > scale * std::pow(gv, 1.0 + delta);
        if (exceptional && gv < 1.0) g_ge_1_on_E = false;
        if (exceptional && !open) {
            open = true;
            cell_start = a + step * i;
        } else if (!exceptional && open) {
            open = false;
            out.cells.emplace_back(cell_start, a + step * i);
        }
    }
    if (open) out.cells.emplace_back(cell_start, b);
    for (const auto& [lo, hi] : out.cells) out.measure += hi - lo;
    out.bound_applicable = g_ge_1_on_E && scale == 1.0;
    return out;
}

inline double tract_growth_value(const ClassBModel& m, double x) {
    return tract_growth(m, x).h;
}

// ---------------------------------------------------------------------------
// Staged scheme builder.
// ---------------------------------------------------------------------------

// Affine normalizer L(z) = (2/h)(z - Fz) + (1/2 + i/2) sending the stage
// square onto the unit square.
struct StageNormalizer {
    cplx Fz;
    double h = 0.0;

    cplx apply(cplx z) const { return (z - Fz) * (2.0 / h) + cplx(0.5, 0.5); }
    cplx inverse(cplx w) const { return (w - cplx(0.5, 0.5)) * (0.5 * h) + Fz; }
};

struct Thm1Build {
    std::vector<double> abscissas;           // x_1, x_2, ...
    std::vector<double> ln_h;                // ln h(x_k)
    BranchFamily family1;                    // branch-square family at x_1
    ifs::StageSummary P1, Q1, R2;            // pool stages: P_1 and P_1^p o Q_1
    int interleave_p = 0;
    std::vector<long long> schedule;         // indices from the prefix inequality
    std::vector<XReal> schedule_rate_floor;  // extra floor so the orbit obeys the rate
    StageNormalizer L1;
    std::vector<std::function<cplx(cplx)>> q_samples;  // normalized Q maps on D
};

// Exceptional margin used for abscissa selection: h' <= 1e-5 h^(3/2), the
// regime where the branch-square diameter sum clears h^(3/2).
inline bool growth_margin_ok(const ClassBModel& m, double x) {
    const TractGrowth g = tract_growth(m, x);
    // ln h' <= ln 1e-5 + 1.5 ln h
    return g.ln_hprime <= std::log(1e-5) + 1.5 * g.ln_h;
}

// x_{k+1} in [h(x_k), h(x_k)+1] avoiding the exceptional margin set.
inline double select_next_abscissa(const ClassBModel& m, double x_prev, int grid = 64) {
    const TractGrowth g = tract_growth(m, x_prev);
    if (!std::isfinite(g.h))
        throw precondition_error("select_next_abscissa: h(x) beyond double range");
    for (int i = 0; i <= grid; ++i) {
        const double x = g.h + static_cast<double>(i) / grid;
        if (growth_margin_ok(m, x)) return x;
    }
    throw numeric_error("select_next_abscissa: interval fully exceptional on the grid");
}

inline Thm1Build thm1_scheme_builder(const ClassBModel& m,
                                     const std::function<double(double)>& eps_ln,
                                     const std::function<double(double)>& ln_p_of_n,
                                     double x1) {
    if (!m.exact_transform)
        throw precondition_error("thm1_scheme_builder: needs the exponential family");
    if (!growth_margin_ok(m, x1))
        throw precondition_error("thm1_scheme_builder: x1 below threshold (growth margin)");
    Thm1Build out;
    out.abscissas.push_back(x1);
    out.family1 = branch_squares(m, x1);
    if (!out.family1.disjoint_certified || !out.family1.contained_certified)
        throw precondition_error("thm1_scheme_builder: x1 below threshold (family checks)");
    out.P1 = out.family1.stage;
    if (!(out.P1.sum_b_pow(1.0) > XReal::one()))
        throw precondition_error("thm1_scheme_builder: x1 below threshold (sum of lower bounds <= 1)");
    out.ln_h.push_back(out.family1.growth.ln_h);
    out.L1 = StageNormalizer{out.family1.Fzx, out.family1.growth.h};

    const double x2 = select_next_abscissa(m, x1);
    out.abscissas.push_back(x2);
    const TractGrowth g2 = tract_growth(m, x2);
    out.ln_h.push_back(g2.ln_h);

    // Q stage: inverse branches of F mapping the next square into this one,
    // summarized in log form. The image of the next square under one
    // inverse application lands at Re ~ x2 with O(1) extent.
    const double h1 = out.family1.growth.h;
    if (!(h1 >= 9.0)) throw precondition_error("thm1_scheme_builder: stage square too small");
    const double ln_ratio_hi = std::log(std::hypot(1.25, 0.25));  // qmax_2 / h2
    const double ln_ratio_lo = std::log(0.75);
    const double theta2 = std::atan2(0.25, 0.75);
    ifs::StageSummary Q;
    const double ln_m = std::log(0.5 * h1 - 3.0) - std::log(2.0 * M_PI);
    Q.count = XReal::from_ln(ln_m);
    Q.ln_b_min = -ln_ratio_hi + std::log(std::cos(theta2)) - std::log(h1);
    Q.ln_b_max = -ln_ratio_lo - std::log(h1);
    Q.ln_separation = std::log(2.0 * (2.0 * M_PI - 2.0 * theta2)) - std::log(h1);
    {
        const double lnb = Q.ln_b_min;
        const XReal cnt = Q.count;
        Q.sum_b_pow = [lnb, cnt](double s) { return cnt * XReal::from_ln(s * lnb); };
        Q.s = 0.0;  // not used: Q enters only through the interleave
    }
    out.Q1 = Q;

    // Sampled Q maps in normalized coordinates: the composition
    // L1 o phi_j o L2^{-1} collapses to ln(h2/2) + Log(zeta - c0 + 2) + 2 pi i j
    // up to corrections below resolution.
    const cplx c0(0.5, 0.5);
    const double ln_h2 = g2.ln_h;
    const cplx Fz1 = out.family1.Fzx;
    const double j_base = (Fz1.imag() - 0.25 * h1 + 1.5) / (2.0 * M_PI);
    for (int s = 0; s < 3; ++s) {
        const double j = std::ceil(j_base) + s;
        auto L1n = out.L1;
        auto qmap = [ln_h2, c0, L1n, j](cplx zeta) {
            const cplx img(ln_h2 - std::log(2.0) + std::log(std::abs(zeta - c0 + 2.0)),
                           std::arg(zeta - c0 + 2.0) + 2.0 * M_PI * j);
            return L1n.apply(img);
        };
        out.q_samples.push_back(qmap);
    }

    auto [p, R2] = ifs::interleave_summaries(out.P1, out.Q1);
    out.interleave_p = p;
    out.R2 = R2;

    std::vector<ifs::StageSummary> pool{out.P1, out.R2};
    out.schedule = ifs::schedule_indices(pool, eps_ln);

    // Rate floor: once the staged orbit moves to the second square its
    // Re F reaches about (5/4) h(x_2), so the move index n must satisfy
    // ln p_n >= (5/4) h(x_2). The rate is supplied as ln p as a function of
    // ln n; the floor is bisected when reachable in double range, otherwise
    // reported in extended form under at-least-linear rate growth (a larger
    // floor stays valid by the monotonicity of the schedule condition).
    const XReal need = XReal::from_double(1.25) * XReal::exp_of(XReal::from_double(g2.ln_h));
    XReal floor_n;
    if (need.log_height() == 0 && ln_p_of_n(700.0) >= need.ln_double()) {
        double lo = 0.0, hi = 700.0;
        while (hi - lo > 1e-9) {
            const double mid = 0.5 * (lo + hi);
            (ln_p_of_n(mid) >= need.ln_double() ? hi : lo) = mid;
        }
        floor_n = XReal::exp_of(XReal::from_double(hi));
    } else {
        floor_n = XReal::exp_of(need);
    }
    out.schedule_rate_floor.assign(out.schedule.size(), floor_n);
    return out;
}

}  // namespace escm::logtransform
