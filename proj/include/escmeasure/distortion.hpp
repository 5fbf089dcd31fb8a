#pragma once

// Koebe distortion and one-quarter bounds for univalent maps, and the
// derived contraction certificates for inverse branches on padded squares.

#include <functional>

#include "core.hpp"

namespace escm::distortion {

// Two-sided bound on |g(z)-g(a)| / |z-a| for z in the closed disk of
// radius lambda*r, given g univalent on D(a, r).
inline std::pair<double, double> koebe_ratio_bounds(double gprime_a, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw precondition_error("koebe_ratio_bounds: lambda in (0,1)");
    if (!(gprime_a > 0.0)) throw precondition_error("koebe_ratio_bounds: |g'(a)| must be positive");
    return {gprime_a / sq(1.0 + lambda), gprime_a / sq(1.0 - lambda)};
}

// Two-sided bound on |g'(z)| over the same disk.
inline std::pair<double, double> koebe_derivative_bounds(double gprime_a, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw precondition_error("koebe_derivative_bounds: lambda in (0,1)");
    const double lo = gprime_a * (1.0 - lambda) / ((1.0 + lambda) * sq(1.0 + lambda));
    const double hi = gprime_a * (1.0 + lambda) / ((1.0 - lambda) * sq(1.0 - lambda));
    return {lo, hi};
}

// Disk guaranteed inside g(D(a, r)) by the one-quarter theorem.
inline Disk koebe_quarter(cplx g_a, double gprime_a, double r) {
    if (!(gprime_a > 0.0) || !(r > 0.0)) throw precondition_error("koebe_quarter: bad arguments");
    return Disk{g_a, 0.25 * gprime_a * r};
}

// Sampled confirmation that the quarter disk stays inside the image: the
// image boundary g(|z-a| = r) must keep at least the quarter radius away
// from g(a).
inline bool verify_quarter(const std::function<cplx(cplx)>& g, cplx a, double r,
                           double gprime_a, int n_samples = 720) {
    const double quarter = 0.25 * gprime_a * r;
    for (int i = 0; i < n_samples; ++i) {
        const double th = 2.0 * M_PI * i / n_samples;
        const cplx z = a + r * cplx(std::cos(th), std::sin(th));
        if (std::abs(g(z) - g(a)) < quarter * (1.0 - 1e-9)) return false;
    }
    return true;
}

struct ContractionCert {
    double b_lower = 0.0;  // certified lower Lipschitz bound
    double c_upper = 0.0;  // certified upper Lipschitz bound
    double K = 0.0;        // branch-independent sandwich constant
};

// Sandwich constant for padding lambda, from the two displayed distortion
// inequalities composed: ratio and derivative factors.
inline double koebe_sandwich_constant(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw precondition_error("koebe_sandwich_constant: lambda in (0,1)");
    return std::pow((1.0 + lambda) / (1.0 - lambda), 5.0);
}

// Certify Lipschitz bounds for a conformal branch on a square, given
// univalence on the (1+lambda)-padded square. |branch'| is sampled on a
// grid over the inner square; Koebe derivative factors for the gap between
// grid points turn the sampled min/max into certified bounds.
inline ContractionCert certify_branch_contraction(
    const std::function<cplx(cplx)>& branch,
    const std::function<cplx(cplx)>& branch_deriv,
    const SquareSpec& inner, double lambda = 0.5, int grid_n = 64) {
    (void)branch;
    if (!(lambda > 0.0 && lambda < 1.0)) throw precondition_error("certify: lambda in (0,1)");
    const double r = inner.half_side;
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = 0.0;
    for (const cplx& w : square_grid(inner, grid_n)) {
        const double a = std::abs(branch_deriv(w));
        if (!(a > 1e-300)) throw precondition_error("certify: derivative vanishes on a sample");
        dmin = std::min(dmin, a);
        dmax = std::max(dmax, a);
    }
    // Any point of the inner square is within half a grid diagonal of a
    // sample; the branch is univalent on a disk of radius lambda*r around
    // that sample.
    const double reach = (2.0 * r / (grid_n - 1)) * std::sqrt(2.0) * 0.5;
    const double lam0 = std::min(reach / (lambda * r), 0.5);
    const auto [dlo, dhi] = koebe_derivative_bounds(1.0, lam0);
    ContractionCert cert;
    cert.b_lower = dmin * dlo;
    cert.c_upper = dmax * dhi;
    cert.K = koebe_sandwich_constant(lambda);
    return cert;
}

}  // namespace escm::distortion
