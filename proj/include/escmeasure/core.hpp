#pragma once

// Shared basics: error types, plane geometry, quadrature.

#include <complex>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace escm {

using cplx = std::complex<double>;

// Violated caller contract (bad argument, out-of-domain query). CLI exit 2.
struct precondition_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Computation started but could not finish to tolerance. CLI exit 3.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Open square S(a, r) = { |Re(z-a)| < r, |Im(z-a)| < r }.
struct SquareSpec {
    cplx center{0.0, 0.0};
    double half_side = 0.0;

    SquareSpec() = default;
    SquareSpec(cplx a, double r) : center(a), half_side(r) {
        if (!(r > 0.0)) throw precondition_error("SquareSpec: half_side must be positive");
    }

    bool contains(cplx z, double slack = 0.0) const {
        return std::fabs(z.real() - center.real()) < half_side + slack &&
               std::fabs(z.imag() - center.imag()) < half_side + slack;
    }
    double diam() const { return 2.0 * half_side * std::sqrt(2.0); }
    SquareSpec scaled(double factor) const { return SquareSpec(center, half_side * factor); }
};

// Axis-aligned unit square [0,1]^2, the base domain for function schemes.
inline SquareSpec unit_square() { return SquareSpec(cplx(0.5, 0.5), 0.5); }

struct Disk {
    cplx center{0.0, 0.0};
    double radius = 0.0;
};

inline bool disks_disjoint(const Disk& a, const Disk& b) {
    return std::abs(a.center - b.center) > a.radius + b.radius;
}

// Uniform grid over a square, n x n points including the boundary.
inline std::vector<cplx> square_grid(const SquareSpec& sq, int n) {
    if (n < 2) throw precondition_error("square_grid: need n >= 2");
    std::vector<cplx> pts;
    pts.reserve(static_cast<size_t>(n) * n);
    const double lo_x = sq.center.real() - sq.half_side;
    const double lo_y = sq.center.imag() - sq.half_side;
    const double step = 2.0 * sq.half_side / (n - 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            pts.emplace_back(lo_x + step * i, lo_y + step * j);
    return pts;
}

// Adaptive Simpson quadrature for real integrands.
namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (depth <= 0) throw numeric_error("adaptive_simpson: recursion limit");
    if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, int max_depth = 48) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = detail::simpson(f, a, b, fa, fm, fb);
    const double tol = rel_tol * std::max(1.0, std::fabs(whole));
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
struct GaussLegendre5 {
    static constexpr double x[5] = {-0.906179845938663992797626878299,
                                    -0.538469310105683091036314420700, 0.0,
                                    0.538469310105683091036314420700,
                                    0.906179845938663992797626878299};
    static constexpr double w[5] = {0.236926885056189087514264040720,
                                    0.478628670499366468041291514836,
                                    0.568888888888888888888888888889,
                                    0.478628670499366468041291514836,
                                    0.236926885056189087514264040720};
};

// Integral of f along the straight segment [a, b] in the plane.
inline cplx integrate_segment(const std::function<cplx(cplx)>& f, cplx a, cplx b) {
    const cplx mid = 0.5 * (a + b);
    const cplx half = 0.5 * (b - a);
    cplx acc{0.0, 0.0};
    for (int i = 0; i < 5; ++i)
        acc += GaussLegendre5::w[i] * f(mid + GaussLegendre5::x[i] * half);
    return acc * half;
}

inline double sq(double x) { return x * x; }

// log(1+q) for complex q, stable for small |q|.
inline cplx clog1p(cplx q) {
    const double a = std::abs(q);
    if (a < 1e-4) return q * (1.0 - q * (0.5 - q * (1.0 / 3.0 - q * 0.25)));
    return std::log(cplx(1.0, 0.0) + q);
}

// exp(d) - 1 for complex d, stable for small |d|.
inline cplx cexpm1(cplx d) {
    const double a = std::abs(d);
    if (a < 1e-4) return d * (1.0 + d * (0.5 + d * (1.0 / 6.0 + d * (1.0 / 24.0))));
    return std::exp(d) - cplx(1.0, 0.0);
}

}  // namespace escm
