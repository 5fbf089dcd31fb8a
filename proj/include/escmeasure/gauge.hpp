#pragma once

// Gauge (dimension) functions h with their regularizations and doubling
// behavior. A gauge is increasing and continuous on [0, eta) with h(0) = 0.
// Three forms are carried explicitly:
//   power:    h(t) = t^s
//   product:  h(t) = t * g(t)
//   exponent: h(t) = t^(1 + eps(t))
// Monotonicity and domination claims are checked on sampling grids; the
// sup/max over a continuum is realized as a grid maximum, with grid density
// a caller choice. The domain bound defaults to eta = 1.

#include <algorithm>
#include <functional>
#include <utility>
#include <vector>

#include "core.hpp"
#include "extended_real.hpp"

namespace escm::gauge {

enum class Form { Power, Product, Exponent };

struct GaugeFn {
    Form form = Form::Power;
    double eta = 1.0;
    std::vector<double> grid;  // sample points in (0, eta), increasing

    // Form-specific data. Only the matching entries are populated.
    double power_s = 1.0;
    std::function<double(double)> product_g;
    std::function<double(double)> exponent_eps;
    // Optional log-argument access for extreme ranges: eps as a function of
    // ln t. Falls back to exponent_eps(exp(ln_t)) when absent.
    std::function<double(double)> exponent_eps_ln;

    double operator()(double t) const {
        if (t < 0.0 || t >= eta) throw precondition_error("GaugeFn: t outside [0, eta)");
        if (t == 0.0) return 0.0;
        switch (form) {
            case Form::Power:
                return std::pow(t, power_s);
            case Form::Product:
                return t * product_g(t);
            case Form::Exponent:
                return std::pow(t, 1.0 + exponent_eps(t));
        }
        return 0.0;
    }

    double eps_at(double t) const {
        if (form != Form::Exponent) throw precondition_error("GaugeFn: not exponent form");
        return exponent_eps(t);
    }

    double eps_at_ln(double ln_t) const {
        if (form != Form::Exponent) throw precondition_error("GaugeFn: not exponent form");
        if (exponent_eps_ln) return exponent_eps_ln(ln_t);
        if (ln_t > -700.0) return exponent_eps(std::exp(ln_t));
        // No log-form supplied: clamp to the smallest grid sample.
        if (grid.empty()) throw precondition_error("GaugeFn: eps below range and no grid");
        return exponent_eps(grid.front());
    }

    bool nondecreasing_on_grid() const {
        double prev = 0.0;
        for (double t : grid) {
            const double v = (*this)(t);
            if (v < prev - 1e-15) return false;
            prev = v;
        }
        return true;
    }
};

inline std::vector<double> uniform_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw precondition_error("uniform_grid: bad range");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    return g;
}

inline GaugeFn power_gauge(double s, double eta = 1.0) {
    if (!(s > 0.0)) throw precondition_error("power_gauge: s must be positive");
    GaugeFn h;
    h.form = Form::Power;
    h.eta = eta;
    h.power_s = s;
    h.grid = uniform_grid(eta * 1e-6, eta * 0.5, 64);
    return h;
}

inline GaugeFn product_gauge(std::function<double(double)> g, std::vector<double> grid,
                             double eta = 1.0) {
    GaugeFn h;
    h.form = Form::Product;
    h.eta = eta;
    h.product_g = std::move(g);
    h.grid = std::move(grid);
    return h;
}

inline GaugeFn exponent_gauge(std::function<double(double)> eps, std::vector<double> grid,
                              double eta = 1.0,
                              std::function<double(double)> eps_ln = nullptr) {
    GaugeFn h;
    h.form = Form::Exponent;
    h.eta = eta;
    h.exponent_eps = std::move(eps);
    h.exponent_eps_ln = std::move(eps_ln);
    h.grid = std::move(grid);
    return h;
}

namespace detail {
inline void check_grid(const std::vector<double>& grid, double eta) {
    if (grid.empty()) throw precondition_error("gauge: empty grid");
    double prev = 0.0;
    for (double t : grid) {
        if (!(t > prev) || !(t < eta)) throw precondition_error("gauge: grid not increasing in (0, eta)");
        prev = t;
    }
}
}  // namespace detail

// Replace eps by its running maximum over the grid, making it non-decreasing.
// The result dominates the input pointwise at grid points, so measure
// comparisons transfer to the regularized gauge.
inline GaugeFn regularize_exponent(const GaugeFn& h, const std::vector<double>& grid) {
    if (h.form != Form::Exponent) throw precondition_error("regularize_exponent: wrong form");
    detail::check_grid(grid, h.eta);
    auto xs = std::make_shared<std::vector<double>>(grid);
    auto vs = std::make_shared<std::vector<double>>();
    vs->reserve(grid.size());
    double run = -1.0;
    for (double t : grid) {
        const double e = h.exponent_eps(t);
        if (e < 0.0) throw precondition_error("regularize_exponent: negative exponent sample");
        run = std::max(run, e);
        vs->push_back(run);
    }
    auto lookup = [xs, vs](double t) {
        auto it = std::upper_bound(xs->begin(), xs->end(), t);
        size_t i = (it == xs->begin()) ? 0 : static_cast<size_t>(it - xs->begin() - 1);
        return (*vs)[i];
    };
    auto lookup_ln = [xs, vs](double ln_t) {
        // Below the grid the running max clamps to its first sample.
        if (ln_t <= std::log(xs->front())) return vs->front();
        auto it = std::upper_bound(xs->begin(), xs->end(), std::exp(std::min(ln_t, 700.0)));
        size_t i = (it == xs->begin()) ? 0 : static_cast<size_t>(it - xs->begin() - 1);
        return (*vs)[i];
    };
    return exponent_gauge(lookup, grid, h.eta, lookup_ln);
}

// Replace g by g*(t) = t + sup_{s<=t} g(s): increasing and >= t.
inline GaugeFn regularize_product(const GaugeFn& h, const std::vector<double>& grid) {
    if (h.form != Form::Product) throw precondition_error("regularize_product: wrong form");
    detail::check_grid(grid, h.eta);
    auto xs = std::make_shared<std::vector<double>>(grid);
    auto vs = std::make_shared<std::vector<double>>();
    vs->reserve(grid.size());
    double run = 0.0;
    for (double t : grid) {
        const double g = h.product_g(t);
        if (g < 0.0) throw precondition_error("regularize_product: negative g sample");
        run = std::max(run, g);
        vs->push_back(run);
    }
    auto lookup = [xs, vs](double t) {
        auto it = std::upper_bound(xs->begin(), xs->end(), t);
        size_t i = (it == xs->begin()) ? 0 : static_cast<size_t>(it - xs->begin() - 1);
        return t + (*vs)[i];
    };
    return product_gauge(lookup, grid, h.eta);
}

// Smallest sampled K with h(2t) <= K h(t) over grid points t <= t_max.
inline double doubling_constant(const GaugeFn& h, double t_max) {
    if (!(2.0 * t_max < h.eta)) throw precondition_error("doubling_constant: need 2 t_max < eta");
    double K = 0.0;
    bool any = false;
    for (double t : h.grid) {
        if (t > t_max) break;
        const double ht = h(t);
        if (!(ht > 0.0)) throw precondition_error("doubling_constant: h vanishes at positive t");
        K = std::max(K, h(2.0 * t) / ht);
        any = true;
    }
    if (!any) throw precondition_error("doubling_constant: no grid points below t_max");
    return K;
}

// Checkable predicate for g(t) = t^eps(t) -> 0: the sampled g must be
// non-decreasing in t and already small at the low end of the grid.
inline bool vanishing_g(const GaugeFn& h, const std::vector<double>& grid,
                        double threshold = 0.5) {
    if (h.form != Form::Exponent) throw precondition_error("vanishing_g: wrong form");
    detail::check_grid(grid, h.eta);
    double prev = -1.0;
    for (double t : grid) {
        const double g = std::pow(t, h.exponent_eps(t));
        if (g < prev - 1e-12) return false;
        prev = g;
    }
    return std::pow(grid.front(), h.exponent_eps(grid.front())) <= threshold;
}

// Increasing envelope g with g(t) >= t, evaluable across the extended range.
// Used by the strip-profile construction and the cover ledger, where the
// arguments drop below any double immediately.
struct Envelope {
    std::function<XReal(const XReal&)> fwd;
    std::function<XReal(const XReal&)> inv;

    XReal operator()(const XReal& t) const { return fwd(t); }
    XReal inverse(const XReal& v) const { return inv(v); }
};

inline Envelope identity_envelope() {
    return Envelope{[](const XReal& t) { return t; }, [](const XReal& v) { return v; }};
}

// g(t) = t^a with a in (0, 1]; g >= t on (0, 1], inverse is v^(1/a).
inline Envelope power_envelope(double a) {
    if (!(a > 0.0) || a > 1.0) throw precondition_error("power_envelope: need a in (0,1]");
    return Envelope{[a](const XReal& t) { return t.pow(a); },
                    [a](const XReal& v) { return v.pow(1.0 / a); }};
}

}  // namespace escm::gauge
