#pragma once

// Iterated function schemes on the unit square: certified contractions,
// similarity exponents, staged sequences with their schedule machinery,
// cylinder (mass-distribution) measures, and scheme interleaving.

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "core.hpp"
#include "distortion.hpp"
#include "extended_real.hpp"
#include "gauge.hpp"

namespace escm::ifs {

// A contraction of the unit square with certified two-sided Lipschitz
// bounds: b_lower |z-w| <= |T(z)-T(w)| <= c_upper |z-w|.
struct ContractionMap {
    std::function<cplx(cplx)> apply;
    std::function<cplx(cplx)> deriv;  // optional; needed for certification of compositions
    double b_lower = 0.0;
    double c_upper = 0.0;
};

// Exponent s >= 0 solving sum b_i^s = 1, by bisection on the strictly
// decreasing map s -> sum b_i^s. Bracket [0, 64], payload tolerance 1e-13.
inline double similarity_dimension(const std::vector<double>& b) {
    if (b.empty()) throw precondition_error("similarity_dimension: empty ratio list");
    for (double bi : b)
        if (!(bi > 0.0 && bi < 1.0))
            throw precondition_error("similarity_dimension: ratios must lie in (0,1)");
    auto sum_pow = [&](double s) {
        double acc = 0.0;
        for (double bi : b) acc += std::pow(bi, s);
        return acc;
    };
    if (b.size() == 1) return 0.0;  // single ratio: b^0 = 1 exactly
    double lo = 0.0, hi = 64.0;
    if (sum_pow(hi) > 1.0) throw numeric_error("similarity_dimension: exponent above bracket");
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (sum_pow(mid) > 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct Scheme {
    std::vector<ContractionMap> maps;
    double separation = 0.0;  // min pairwise distance of map images; 0 when unknown
    double s = 0.0;           // similarity exponent for the certified lower bounds

    size_t arity() const { return maps.size(); }
    std::vector<double> lower_bounds() const {
        std::vector<double> b;
        b.reserve(maps.size());
        for (const auto& m : maps) b.push_back(m.b_lower);
        return b;
    }
    double sum_lower() const {
        double acc = 0.0;
        for (const auto& m : maps) acc += m.b_lower;
        return acc;
    }
};

// Sampled lower bound on the separation of the scheme's images: boundary
// point clouds per map, minimum pairwise distance, minus the Lipschitz
// slack covering the gaps between boundary samples.
inline double estimate_separation(const std::vector<ContractionMap>& maps,
                                  int boundary_samples = 256) {
    if (maps.size() < 2) return 1.0;  // no pairs: conventional unit separation
    const SquareSpec D = unit_square();
    std::vector<std::vector<cplx>> clouds(maps.size());
    const double perim_step = 8.0 * D.half_side / boundary_samples;
    for (size_t i = 0; i < maps.size(); ++i) {
        for (int k = 0; k < boundary_samples; ++k) {
            const double t = perim_step * k;  // arclength along the square boundary
            double u = t;
            cplx z;
            const double side = 2.0 * D.half_side;
            const cplx lo = D.center - cplx(D.half_side, D.half_side);
            if (u < side) z = lo + cplx(u, 0.0);
            else if ((u -= side) < side) z = lo + cplx(side, u);
            else if ((u -= side) < side) z = lo + cplx(side - u, side);
            else z = lo + cplx(0.0, side - (u - side));
            clouds[i].push_back(maps[i].apply(z));
        }
    }
    double dmin = std::numeric_limits<double>::infinity();
    double cmax = 0.0;
    for (const auto& m : maps) cmax = std::max(cmax, m.c_upper);
    for (size_t i = 0; i < maps.size(); ++i)
        for (size_t j = i + 1; j < maps.size(); ++j)
            for (const cplx& p : clouds[i])
                for (const cplx& q : clouds[j]) dmin = std::min(dmin, std::abs(p - q));
    const double slack = cmax * perim_step;
    return std::max(0.0, dmin - slack);
}

inline Scheme make_scheme(std::vector<ContractionMap> maps,
                          std::optional<double> separation = std::nullopt) {
    if (maps.empty()) throw precondition_error("make_scheme: no maps");
    for (const auto& m : maps)
        if (!(m.b_lower > 0.0 && m.b_lower <= m.c_upper && m.c_upper < 1.0))
            throw precondition_error("make_scheme: need 0 < b_lower <= c_upper < 1");
    Scheme s;
    s.maps = std::move(maps);
    s.separation = separation ? *separation : estimate_separation(s.maps);
    s.s = similarity_dimension(s.lower_bounds());
    return s;
}

// Aggregate view of one stage, sufficient for the schedule machinery. Large
// constructed stages (too many maps to enumerate) provide this directly.
struct StageSummary {
    XReal count;
    double ln_b_min = 0.0;
    double ln_b_max = 0.0;
    double s = 0.0;
    double ln_separation = -std::numeric_limits<double>::infinity();
    std::function<XReal(double)> sum_b_pow;  // s -> sum_i b_i^s
};

inline StageSummary summarize(const Scheme& sch) {
    StageSummary out;
    out.count = XReal::from_double(static_cast<double>(sch.arity()));
    double bmin = 1.0, bmax = 0.0;
    for (const auto& m : sch.maps) {
        bmin = std::min(bmin, m.b_lower);
        bmax = std::max(bmax, m.b_lower);
    }
    out.ln_b_min = std::log(bmin);
    out.ln_b_max = std::log(bmax);
    out.s = sch.s;
    out.ln_separation = sch.separation > 0.0 ? std::log(sch.separation)
                                             : -std::numeric_limits<double>::infinity();
    auto bs = std::make_shared<std::vector<double>>(sch.lower_bounds());
    out.sum_b_pow = [bs](double s) {
        XReal acc = XReal::zero();
        for (double b : *bs) acc = acc + XReal::from_ln(s * std::log(b));
        return acc;
    };
    return out;
}

// Exponent solving sum b^s = 1 for a summarized stage.
inline double summary_similarity_exponent(const StageSummary& st) {
    double lo = 0.0, hi = 64.0;
    if (st.sum_b_pow(hi) > XReal::one()) throw numeric_error("summary exponent above bracket");
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (st.sum_b_pow(mid) > XReal::one() ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct CylinderCode {
    std::vector<int> word;  // one 0-based index per stage, outermost first
};

// A staged sequence: position k of the composition uses stages[k].
struct SchemeSequence {
    std::vector<Scheme> stages;
    std::vector<long long> schedule;  // (n_i), strictly increasing when present

    void validate_schedule() const {
        long long prev = 0;
        for (long long n : schedule) {
            if (n <= prev) throw precondition_error("SchemeSequence: schedule not increasing");
            prev = n;
        }
    }
};

// Worst-case stats over the first k stages (1-based prefixes).
struct PrefixStats {
    double ln_alpha = 0.0;  // ln of min lower bound
    double ln_beta = 0.0;   // ln of max lower bound
    double gamma = 0.0;     // min similarity exponent
    double delta = 0.0;     // max similarity exponent
    double ln_d = 0.0;      // ln of min separation
};

inline std::vector<PrefixStats> prefix_stats(const std::vector<StageSummary>& stages) {
    std::vector<PrefixStats> out;
    out.reserve(stages.size());
    PrefixStats cur;
    bool first = true;
    for (const auto& st : stages) {
        if (first) {
            cur = PrefixStats{st.ln_b_min, st.ln_b_max, st.s, st.s, st.ln_separation};
            first = false;
        } else {
            cur.ln_alpha = std::min(cur.ln_alpha, st.ln_b_min);
            cur.ln_beta = std::max(cur.ln_beta, st.ln_b_max);
            cur.gamma = std::min(cur.gamma, st.s);
            cur.delta = std::max(cur.delta, st.s);
            cur.ln_d = std::min(cur.ln_d, st.ln_separation);
        }
        out.push_back(cur);
    }
    return out;
}

// Core schedule selection. stats[i] are the worst-case stats over the pool
// prefix of length i+1; eps_ln evaluates the gauge exponent at ln t. For
// each i the returned n_i is the least integer above n_{i-1} with
//   gamma_{i+1} - delta_{i+1} * ln(alpha_{i+1} d_{i+1}) / ln(d_i b_i^n)
//      >= 1 + 2 eps(d_i b_i^n),
// prefix-indexed as in the remark that the stats depend only on the pool
// prefix. Any larger n keeps the inequality (checked by tests).
inline std::vector<long long> schedule_from_stats(
    const std::vector<PrefixStats>& stats, const std::function<double(double)>& eps_ln,
    long long n_cap = 4000000) {
    if (stats.size() < 2) throw precondition_error("schedule_from_stats: need at least two prefixes");
    for (const auto& st : stats) {
        if (!(st.gamma > 1.0))
            throw precondition_error("schedule_from_stats: stage with exponent <= 1 (sum of b's <= 1?)");
        if (std::isinf(st.ln_d))
            throw precondition_error("schedule_from_stats: stage without positive separation");
    }
    std::vector<long long> out;
    long long prev = 0;
    for (size_t i = 0; i + 1 < stats.size(); ++i) {
        const PrefixStats& lo = stats[i];
        const PrefixStats& hi = stats[i + 1];
        long long n = prev;
        bool found = false;
        while (++n <= n_cap) {
            const double ln_t = lo.ln_d + static_cast<double>(n) * lo.ln_beta;
            if (!(ln_t < 0.0)) continue;  // need d beta^n < 1
            const double lhs = hi.gamma - hi.delta * (hi.ln_alpha + hi.ln_d) / ln_t;
            const double rhs = 1.0 + 2.0 * eps_ln(ln_t);
            if (lhs >= rhs) {
                found = true;
                break;
            }
        }
        if (!found)
            throw numeric_error("schedule_from_stats: inequality unsatisfiable up to cap (eps too large?)");
        out.push_back(n);
        prev = n;
    }
    return out;
}

inline std::vector<long long> schedule_indices(const std::vector<StageSummary>& pool,
                                               const std::function<double(double)>& eps_ln,
                                               long long n_cap = 4000000) {
    return schedule_from_stats(prefix_stats(pool), eps_ln, n_cap);
}

// One representative point per depth-k cylinder (image of the base-square
// center under the composition), with its code.
struct CylinderPoint {
    cplx point;
    CylinderCode code;
};

inline std::vector<CylinderPoint> limit_set_points(const SchemeSequence& seq, int depth,
                                                   long long cap = 10000000) {
    if (depth < 0) throw precondition_error("limit_set_points: negative depth");
    if (depth > static_cast<int>(seq.stages.size()))
        throw precondition_error("limit_set_points: depth exceeds staged sequence length");
    long long count = 1;
    for (int l = 0; l < depth; ++l) {
        count *= static_cast<long long>(seq.stages[l].arity());
        if (count > cap) throw precondition_error("limit_set_points: cylinder count above cap");
    }
    std::vector<CylinderPoint> out;
    out.reserve(static_cast<size_t>(count));
    std::vector<int> word(depth, 0);
    const cplx c0 = unit_square().center;
    for (long long idx = 0; idx < count; ++idx) {
        cplx z = c0;
        for (int l = depth - 1; l >= 0; --l) z = seq.stages[l].maps[word[l]].apply(z);
        out.push_back(CylinderPoint{z, CylinderCode{word}});
        for (int l = depth - 1; l >= 0; --l) {  // odometer, innermost fastest
            if (++word[l] < static_cast<int>(seq.stages[l].arity())) break;
            word[l] = 0;
        }
    }
    return out;
}

// mu of a cylinder: product over stages of b^s.
inline double cylinder_measure(const SchemeSequence& seq, const CylinderCode& code) {
    if (code.word.size() > seq.stages.size())
        throw precondition_error("cylinder_measure: code longer than sequence");
    double mass = 1.0;
    for (size_t l = 0; l < code.word.size(); ++l) {
        const Scheme& st = seq.stages[l];
        const int j = code.word[l];
        if (j < 0 || j >= static_cast<int>(st.arity()))
            throw precondition_error("cylinder_measure: index outside stage arity");
        mass *= std::pow(st.maps[j].b_lower, st.s);
    }
    return mass;
}

struct MassRatioRow {
    cplx x;
    double r = 0.0;
    double mu = 0.0;
    double h_r = 0.0;
    double ratio = 0.0;
};

// mu(D(x,r)) estimated by summing the masses of all depth-k cylinders whose
// bounding disks meet D(x,r), with k deep enough that cylinder diameters
// fall below r/4. Bounding disks are conservative, so the result can only
// overestimate mu.
inline double ball_mass(const SchemeSequence& seq, cplx x, double r) {
    const double diamD = unit_square().diam();
    int k = 0;
    double shrink = 1.0;
    while (k < static_cast<int>(seq.stages.size()) && shrink * diamD >= 0.25 * r) {
        double cmax = 0.0;
        for (const auto& m : seq.stages[k].maps) cmax = std::max(cmax, m.c_upper);
        shrink *= cmax;
        ++k;
    }
    if (shrink * diamD >= 0.25 * r)
        throw precondition_error("ball_mass: sequence too short for this radius");
    double total = 0.0;
    // DFS over prefix words, pruning cylinders whose bounding disk misses
    // D(x, r). Representatives are evaluated from the inside out.
    std::vector<int> word;
    std::function<void(int, double)> rec = [&](int level, double mass) {
        cplx z = unit_square().center;
        for (int l = level - 1; l >= 0; --l) z = seq.stages[l].maps[word[l]].apply(z);
        double c = 1.0;
        for (int l = 0; l < level; ++l) c *= seq.stages[l].maps[word[l]].c_upper;
        const double radius = c * diamD * 0.5;
        if (std::abs(z - x) > r + radius) return;
        if (level == k) {
            total += mass;
            return;
        }
        const Scheme& st = seq.stages[level];
        for (int j = 0; j < static_cast<int>(st.arity()); ++j) {
            word.push_back(j);
            rec(level + 1, mass * std::pow(st.maps[j].b_lower, st.s));
            word.pop_back();
        }
    };
    rec(0, 1.0);
    return total;
}

inline std::vector<MassRatioRow> mass_distribution_check(const SchemeSequence& seq,
                                                         const gauge::GaugeFn& h,
                                                         const std::vector<cplx>& centers,
                                                         const std::vector<double>& radii) {
    for (size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] < radii[i - 1]))
            throw precondition_error("mass_distribution_check: radii must decrease");
    std::vector<MassRatioRow> rows;
    rows.reserve(centers.size() * radii.size());
    for (const cplx& x : centers) {
        for (double r : radii) {
            MassRatioRow row;
            row.x = x;
            row.r = r;
            row.mu = ball_mass(seq, x, r);
            row.h_r = h(r);
            row.ratio = row.h_r > 0.0 ? row.mu / row.h_r
                                      : std::numeric_limits<double>::infinity();
            rows.push_back(row);
        }
    }
    return rows;
}

// Least p >= 0 with m_Q * min_j bbar_j * (sum_i btilde_i)^p > 1, and the
// interleaved scheme P^p o Q with certified product bounds.
inline int interleave_power(const Scheme& P, const Scheme& Q) {
    const double sum_tilde = P.sum_lower();
    if (!(sum_tilde > 1.0))
        throw precondition_error("interleave: sum of P lower bounds must exceed 1");
    if (Q.maps.empty()) throw precondition_error("interleave: Q empty");
    double bbar_min = 1.0;
    for (const auto& m : Q.maps) bbar_min = std::min(bbar_min, m.b_lower);
    const double mq = static_cast<double>(Q.arity());
    int p = 0;
    double acc = mq * bbar_min;
    while (acc <= 1.0) {
        acc *= sum_tilde;
        if (++p > 100000) throw numeric_error("interleave: power cap exceeded");
    }
    return p;
}

inline std::pair<int, Scheme> interleave_schemes(const Scheme& P, const Scheme& Q,
                                                 long long cap = 100000) {
    const int p = interleave_power(P, Q);
    long long count = static_cast<long long>(Q.arity());
    for (int i = 0; i < p; ++i) {
        count *= static_cast<long long>(P.arity());
        if (count > cap) throw precondition_error("interleave_schemes: composed arity above cap");
    }
    std::vector<ContractionMap> maps;
    maps.reserve(static_cast<size_t>(count));
    std::vector<int> word(p, 0);
    const auto pj = std::make_shared<Scheme>(P);
    const auto qj = std::make_shared<Scheme>(Q);
    for (size_t j = 0; j < Q.arity(); ++j) {
        std::fill(word.begin(), word.end(), 0);
        long long inner = 1;
        for (int i = 0; i < p; ++i) inner *= static_cast<long long>(P.arity());
        for (long long idx = 0; idx < inner; ++idx) {
            ContractionMap m;
            auto w = std::make_shared<std::vector<int>>(word);
            const int jq = static_cast<int>(j);
            m.apply = [pj, qj, w, jq](cplx z) {
                z = qj->maps[jq].apply(z);
                for (int q : *w) z = pj->maps[q].apply(z);
                return z;
            };
            double b = Q.maps[j].b_lower, c = Q.maps[j].c_upper;
            for (int q : *w) {
                b *= P.maps[q].b_lower;
                c *= P.maps[q].c_upper;
            }
            m.b_lower = b;
            m.c_upper = c;
            maps.push_back(std::move(m));
            for (int l = p - 1; l >= 0; --l) {
                if (++word[l] < static_cast<int>(P.arity())) break;
                word[l] = 0;
            }
        }
    }
    // Separation: across differing P-prefixes the gap transfers through the
    // common chain; across Q-indices it contracts by the full P-word.
    double alpha_p = 1.0;
    for (const auto& m : P.maps) alpha_p = std::min(alpha_p, m.b_lower);
    double dq = Q.arity() > 1 ? Q.separation : 1.0;
    double sep = std::pow(alpha_p, p) * std::min(P.separation > 0 ? P.separation : 1.0, dq);
    Scheme R = make_scheme(std::move(maps), sep);
    return {p, R};
}

// Summary-level interleave for stages too large to enumerate.
inline std::pair<int, StageSummary> interleave_summaries(const StageSummary& P,
                                                         const StageSummary& Q) {
    const XReal sum_tilde = P.sum_b_pow(1.0);
    if (!(sum_tilde > XReal::one()))
        throw precondition_error("interleave_summaries: sum of P lower bounds must exceed 1");
    const double ln_sum = sum_tilde.ln_double();
    // least p with ln m_Q + ln bbar_min + p ln(sum) > 0
    const double base = Q.count.ln_double() + Q.ln_b_min;
    int p = 0;
    if (base <= 0.0) p = static_cast<int>(std::floor(-base / ln_sum)) + 1;
    StageSummary R;
    R.count = Q.count * P.count.pow(static_cast<double>(p));
    R.ln_b_min = Q.ln_b_min + p * P.ln_b_min;
    R.ln_b_max = Q.ln_b_max + p * P.ln_b_max;
    R.ln_separation = p * P.ln_b_min + std::min(P.ln_separation, Q.ln_separation);
    auto pq = std::make_shared<std::pair<StageSummary, StageSummary>>(P, Q);
    const int pp = p;
    R.sum_b_pow = [pq, pp](double s) {
        return pq->second.sum_b_pow(s) * pq->first.sum_b_pow(s).pow(static_cast<double>(pp));
    };
    R.s = summary_similarity_exponent(R);
    return {p, R};
}

// Power trick behind condition (2): for a conformal scheme whose limit set
// has dimension above s, some iterate certifies sum b^s > 1. Returns the
// least p up to max_p whose composed maps certify, together with the
// certified sums per power.
struct PropositionReport {
    int p = -1;
    std::vector<double> certified_sums;
};

inline PropositionReport proposition_power(const Scheme& T, double s, double padding,
                                           int max_p, long long cap = 100000) {
    PropositionReport rep;
    const SquareSpec D = unit_square();
    for (int p = 1; p <= max_p; ++p) {
        long long count = 1;
        for (int i = 0; i < p; ++i) count *= static_cast<long long>(T.arity());
        if (count > cap) break;
        double sum = 0.0;
        std::vector<int> word(p, 0);
        const auto tj = std::make_shared<Scheme>(T);
        for (long long idx = 0; idx < count; ++idx) {
            auto w = std::make_shared<std::vector<int>>(word);
            auto apply = [tj, w](cplx z) {
                for (int q : *w) z = tj->maps[q].apply(z);
                return z;
            };
            auto deriv = [tj, w](cplx z) {
                cplx d{1.0, 0.0};
                for (int q : *w) {
                    d *= tj->maps[q].deriv(z);
                    z = tj->maps[q].apply(z);
                }
                return d;
            };
            const auto cert = distortion::certify_branch_contraction(apply, deriv, D, padding);
            sum += std::pow(cert.b_lower, s);
            for (int l = p - 1; l >= 0; --l) {
                if (++word[l] < static_cast<int>(T.arity())) break;
                word[l] = 0;
            }
        }
        rep.certified_sums.push_back(sum);
        if (sum > 1.0) {
            rep.p = p;
            return rep;
        }
    }
    return rep;
}

}  // namespace escm::ifs
