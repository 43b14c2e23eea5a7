// SPDX-License-Identifier: Apache-2.0
//
// tbdris - transmissive beyond-diagonal RIS link optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "matrix.hpp"

namespace tbdris {

inline constexpr double kLn2 = 0.6931471805599453;

struct PowerBudget {
    double total_w = 0.0; // P_t
    double max_w = 0.0;   // P_max

    // fraction budget: p_strong + p_weak <= min(1, P_max / P_t)
    double fraction_cap() const { return std::min(1.0, max_w / total_w); }
};

struct PowerSplit {
    double p_strong = 0.0;
    double p_weak = 0.0;
    double total_power_w = 0.0;
    double max_power_w = 0.0;

    bool satisfies_constraints(double tol = 1e-9) const {
        return p_strong >= -tol && p_weak >= -tol &&
               p_strong + p_weak <= 1.0 + tol &&
               total_power_w * (p_strong + p_weak) <= max_power_w + tol;
    }
};

struct QosSpec {
    double r_min_bps_hz = 0.0;
    double sigma2 = 1.0;

    void validate() const {
        if (r_min_bps_hz < 0.0) throw dimension_error("QosSpec: r_min must be >= 0");
        if (sigma2 <= 0.0) throw dimension_error("QosSpec: sigma2 must be > 0");
    }

    // SINR needed for R_min
    double min_sinr() const { return std::exp2(r_min_bps_hz) - 1.0; }
};

// Tangent surrogate of log2(1+g) at expansion point g_hat:
//   Rbar(g) = alpha log2(g) + beta, exact at g_hat, lower bound elsewhere.
struct ScaPoint {
    double alpha = 0.0;
    double beta = 0.0;
    double expansion_sinr = 0.0;
};

struct ScaCoefficients {
    ScaPoint strong;
    ScaPoint weak;
};

struct DualState {
    double lambda_strong = 0.0;
    double lambda_weak = 0.0;
    double mu1 = 0.0; // C3: p_strong + p_weak <= 1
    double mu2 = 0.0; // C4: P_t (p_strong + p_weak) <= P_max
};

struct UserOrder {
    std::size_t strong = 0;
    std::size_t weak = 1;
};

// Strong = larger effective gain; ties break toward the first argument.
inline UserOrder order_users(double gain_a, double gain_b) {
    if (gain_b > gain_a) return UserOrder{1, 0};
    return UserOrder{0, 1};
}

struct SinrPair {
    double strong = 0.0;
    double weak = 0.0;
};

// gamma_i = Psi_i p_i P_t / sigma^2
// gamma_j = Psi_j p_j P_t / (sigma^2 + Psi_j p_i P_t); SIC removes the weak
// user's signal at the strong receiver.
inline SinrPair sinr_pair(double psi_strong, double psi_weak, const PowerSplit& split,
                          const QosSpec& qos) {
    SinrPair g;
    g.strong = psi_strong * split.p_strong * split.total_power_w / qos.sigma2;
    g.weak = psi_weak * split.p_weak * split.total_power_w /
             (qos.sigma2 + psi_weak * split.p_strong * split.total_power_w);
    return g;
}

inline std::pair<double, double> rates(double gamma_strong, double gamma_weak) {
    return {std::log2(1.0 + gamma_strong), std::log2(1.0 + gamma_weak)};
}

inline ScaPoint sca_point(double gamma_hat) {
    if (gamma_hat <= 0.0)
        throw dimension_error("sca_point: expansion SINR must be > 0");
    ScaPoint p;
    p.expansion_sinr = gamma_hat;
    p.alpha = gamma_hat / (1.0 + gamma_hat);
    p.beta = std::log2(1.0 + gamma_hat) - p.alpha * std::log2(gamma_hat);
    return p;
}

inline ScaCoefficients sca_coefficients(double gamma_hat_strong, double gamma_hat_weak) {
    return ScaCoefficients{sca_point(gamma_hat_strong), sca_point(gamma_hat_weak)};
}

inline double surrogate_rate(const ScaPoint& sca, double gamma) {
    if (gamma <= 0.0) return -std::numeric_limits<double>::infinity();
    return sca.alpha * std::log2(gamma) + sca.beta;
}

// Surrogate sum rate at a given split and effective gains.
inline double surrogate_sum_rate(double psi_strong, double psi_weak,
                                 const PowerSplit& split, const ScaCoefficients& sca,
                                 const QosSpec& qos) {
    const SinrPair g = sinr_pair(psi_strong, psi_weak, split, qos);
    return surrogate_rate(sca.strong, g.strong) + surrogate_rate(sca.weak, g.weak);
}

enum class ClosedFormStatus {
    ok,
    negative_discriminant,  // infeasible at these duals; caller adjusts
    degenerate_multipliers, // quadratic collapses entirely
};

struct ClosedFormResult {
    ClosedFormStatus status = ClosedFormStatus::ok;
    PowerSplit split;
    double discriminant = 0.0;
};

namespace detail {

inline double clamp_fraction(double p, double cap) {
    const double eps = 1e-9;
    return std::clamp(p, eps, cap - eps);
}

} // namespace detail

// Stationarity of the Lagrangian in p_strong gives a quadratic; its roots are
// the closed-form candidates. The quadratic (a p^2 + b p + c = 0, m = mu1 +
// mu2 P_t):
//   a = -m ln2 Psi_w P_t
//   b = (1+lambda_s) a_s Psi_w P_t - (1+lambda_w) a_w Psi_w P_t - m ln2 s2
//   c = (1+lambda_s) a_s s2
// QoS multipliers enter with +lambda: the Lagrangian of a maximization adds
// lambda * (Rbar - R_min), increasing the weight of a constrained user's rate.
// Both roots are evaluated; the one in [0,cap] with the larger surrogate wins,
// otherwise the nearer root is clipped. p_weak = cap - p_strong.
inline ClosedFormResult power_closed_form(double psi_strong, double psi_weak,
                                          const DualState& duals, const ScaCoefficients& sca,
                                          const QosSpec& qos, const PowerBudget& budget) {
    (void)psi_strong; // enters only through the surrogate used for root selection
    const double pt = budget.total_w;
    const double cap = budget.fraction_cap();
    const double s2 = qos.sigma2;
    const double m = duals.mu1 + duals.mu2 * pt;

    const double a = -m * kLn2 * psi_weak * pt;
    const double b = (1.0 + duals.lambda_strong) * sca.strong.alpha * psi_weak * pt -
                     (1.0 + duals.lambda_weak) * sca.weak.alpha * psi_weak * pt -
                     m * kLn2 * s2;
    const double c = (1.0 + duals.lambda_strong) * sca.strong.alpha * s2;

    ClosedFormResult out;
    out.split.total_power_w = pt;
    out.split.max_power_w = budget.max_w;

    std::vector<double> roots;
    if (std::abs(a) < 1e-300) {
        if (std::abs(b) < 1e-300) {
            out.status = ClosedFormStatus::degenerate_multipliers;
            return out;
        }
        roots.push_back(-c / b);
    } else {
        const double disc = b * b - 4.0 * a * c;
        out.discriminant = disc;
        if (disc < 0.0) {
            out.status = ClosedFormStatus::negative_discriminant;
            return out;
        }
        const double sq = std::sqrt(disc);
        roots.push_back((-b + sq) / (2.0 * a));
        roots.push_back((-b - sq) / (2.0 * a));
    }

    double best_p = std::numeric_limits<double>::quiet_NaN();
    double best_val = -std::numeric_limits<double>::infinity();
    for (double r : roots) {
        if (r < 0.0 || r > cap) continue;
        PowerSplit cand{detail::clamp_fraction(r, cap), 0.0, pt, budget.max_w};
        cand.p_weak = cap - cand.p_strong;
        const double val = surrogate_sum_rate(psi_strong, psi_weak, cand, sca, qos);
        if (val > best_val) {
            best_val = val;
            best_p = cand.p_strong;
        }
    }
    if (std::isnan(best_p)) {
        // no root inside [0,cap]: clip the nearer one
        double nearest = roots.front();
        double dist = std::numeric_limits<double>::infinity();
        for (double r : roots) {
            const double d = std::min(std::abs(r), std::abs(r - cap));
            if (d < dist) {
                dist = d;
                nearest = r;
            }
        }
        best_p = detail::clamp_fraction(nearest, cap);
    }
    out.split.p_strong = best_p;
    out.split.p_weak = cap - best_p;
    return out;
}

struct ConstraintViolations {
    double qos_strong = 0.0; // R_min - Rbar_strong
    double qos_weak = 0.0;   // R_min - Rbar_weak
    double power_sum = 0.0;  // (p_i + p_j) - 1
    double power_max = 0.0;  // P_t (p_i + p_j) - P_max
};

// Projected subgradient ascent on the multipliers.
inline DualState dual_update(const DualState& duals, const ConstraintViolations& v,
                             double step) {
    DualState out;
    out.lambda_strong = std::max(0.0, duals.lambda_strong + step * v.qos_strong);
    out.lambda_weak = std::max(0.0, duals.lambda_weak + step * v.qos_weak);
    out.mu1 = std::max(0.0, duals.mu1 + step * v.power_sum);
    out.mu2 = std::max(0.0, duals.mu2 + step * v.power_max);
    return out;
}

struct PowerSolveOptions {
    int max_iters = 500;
    double step0 = 0.1;
    double comp_slack_tol = 1e-6;
};

struct PowerSolveResult {
    bool feasible = false;
    bool converged = false;
    PowerSplit split;
    double surrogate = -std::numeric_limits<double>::infinity();
    double r_strong = 0.0;
    double r_weak = 0.0;
    int iterations = 0;
    DualState duals;
};

// Exhaustive scan of p_strong on a uniform grid with p_weak = cap - p_strong,
// maximizing the surrogate sum rate subject to true rates >= R_min. The
// independent oracle for the closed-form KKT path.
inline PowerSolveResult power_oracle(double psi_strong, double psi_weak,
                                     const ScaCoefficients& sca, const QosSpec& qos,
                                     const PowerBudget& budget, int grid_points = 10000) {
    if (grid_points < 1000)
        throw dimension_error("power_oracle: grid_points must be >= 1000");
    const double cap = budget.fraction_cap();
    PowerSolveResult best;
    best.split.total_power_w = budget.total_w;
    best.split.max_power_w = budget.max_w;
    for (int k = 0; k <= grid_points; ++k) {
        PowerSplit cand{cap * k / grid_points, 0.0, budget.total_w, budget.max_w};
        cand.p_weak = cap - cand.p_strong;
        const SinrPair g = sinr_pair(psi_strong, psi_weak, cand, qos);
        const auto [ri, rj] = rates(g.strong, g.weak);
        if (ri < qos.r_min_bps_hz - 1e-12 || rj < qos.r_min_bps_hz - 1e-12) continue;
        const double val = surrogate_rate(sca.strong, g.strong) + surrogate_rate(sca.weak, g.weak);
        if (!best.feasible || val > best.surrogate) {
            best.feasible = true;
            best.converged = true;
            best.split = cand;
            best.surrogate = val;
            best.r_strong = ri;
            best.r_weak = rj;
        }
    }
    return best;
}

namespace detail {

// True-rate feasibility interval for p_strong with p_weak = cap - p_strong.
struct FeasibleInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool nonempty = false;
};

inline FeasibleInterval qos_interval(double psi_strong, double psi_weak, const QosSpec& qos,
                                     const PowerBudget& budget) {
    const double cap = budget.fraction_cap();
    const double gmin = qos.min_sinr();
    const double pt = budget.total_w;
    FeasibleInterval iv;
    if (gmin <= 0.0) {
        iv.lo = 0.0;
        iv.hi = cap;
        iv.nonempty = true;
        return iv;
    }
    if (psi_strong <= 0.0 || psi_weak <= 0.0) return iv;
    iv.lo = gmin * qos.sigma2 / (psi_strong * pt);
    iv.hi = (psi_weak * cap * pt - gmin * qos.sigma2) / (psi_weak * pt * (1.0 + gmin));
    iv.nonempty = iv.lo <= iv.hi + 1e-12 && iv.lo <= cap && iv.hi >= 0.0;
    return iv;
}

// Stationary points of the surrogate along p_weak = cap - p_strong. With
// b = Psi_w P_t, eliminating the shared multiplier gives a plain quadratic:
//   -a_s b p^2 + [a_s (cap b - s2) - a_w (s2 + b cap)] p + a_s cap s2 = 0
// so the sum-constrained inner problem has at most two interior stationary
// points; together with the QoS-interval endpoints they contain the optimum.
inline std::vector<double> stationary_points(double psi_weak, const ScaCoefficients& sca,
                                             const QosSpec& qos, const PowerBudget& budget) {
    const double cap = budget.fraction_cap();
    const double b = psi_weak * budget.total_w;
    const double s2 = qos.sigma2;
    const double qa = -sca.strong.alpha * b;
    const double qb = sca.strong.alpha * (cap * b - s2) - sca.weak.alpha * (s2 + b * cap);
    const double qc = sca.strong.alpha * cap * s2;
    std::vector<double> roots;
    if (std::abs(qa) < 1e-300) {
        if (std::abs(qb) > 1e-300) roots.push_back(-qc / qb);
        return roots;
    }
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) return roots;
    const double sq = std::sqrt(disc);
    roots.push_back((-qb + sq) / (2.0 * qa));
    roots.push_back((-qb - sq) / (2.0 * qa));
    return roots;
}

inline void consider_candidate(double p_strong, double psi_strong, double psi_weak,
                               const ScaCoefficients& sca, const QosSpec& qos,
                               const PowerBudget& budget, PowerSolveResult& best) {
    const double cap = budget.fraction_cap();
    PowerSplit cand{clamp_fraction(p_strong, cap), 0.0, budget.total_w, budget.max_w};
    cand.p_weak = cap - cand.p_strong;
    const SinrPair g = sinr_pair(psi_strong, psi_weak, cand, qos);
    const auto [ri, rj] = rates(g.strong, g.weak);
    if (ri < qos.r_min_bps_hz - 1e-9 || rj < qos.r_min_bps_hz - 1e-9) return;
    const double val = surrogate_rate(sca.strong, g.strong) + surrogate_rate(sca.weak, g.weak);
    if (!best.feasible || val > best.surrogate) {
        best.feasible = true;
        best.split = cand;
        best.surrogate = val;
        best.r_strong = ri;
        best.r_weak = rj;
    }
}

} // namespace detail

// Full P1 solve: closed-form stationary points driven by projected-subgradient
// multiplier updates, plus the complementary-slackness boundary candidates.
inline PowerSolveResult solve_power(double psi_strong, double psi_weak,
                                    const ScaCoefficients& sca, const QosSpec& qos,
                                    const PowerBudget& budget,
                                    const PowerSolveOptions& opts = {}) {
    const double cap = budget.fraction_cap();
    const double pt = budget.total_w;

    PowerSolveResult best;
    best.split.total_power_w = pt;
    best.split.max_power_w = budget.max_w;

    const detail::FeasibleInterval iv = detail::qos_interval(psi_strong, psi_weak, qos, budget);
    if (!iv.nonempty) return best; // outage: no split meets the QoS floor

    // QoS-active KKT candidates
    detail::consider_candidate(iv.lo, psi_strong, psi_weak, sca, qos, budget, best);
    detail::consider_candidate(iv.hi, psi_strong, psi_weak, sca, qos, budget, best);
    detail::consider_candidate(0.5 * (iv.lo + iv.hi), psi_strong, psi_weak, sca, qos, budget, best);

    // interior stationary points of the sum-constrained surrogate
    for (double p : detail::stationary_points(psi_weak, sca, qos, budget))
        if (p > 0.0 && p < cap)
            detail::consider_candidate(std::clamp(p, iv.lo, iv.hi), psi_strong, psi_weak, sca,
                                       qos, budget, best);

    DualState duals;
    duals.mu1 = 0.1; // start with an active C3 multiplier; the loop adjusts it
    double last_p = 0.5 * cap;

    for (int t = 1; t <= opts.max_iters; ++t) {
        const double step = opts.step0 / std::sqrt(static_cast<double>(t));
        const ClosedFormResult cf = power_closed_form(psi_strong, psi_weak, duals, sca, qos, budget);
        double p_i = last_p;
        if (cf.status == ClosedFormStatus::ok) {
            p_i = cf.split.p_strong;
            last_p = p_i;
            detail::consider_candidate(p_i, psi_strong, psi_weak, sca, qos, budget, best);
        }

        // Lagrangian maximizer in p_weak given the multipliers
        const double m = duals.mu1 + duals.mu2 * pt;
        double p_w = cap;
        if (m > 1e-300)
            p_w = std::clamp((1.0 + duals.lambda_weak) * sca.weak.alpha / (m * kLn2), 0.0, cap);

        ConstraintViolations v;
        PowerSplit at{detail::clamp_fraction(p_i, cap), 0.0, pt, budget.max_w};
        at.p_weak = detail::clamp_fraction(p_w, cap);
        const SinrPair g = sinr_pair(psi_strong, psi_weak, at, qos);
        v.qos_strong = qos.r_min_bps_hz - surrogate_rate(sca.strong, g.strong);
        v.qos_weak = qos.r_min_bps_hz - surrogate_rate(sca.weak, g.weak);
        v.power_sum = (at.p_strong + at.p_weak) - 1.0;
        v.power_max = pt * (at.p_strong + at.p_weak) - budget.max_w;

        const double slack = std::abs(duals.lambda_strong * v.qos_strong) +
                             std::abs(duals.lambda_weak * v.qos_weak) +
                             std::abs(duals.mu1 * v.power_sum) +
                             std::abs(duals.mu2 * v.power_max);
        best.iterations = t;
        if (slack < opts.comp_slack_tol && cf.status == ClosedFormStatus::ok) {
            best.converged = true;
            best.duals = duals;
            break;
        }
        duals = dual_update(duals, v, step);
        best.duals = duals;
    }

    // Polish: with the QoS multipliers frozen, bisect the power multiplier so
    // the two stationarity conditions share the fraction budget exactly.
    {
        DualState d = best.duals;
        auto excess = [&](double m) {
            d.mu1 = m;
            d.mu2 = 0.0;
            const ClosedFormResult cf =
                power_closed_form(psi_strong, psi_weak, d, sca, qos, budget);
            if (cf.status != ClosedFormStatus::ok) return std::numeric_limits<double>::quiet_NaN();
            const double p_w =
                std::clamp((1.0 + d.lambda_weak) * sca.weak.alpha / (m * kLn2), 0.0, cap);
            return cf.split.p_strong + p_w - cap;
        };
        double lo = 1e-8, hi = 1e-8;
        while (hi < 1e8) {
            const double e = excess(hi);
            if (!std::isnan(e) && e < 0.0) break;
            hi *= 4.0;
        }
        if (hi < 1e8) {
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double e = excess(mid);
                if (std::isnan(e) || e > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            DualState d2 = best.duals;
            d2.mu1 = hi;
            d2.mu2 = 0.0;
            const ClosedFormResult cf =
                power_closed_form(psi_strong, psi_weak, d2, sca, qos, budget);
            if (cf.status == ClosedFormStatus::ok)
                detail::consider_candidate(cf.split.p_strong, psi_strong, psi_weak, sca, qos,
                                           budget, best);
        }
    }

    return best;
}

} // namespace tbdris
