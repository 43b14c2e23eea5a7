// SPDX-License-Identifier: Apache-2.0
//
// tbdris - transmissive beyond-diagonal RIS link optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "channel.hpp"
#include "eig.hpp"
#include "matrix.hpp"
#include "noma.hpp"

namespace tbdris {

class boundary_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Transmissive phase-shift matrix Phi_t; trace budget Tr(Phi Phi^H) = K.
struct PhaseMatrix {
    CMatrix entries;

    double trace_gram() const {
        double t = 0.0;
        for (const auto& z : entries.data()) t += std::norm(z);
        return t;
    }
};

// W = Phi Phi^H relaxed to {W >= 0, Tr(W) = K}.
struct GramMatrix {
    HermitianMatrix w;
    double trace_budget = 0.0;

    void validate(const Tolerances& tol = default_tolerances()) const {
        if (std::abs(w.trace() - trace_budget) > tol.trace_rel * trace_budget)
            throw dimension_error("GramMatrix: trace budget violated");
        const EigenDecomposition ed = hermitian_eig(w);
        if (ed.eigenvalues.back() < tol.psd_min_eig * std::max(1.0, ed.eigenvalues.front()))
            throw dimension_error("GramMatrix: not PSD within tolerance");
    }

    static GramMatrix scaled_identity(std::size_t dim, double trace_budget) {
        CMatrix m(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) m(i, i) = trace_budget / dim;
        return GramMatrix{HermitianMatrix(std::move(m)), trace_budget};
    }
};

inline HermitianMatrix outer_product(const ChannelVector& h) {
    return HermitianMatrix::outer(h.entries);
}

struct SdrConfig {
    int max_fw_iters = 2000;
    double gap_tol = 1e-5;  // relative duality gap
    int max_sca_iters = 30; // Taylor expansion-point updates
    double sca_tol = 1e-4;  // relative surrogate improvement
    int line_search_iters = 60;
};

struct SdrDiagnostics {
    int sca_iterations = 0;
    long fw_iterations = 0;
    double gap = 0.0;
    int rank = 0; // eigenvalues above 1e-6 * lambda_max
    bool converged = false;
    bool used_rank1 = false;
    double surrogate = 0.0; // unlinearized relaxed objective at the final W
};

namespace detail {

// The relaxed objective depends on W only through the two scalars
// x = Tr(W F_strong) and y = Tr(W F_weak).
struct SdrScalars {
    double alpha_s = 0.0, beta_s = 0.0;
    double alpha_w = 0.0, beta_w = 0.0;
    double pi_pt = 0.0; // p_strong * P_t
    double sigma2 = 0.0;
    double y_hat = 0.0; // Tr(What F_weak), Taylor expansion point
    double grad_g = 0.0; // pi_pt / (ln2 (sigma2 + y_hat pi_pt))

    void set_taylor_point(double yh) {
        y_hat = yh;
        grad_g = pi_pt / (kLn2 * (sigma2 + y_hat * pi_pt));
    }

    double g_at_hat() const { return std::log2(sigma2 + y_hat * pi_pt); }

    // Linearized (concave) objective of the per-iteration problem.
    double linearized(double x, double y) const {
        if (x <= 0.0 || y <= 0.0)
            throw boundary_error("sdr objective: nonpositive trace argument");
        return alpha_s * std::log2(x * pi_pt / sigma2) + beta_s +
               alpha_w * (std::log2(y) - (g_at_hat() + grad_g * (y - y_hat))) + beta_w;
    }

    // Unlinearized relaxed objective (same constant-offset convention).
    double unlinearized(double x, double y) const {
        if (x <= 0.0 || y <= 0.0)
            throw boundary_error("sdr objective: nonpositive trace argument");
        return alpha_s * std::log2(x * pi_pt / sigma2) + beta_s +
               alpha_w * (std::log2(y) - std::log2(sigma2 + y * pi_pt)) + beta_w;
    }

    double dphi_dx(double x) const { return alpha_s / (x * kLn2); }
    double dphi_dy(double y) const { return alpha_w / (y * kLn2) - alpha_w * grad_g; }
};

inline SdrScalars make_scalars(const PowerSplit& split, const ScaCoefficients& sca,
                               const QosSpec& qos) {
    SdrScalars s;
    s.alpha_s = sca.strong.alpha;
    s.beta_s = sca.strong.beta;
    s.alpha_w = sca.weak.alpha;
    s.beta_w = sca.weak.beta;
    s.pi_pt = split.p_strong * split.total_power_w;
    s.sigma2 = qos.sigma2;
    return s;
}

// Frank-Wolfe state over W = c0 * W0 + Q A Q^H with Q spanning the two
// channel vectors (extended on demand). All objective evaluations reduce to
// the coordinates of the channels in that span.
struct FwState {
    std::size_t dim = 0;      // K
    double trace_budget = 0.0;
    std::vector<cvec> q;      // orthonormal span basis
    cvec r_s, r_w;            // coordinates of h_strong, h_weak in q
    double c0 = 1.0;          // remaining weight on the initial W0
    double x0 = 0.0, y0 = 0.0; // Tr(W0 F_s), Tr(W0 F_w)
    std::vector<cplx> a;      // r x r Hermitian span coefficient matrix, row-major

    std::size_t r() const { return q.size(); }

    cplx& A(std::size_t i, std::size_t j) { return a[i * r() + j]; }
    cplx Aat(std::size_t i, std::size_t j) const { return a[i * r() + j]; }

    double quad(const cvec& v) const {
        cplx s{0.0, 0.0};
        const std::size_t n = r();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                s += std::conj(v[i]) * a[i * n + j] * v[j];
        return s.real();
    }

    double x() const { return c0 * x0 + quad(r_s); }
    double y() const { return c0 * y0 + quad(r_w); }

    void extend_basis() {
        // deterministic orthogonal direction: Gram-Schmidt a canonical vector
        const std::size_t n = r();
        for (std::size_t k = 0; k < dim; ++k) {
            cvec e(dim, cplx{0.0, 0.0});
            e[k] = 1.0;
            for (const auto& b : q) {
                const cplx c = inner(b, e);
                for (std::size_t i = 0; i < dim; ++i) e[i] -= c * b[i];
            }
            const double nn = std::sqrt(norm2(e));
            if (nn > 1e-6) {
                for (auto& z : e) z /= nn;
                q.push_back(std::move(e));
                break;
            }
        }
        if (r() == n) throw solver_error("solve_sdr: basis extension failed", 0.0);
        // grow coordinate vectors and A with zeros
        r_s.push_back(cplx{0.0, 0.0});
        r_w.push_back(cplx{0.0, 0.0});
        std::vector<cplx> a2((n + 1) * (n + 1), cplx{0.0, 0.0});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a2[i * (n + 1) + j] = a[i * n + j];
        a = std::move(a2);
    }
};

inline void orthonormal_span(const cvec& hs, const cvec& hw, FwState& st) {
    const double ns = std::sqrt(norm2(hs));
    if (ns <= 0.0) throw dimension_error("solve_sdr: zero strong channel");
    cvec q1(hs);
    for (auto& z : q1) z /= ns;
    st.q.push_back(q1);
    st.r_s.assign(1, cplx{ns, 0.0});

    const cplx proj = inner(q1, hw);
    cvec res(hw);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] -= proj * q1[i];
    const double nr = std::sqrt(norm2(res));
    if (nr > 1e-12 * std::max(1.0, std::sqrt(norm2(hw)))) {
        for (auto& z : res) z /= nr;
        st.q.push_back(std::move(res));
        st.r_s.push_back(cplx{0.0, 0.0});
        st.r_w.assign({proj, cplx{nr, 0.0}});
    } else {
        st.r_w.assign(1, proj);
    }
    st.a.assign(st.r() * st.r(), cplx{0.0, 0.0});
}

// Principal eigenpair of M = ax * r_s r_s^H + by * r_w r_w^H in span coords.
inline std::pair<double, cvec> span_principal(const FwState& st, double ax, double by) {
    const std::size_t n = st.r();
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m(i, j) = ax * st.r_s[i] * std::conj(st.r_s[j]) +
                      by * st.r_w[i] * std::conj(st.r_w[j]);
    const EigenDecomposition ed = hermitian_eig(HermitianMatrix(std::move(m)));
    return {ed.eigenvalues.front(), ed.column(0)};
}

struct FwOutcome {
    double objective = 0.0;
    double gap = 0.0;
    long iterations = 0;
    bool converged = false;
};

// Conditional-gradient ascent of the linearized objective over
// {W >= 0, Tr W = K}. The linear subproblem max Tr(SG) is solved by the
// extremal eigenvector of the (rank <= 2) gradient.
inline FwOutcome frank_wolfe(FwState& st, const SdrScalars& sc, const SdrConfig& cfg) {
    FwOutcome out;
    const double k = st.trace_budget;
    for (int it = 0; it < cfg.max_fw_iters; ++it) {
        out.iterations = it + 1;
        const double x = st.x();
        const double y = st.y();
        const double ax = sc.dphi_dx(x);
        const double by = sc.dphi_dy(y);

        auto [lam, u] = span_principal(st, ax, by);
        if (lam < 0.0 && st.dim > st.r()) {
            st.extend_basis();
            std::tie(lam, u) = span_principal(st, ax, by);
        }

        const double obj = sc.linearized(x, y);
        out.objective = obj;
        out.gap = k * lam - (ax * x + by * y);
        if (out.gap <= cfg.gap_tol * std::max(1.0, std::abs(obj))) {
            out.converged = true;
            return out;
        }

        // vertex S = K u u^H in span coordinates
        cplx us{0.0, 0.0}, uw{0.0, 0.0};
        for (std::size_t i = 0; i < st.r(); ++i) {
            us += std::conj(u[i]) * st.r_s[i];
            uw += std::conj(u[i]) * st.r_w[i];
        }
        const double xs = k * std::norm(us);
        const double ys = k * std::norm(uw);
        const double dx = xs - x;
        const double dy = ys - y;

        // exact line search: the directional derivative is decreasing in t
        auto deriv = [&](double t) {
            const double xt = x + t * dx;
            const double yt = y + t * dy;
            if (xt <= 0.0 || yt <= 0.0) return -std::numeric_limits<double>::infinity();
            return sc.dphi_dx(xt) * dx + sc.dphi_dy(yt) * dy;
        };
        double t = 1.0;
        if (deriv(1.0) < 0.0) {
            double lo = 0.0, hi = 1.0;
            for (int ls = 0; ls < cfg.line_search_iters; ++ls) {
                const double mid = 0.5 * (lo + hi);
                if (deriv(mid) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            t = 0.5 * (lo + hi);
        }
        if (t <= 0.0) {
            out.converged = true;
            return out;
        }

        st.c0 *= (1.0 - t);
        const std::size_t n = st.r();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                st.A(i, j) = (1.0 - t) * st.Aat(i, j) + t * k * u[i] * std::conj(u[j]);
    }
    const double x = st.x();
    const double y = st.y();
    out.objective = sc.linearized(x, y);
    return out;
}

} // namespace detail

// Linearized per-iteration objective of the relaxed phase problem, evaluated
// on explicit matrices (test and reference surface; the solver works on the
// equivalent scalar form).
inline double sdr_objective(const GramMatrix& w, const HermitianMatrix& f_strong,
                            const HermitianMatrix& f_weak, const PowerSplit& split,
                            const ScaCoefficients& sca, const QosSpec& qos,
                            const GramMatrix& taylor_point) {
    detail::SdrScalars sc = detail::make_scalars(split, sca, qos);
    sc.set_taylor_point(taylor_point.w.trace_product(f_weak));
    const double den = qos.sigma2 + sc.y_hat * sc.pi_pt;
    if (den <= 0.0) throw boundary_error("sdr_objective: nonpositive Taylor denominator");
    return sc.linearized(w.w.trace_product(f_strong), w.w.trace_product(f_weak));
}

// Unlinearized relaxed objective at W (same offset convention as above).
inline double sdr_objective_unlinearized(const GramMatrix& w, const HermitianMatrix& f_strong,
                                         const HermitianMatrix& f_weak, const PowerSplit& split,
                                         const ScaCoefficients& sca, const QosSpec& qos) {
    const detail::SdrScalars sc = detail::make_scalars(split, sca, qos);
    return sc.unlinearized(w.w.trace_product(f_strong), w.w.trace_product(f_weak));
}

// Spectral summary of a solved W; enough to reconstruct Phi without carrying
// the dense matrix around.
struct PhaseDesign {
    std::size_t dim = 0;
    double trace_budget = 0.0;
    std::vector<double> span_eigenvalues; // descending, eigenvalues in the channel span
    std::vector<cvec> span_vectors;       // matching unit eigenvectors (length dim)
    double iso = 0.0;                     // eigenvalue on the orthogonal complement
    double psi_strong = 0.0;              // effective gain of the returned Phi
    double psi_weak = 0.0;
    double relaxed_psi_strong = 0.0;      // Tr(W F), the SDR value
    double relaxed_psi_weak = 0.0;
    SdrDiagnostics diag;
};

struct SdrResult {
    GramMatrix w;
    double objective = 0.0;
    double gap = 0.0;
    long iterations = 0;
    bool converged = false;
};

namespace detail {

inline cvec principal_component(const HermitianMatrix& f) {
    const EigenDecomposition ed = hermitian_eig(f);
    const double lam = std::max(ed.eigenvalues.front(), 0.0);
    cvec h = ed.column(0);
    const double s = std::sqrt(lam);
    for (auto& z : h) z *= s;
    return h;
}

inline GramMatrix materialize_gram(const FwState& st, const HermitianMatrix& w0) {
    const std::size_t n = st.dim;
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = st.c0 * w0(i, j);
    const std::size_t r = st.r();
    for (std::size_t p = 0; p < r; ++p) {
        for (std::size_t qi = 0; qi < r; ++qi) {
            const cplx apq = st.Aat(p, qi);
            if (std::abs(apq) == 0.0) continue;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    m(i, j) += apq * st.q[p][i] * std::conj(st.q[qi][j]);
        }
    }
    return GramMatrix{HermitianMatrix(std::move(m)), st.trace_budget};
}

} // namespace detail

// General-matrix entry point: factors the rank-1 channel matrices and runs
// the span-form Frank-Wolfe from the supplied feasible initial point.
inline SdrResult solve_sdr(const HermitianMatrix& f_strong, const HermitianMatrix& f_weak,
                           const PowerSplit& split, const ScaCoefficients& sca,
                           const QosSpec& qos, const GramMatrix& init,
                           const SdrConfig& cfg = {}) {
    const cvec hs = detail::principal_component(f_strong);
    const cvec hw = detail::principal_component(f_weak);

    detail::FwState st;
    st.dim = init.w.dim();
    st.trace_budget = init.trace_budget;
    detail::orthonormal_span(hs, hw, st);
    st.x0 = init.w.trace_product(f_strong);
    st.y0 = init.w.trace_product(f_weak);

    detail::SdrScalars sc = detail::make_scalars(split, sca, qos);
    sc.set_taylor_point(st.y0);

    const detail::FwOutcome fw = detail::frank_wolfe(st, sc, cfg);

    SdrResult out;
    out.w = detail::materialize_gram(st, init.w);
    out.objective = fw.objective;
    out.gap = fw.gap;
    out.iterations = fw.iterations;
    out.converged = fw.converged;
    return out;
}

// Full phase design: outer Taylor-point iteration on What, then rank-1-or-full
// reconstruction Phi = U diag(sqrt(Sigma)). Works entirely in the span form.
inline PhaseDesign design_phase_compact(const cvec& h_strong, const cvec& h_weak,
                                        const PowerSplit& split, const ScaCoefficients& sca,
                                        const QosSpec& qos, const SdrConfig& cfg = {}) {
    const std::size_t k = h_strong.size();
    if (h_weak.size() != k) throw dimension_error("design_phase: channel size mismatch");

    detail::FwState st;
    st.dim = k;
    st.trace_budget = static_cast<double>(k);
    detail::orthonormal_span(h_strong, h_weak, st);
    st.x0 = norm2(h_strong); // W0 = (K/dim) I = I
    st.y0 = norm2(h_weak);

    detail::SdrScalars sc = detail::make_scalars(split, sca, qos);

    PhaseDesign out;
    out.dim = k;
    out.trace_budget = st.trace_budget;

    double prev_surr = -std::numeric_limits<double>::infinity();
    bool outer_converged = false;
    for (int outer = 0; outer < cfg.max_sca_iters; ++outer) {
        sc.set_taylor_point(st.y());
        const detail::FwOutcome fw = detail::frank_wolfe(st, sc, cfg);
        out.diag.fw_iterations += fw.iterations;
        out.diag.gap = fw.gap;
        out.diag.sca_iterations = outer + 1;
        const double surr = sc.unlinearized(st.x(), st.y());
        out.diag.surrogate = surr;
        const bool small_improvement =
            surr - prev_surr <= cfg.sca_tol * std::max(1.0, std::abs(surr));
        prev_surr = surr;
        if (fw.converged && small_improvement && outer > 0) {
            outer_converged = true;
            break;
        }
    }
    out.diag.converged = outer_converged;

    out.relaxed_psi_strong = st.x();
    out.relaxed_psi_weak = st.y();

    // spectral form of W: span block (c0 I_r + A), complement eigenvalue c0
    const std::size_t r = st.r();
    CMatrix span(r, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j)
            span(i, j) = st.Aat(i, j) + (i == j ? cplx{st.c0, 0.0} : cplx{0.0, 0.0});
    const EigenDecomposition ed = hermitian_eig(HermitianMatrix(std::move(span)));
    out.iso = st.c0;
    out.span_eigenvalues = ed.eigenvalues;
    for (std::size_t c = 0; c < r; ++c) {
        const cvec u = ed.column(c);
        cvec v(k, cplx{0.0, 0.0});
        for (std::size_t b = 0; b < r; ++b)
            for (std::size_t i = 0; i < k; ++i) v[i] += u[b] * st.q[b][i];
        out.span_vectors.push_back(std::move(v));
    }

    // rank at the 1e-6 relative eigenvalue threshold
    const double lam_max = std::max(out.span_eigenvalues.front(), out.iso);
    int rank = 0;
    for (double lam : out.span_eigenvalues)
        if (lam > 1e-6 * lam_max) ++rank;
    if (out.iso > 1e-6 * lam_max) rank += static_cast<int>(k - r);
    out.diag.rank = rank;

    // Effective gains: the full reconstruction Phi = U diag(sqrt(Sigma))
    // reproduces Tr(W F) exactly; the rank-1 truncation Phi1 = sqrt(K) u1 is
    // evaluated as well and the better split (by true sum rate) is kept.
    const double psi_s_full = st.x();
    const double psi_w_full = st.y();
    const cvec& u1 = out.span_vectors.front();
    const double psi_s_r1 = st.trace_budget * std::norm(inner(u1, h_strong));
    const double psi_w_r1 = st.trace_budget * std::norm(inner(u1, h_weak));

    auto true_se = [&](double ps, double pw) {
        const SinrPair g = sinr_pair(ps, pw, split, qos);
        const auto [ri, rj] = rates(g.strong, g.weak);
        return ri + rj;
    };
    if (true_se(psi_s_r1, psi_w_r1) > true_se(psi_s_full, psi_w_full)) {
        out.diag.used_rank1 = true;
        out.psi_strong = psi_s_r1;
        out.psi_weak = psi_w_r1;
    } else {
        out.psi_strong = psi_s_full;
        out.psi_weak = psi_w_full;
    }
    return out;
}

// Materialize the K x K phase matrix from the spectral summary.
inline PhaseMatrix materialize_phase(const PhaseDesign& d) {
    const std::size_t k = d.dim;
    CMatrix phi(k, k);
    if (d.diag.used_rank1) {
        const double s = std::sqrt(d.trace_budget);
        for (std::size_t i = 0; i < k; ++i) phi(i, 0) = s * d.span_vectors.front()[i];
        return PhaseMatrix{std::move(phi)};
    }

    // columns: span eigenvectors first (descending), then an orthonormal
    // complement at sqrt(iso)
    std::size_t col = 0;
    for (std::size_t c = 0; c < d.span_vectors.size(); ++c, ++col) {
        const double s = std::sqrt(std::max(d.span_eigenvalues[c], 0.0));
        for (std::size_t i = 0; i < k; ++i) phi(i, col) = s * d.span_vectors[c][i];
    }
    const double siso = std::sqrt(std::max(d.iso, 0.0));
    std::vector<cvec> basis = d.span_vectors;
    for (std::size_t e = 0; e < k && col < k; ++e) {
        cvec v(k, cplx{0.0, 0.0});
        v[e] = 1.0;
        for (const auto& b : basis) {
            const cplx c = inner(b, v);
            for (std::size_t i = 0; i < k; ++i) v[i] -= c * b[i];
        }
        const double nn = std::sqrt(norm2(v));
        if (nn < 1e-8) continue;
        for (auto& z : v) z /= nn;
        for (std::size_t i = 0; i < k; ++i) phi(i, col) = siso * v[i];
        basis.push_back(std::move(v));
        ++col;
    }
    if (col != k) throw solver_error("materialize_phase: complement construction failed", 0.0);
    return PhaseMatrix{std::move(phi)};
}

// Matrix-level convenience entry matching the channel-matrix contract.
inline PhaseDesign design_phase(const HermitianMatrix& f_strong, const HermitianMatrix& f_weak,
                                const PowerSplit& split, const ScaCoefficients& sca,
                                const QosSpec& qos, const SdrConfig& cfg = {}) {
    return design_phase_compact(detail::principal_component(f_strong),
                                detail::principal_component(f_weak), split, sca, qos, cfg);
}

} // namespace tbdris
