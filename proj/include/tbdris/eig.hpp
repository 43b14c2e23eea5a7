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
#include <numeric>

#include "matrix.hpp"

namespace tbdris {

struct EigenDecomposition {
    std::vector<double> eigenvalues; // sorted descending
    CMatrix eigenvectors;            // columns, orthonormal

    cvec column(std::size_t c) const {
        cvec v(eigenvectors.rows());
        for (std::size_t r = 0; r < v.size(); ++r) v[r] = eigenvectors(r, c);
        return v;
    }
};

namespace detail {

inline double offdiag_norm(const CMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

} // namespace detail

// Cyclic Jacobi eigensolver for complex Hermitian matrices. Each rotation
// zeroes one off-diagonal pair; sweeps repeat until the off-diagonal mass is
// negligible against ||A||_F. K <= 144 here, so O(K^3) per sweep is fine.
inline EigenDecomposition hermitian_eig(const HermitianMatrix& herm,
                                        int max_sweeps = 100) {
    const std::size_t n = herm.dim();
    CMatrix a = herm.matrix();
    CMatrix v = CMatrix::identity(n);

    const double scale = std::max(a.frobenius_norm(), 1e-300);
    const double stop = 1e-14 * scale;

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (detail::offdiag_norm(a) <= stop) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double r = std::abs(apq);
                if (r <= 1e-300) continue;
                const cplx phase = apq / r; // e^{i delta}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * r);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // J: J[p][p]=c, J[p][q]=s, J[q][p]=-s*conj(phase), J[q][q]=c*conj(phase)
                // A <- J^H A J, V <- V J
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx akp = a(k, p);
                    const cplx akq = a(k, q);
                    a(k, p) = c * akp - s * std::conj(phase) * akq;
                    a(k, q) = s * akp + c * std::conj(phase) * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx apk = a(p, k);
                    const cplx aqk = a(q, k);
                    a(p, k) = c * apk - s * phase * aqk;
                    a(q, k) = s * apk + c * phase * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx vkp = v(k, p);
                    const cplx vkq = v(k, q);
                    v(k, p) = c * vkp - s * std::conj(phase) * vkq;
                    v(k, q) = s * vkp + c * std::conj(phase) * vkq;
                }
            }
        }
    }

    const double residual = detail::offdiag_norm(a);
    if (residual > 1e-10 * scale)
        throw solver_error("hermitian_eig: Jacobi sweeps did not converge", residual);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i).real();
    std::sort(order.begin(), order.end(),
              [&diag](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = CMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        out.eigenvalues[c] = diag[order[c]];
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, c) = v(r, order[c]);
    }
    return out;
}

// Nearest PSD matrix in Frobenius norm: clamp negative eigenvalues to zero.
inline HermitianMatrix psd_project(const HermitianMatrix& a) {
    const EigenDecomposition ed = hermitian_eig(a);
    const std::size_t n = a.dim();
    CMatrix out(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const double lam = std::max(ed.eigenvalues[c], 0.0);
        if (lam == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx ui = ed.eigenvectors(i, c);
            for (std::size_t j = 0; j < n; ++j)
                out(i, j) += lam * ui * std::conj(ed.eigenvectors(j, c));
        }
    }
    return HermitianMatrix(std::move(out));
}

} // namespace tbdris
