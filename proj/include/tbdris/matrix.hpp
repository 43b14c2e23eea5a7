// SPDX-License-Identifier: Apache-2.0
//
// tbdris - transmissive beyond-diagonal RIS link optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tbdris {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

// Shared numeric tolerances. Solver and tests read from the same record.
struct Tolerances {
    double hermitian_symmetry = 1e-12; // construction check on Hermitian input
    double eig_reconstruct = 1e-8;     // ||U S U^H - A||_F / ||A||_F
    double eig_orthonormal = 1e-8;     // ||U^H U - I||_F
    double psd_min_eig = -1e-8;        // smallest admissible eigenvalue of a Gram matrix
    double trace_rel = 1e-6;           // |Tr(W) - K| / K
    double psd_idempotent = 1e-10;
};

inline const Tolerances& default_tolerances() {
    static const Tolerances tol{};
    return tol;
}

class dimension_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class solver_error : public std::runtime_error {
public:
    solver_error(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// Dense complex matrix, row-major. std::complex<double> stores re/im
// adjacently, so the flat buffer is interleaved real/imag pairs and can be
// exchanged between modules as raw doubles.
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, cplx{0.0, 0.0}) {}

    static CMatrix identity(std::size_t n) {
        CMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const cvec& data() const { return data_; }
    cvec& data() { return data_; }

    double frobenius_norm() const {
        double s = 0.0;
        for (const auto& z : data_) s += std::norm(z);
        return std::sqrt(s);
    }

    // y = A^H x
    cvec adjoint_times(const cvec& x) const {
        if (x.size() != rows_) throw dimension_error("adjoint_times: size mismatch");
        cvec y(cols_, cplx{0.0, 0.0});
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c)
                y[c] += std::conj((*this)(r, c)) * x[r];
        return y;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    cvec data_;
};

// Hermitian matrix with conjugate symmetry validated on construction.
class HermitianMatrix {
public:
    HermitianMatrix() = default;

    explicit HermitianMatrix(CMatrix m, const Tolerances& tol = default_tolerances())
        : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw dimension_error("HermitianMatrix: not square");
        const std::size_t n = m_.rows();
        double max_abs = 1.0;
        for (const auto& z : m_.data()) max_abs = std::max(max_abs, std::abs(z));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i; j < n; ++j) {
                const cplx d = m_(i, j) - std::conj(m_(j, i));
                if (std::abs(d) > tol.hermitian_symmetry * max_abs)
                    throw dimension_error("HermitianMatrix: conjugate symmetry violated");
            }
        }
        // exact symmetrization so downstream arithmetic sees a clean matrix
        for (std::size_t i = 0; i < n; ++i) {
            m_(i, i) = cplx{m_(i, i).real(), 0.0};
            for (std::size_t j = i + 1; j < n; ++j) {
                const cplx avg = 0.5 * (m_(i, j) + std::conj(m_(j, i)));
                m_(i, j) = avg;
                m_(j, i) = std::conj(avg);
            }
        }
    }

    static HermitianMatrix zero(std::size_t n) { return HermitianMatrix(CMatrix(n, n)); }

    static HermitianMatrix identity(std::size_t n) {
        return HermitianMatrix(CMatrix::identity(n));
    }

    // F = h h^H (rank <= 1, PSD, Tr = ||h||^2)
    static HermitianMatrix outer(const cvec& h) {
        CMatrix m(h.size(), h.size());
        for (std::size_t i = 0; i < h.size(); ++i)
            for (std::size_t j = 0; j < h.size(); ++j)
                m(i, j) = h[i] * std::conj(h[j]);
        return HermitianMatrix(std::move(m));
    }

    std::size_t dim() const { return m_.rows(); }
    const CMatrix& matrix() const { return m_; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i).real();
        return t;
    }

    double frobenius_norm() const { return m_.frobenius_norm(); }

    // Tr(A B) for Hermitian A, B; real by symmetry.
    double trace_product(const HermitianMatrix& b) const {
        if (b.dim() != dim()) throw dimension_error("trace_product: size mismatch");
        double t = 0.0;
        for (std::size_t i = 0; i < dim(); ++i)
            for (std::size_t j = 0; j < dim(); ++j)
                t += (m_(i, j) * b(j, i)).real();
        return t;
    }

    // x^H A x, real for Hermitian A.
    double quadratic_form(const cvec& x) const {
        if (x.size() != dim()) throw dimension_error("quadratic_form: size mismatch");
        cplx s{0.0, 0.0};
        for (std::size_t i = 0; i < dim(); ++i) {
            cplx row{0.0, 0.0};
            for (std::size_t j = 0; j < dim(); ++j) row += m_(i, j) * x[j];
            s += std::conj(x[i]) * row;
        }
        return s.real();
    }

private:
    CMatrix m_;
};

// Kronecker product of two vectors:
// result[(m * len(b)) + n] = a[m] * b[n]
inline cvec kron(const cvec& a, const cvec& b) {
    cvec out(a.size() * b.size());
    std::size_t k = 0;
    for (const auto& am : a)
        for (const auto& bn : b) out[k++] = am * bn;
    return out;
}

inline double norm2(const cvec& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return s;
}

inline cplx inner(const cvec& a, const cvec& b) {
    if (a.size() != b.size()) throw dimension_error("inner: size mismatch");
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

} // namespace tbdris
