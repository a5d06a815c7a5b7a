#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "tvu/common.hpp"

namespace tvu {

/// Row-major dense float64 matrix. Deliberately minimal: the solvers in this
/// library only need matvec, small products, and small factorizations.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vector data;  // rows*cols, row-major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool finite() const { return all_finite(data); }
};

inline Vector matvec(const DenseMatrix& m, const Vector& x) {
    require(x.size() == m.cols, "matvec: dimension mismatch");
    Vector y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        const double* row = &m.data[i * m.cols];
        for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

/// y = M^T x
inline Vector matvec_t(const DenseMatrix& m, const Vector& x) {
    require(x.size() == m.rows, "matvec_t: dimension mismatch");
    Vector y(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = &m.data[i * m.cols];
        const double xi = x[i];
        for (std::size_t j = 0; j < m.cols; ++j) y[j] += row[j] * xi;
    }
    return y;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.cols == b.rows, "matmul: dimension mismatch");
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t l = 0; l < a.cols; ++l) {
            const double ail = a(i, l);
            if (ail == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += ail * b(l, j);
        }
    return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

/// A^T A (cols x cols), the Gram matrix.
inline DenseMatrix gram(const DenseMatrix& a) {
    DenseMatrix g(a.cols, a.cols);
    for (std::size_t l = 0; l < a.rows; ++l) {
        const double* row = &a.data[l * a.cols];
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double ri = row[i];
            if (ri == 0.0) continue;
            for (std::size_t j = i; j < a.cols; ++j) g(i, j) += ri * row[j];
        }
    }
    for (std::size_t i = 0; i < a.cols; ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

/// In-place Cholesky factorization of an SPD matrix; lower factor in the
/// lower triangle. Throws if a pivot collapses.
inline void cholesky(DenseMatrix& a) {
    require(a.rows == a.cols, "cholesky: matrix not square");
    const std::size_t n = a.rows;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t l = 0; l < j; ++l) d -= a(j, l) * a(j, l);
        if (d <= 0.0 || !std::isfinite(d))
            throw std::runtime_error("cholesky: matrix not positive definite");
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t l = 0; l < j; ++l) s -= a(i, l) * a(j, l);
            a(i, j) = s / ljj;
        }
    }
}

/// Solve (L L^T) x = b given the factor from cholesky(); b is overwritten.
inline void cholesky_solve(const DenseMatrix& chol, Vector& b) {
    const std::size_t n = chol.rows;
    require(b.size() == n, "cholesky_solve: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < i; ++j) s -= chol(i, j) * b[j];
        b[i] = s / chol(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= chol(j, ii) * b[j];
        b[ii] = s / chol(ii, ii);
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (ascending) and the matrix of column eigenvectors.
struct SymEig {
    Vector values;
    DenseMatrix vectors;  // column j is the eigenvector of values[j]
};

inline SymEig sym_eig(DenseMatrix a) {
    require(a.rows == a.cols, "sym_eig: matrix not square");
    const std::size_t n = a.rows;
    DenseMatrix v = DenseMatrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t l = 0; l < n; ++l) {
                    const double alp = a(l, p), alq = a(l, q);
                    a(l, p) = c * alp - s * alq;
                    a(l, q) = s * alp + c * alq;
                }
                for (std::size_t l = 0; l < n; ++l) {
                    const double apl = a(p, l), aql = a(q, l);
                    a(p, l) = c * apl - s * aql;
                    a(q, l) = s * apl + c * aql;
                }
                for (std::size_t l = 0; l < n; ++l) {
                    const double vlp = v(l, p), vlq = v(l, q);
                    v(l, p) = c * vlp - s * vlq;
                    v(l, q) = s * vlp + c * vlq;
                }
            }
        }
    }
    SymEig out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return out.values[i] < out.values[j]; });
    Vector sorted(n);
    DenseMatrix vs(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        sorted[j] = out.values[order[j]];
        for (std::size_t i = 0; i < n; ++i) vs(i, j) = v(i, order[j]);
    }
    out.values = std::move(sorted);
    out.vectors = std::move(vs);
    return out;
}

/// Moore-Penrose pseudo-inverse through the eigendecomposition of the small
/// Gram matrix: A+ = A^T (A A^T)+ when rows <= cols, (A^T A)+ A^T otherwise.
inline DenseMatrix pinv(const DenseMatrix& a) {
    const bool wide = a.rows <= a.cols;
    const DenseMatrix small_gram = wide ? gram(transpose(a)) : gram(a);
    SymEig eig = sym_eig(small_gram);
    const double lam_max = eig.values.empty() ? 0.0 : eig.values.back();
    const double cutoff = lam_max * static_cast<double>(std::max(a.rows, a.cols)) * 1e-14;
    const std::size_t n = small_gram.rows;
    // gram_pinv = V diag(1/lam, lam > cutoff) V^T
    DenseMatrix gram_pinv(n, n);
    for (std::size_t l = 0; l < n; ++l) {
        if (eig.values[l] <= cutoff) continue;
        const double inv = 1.0 / eig.values[l];
        for (std::size_t i = 0; i < n; ++i) {
            const double vil = eig.vectors(i, l) * inv;
            if (vil == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) gram_pinv(i, j) += vil * eig.vectors(j, l);
        }
    }
    return wide ? matmul(transpose(a), gram_pinv) : matmul(gram_pinv, transpose(a));
}

}  // namespace tvu
