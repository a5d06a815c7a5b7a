#pragma once

#include <cmath>
#include <cstdint>

#include "tvu/common.hpp"
#include "tvu/dense.hpp"
#include "tvu/parallel.hpp"
#include "tvu/prng.hpp"

namespace tvu {

/*
 * The four structured operators on R^k used throughout:
 *
 *   D  (k-1 x k)  first-order difference,  (Du)_i = u_{i+1} - u_i
 *   Dt (k x k)    difference keeping the first sample, invertible
 *   L  (k x k)    running sum, inverse of Dt
 *   R  (k x k)    identity with the (0,0) entry zeroed
 *
 * Matrix-vector products with L and Dt are O(k) cumulative sums and
 * differences; the dense forms exist for tests and small factorizations.
 */
enum class OperatorKind { D, Dtilde, L, R };

inline DenseMatrix make_operator(OperatorKind kind, std::size_t k) {
    require(k >= 2, "make_operator: dimension must be at least 2");
    switch (kind) {
        case OperatorKind::D: {
            DenseMatrix m(k - 1, k);
            for (std::size_t i = 0; i + 1 < k; ++i) {
                m(i, i) = -1.0;
                m(i, i + 1) = 1.0;
            }
            return m;
        }
        case OperatorKind::Dtilde: {
            DenseMatrix m(k, k);
            m(0, 0) = 1.0;
            for (std::size_t i = 1; i < k; ++i) {
                m(i, i - 1) = -1.0;
                m(i, i) = 1.0;
            }
            return m;
        }
        case OperatorKind::L: {
            DenseMatrix m(k, k);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j <= i; ++j) m(i, j) = 1.0;
            return m;
        }
        case OperatorKind::R: {
            DenseMatrix m = DenseMatrix::identity(k);
            m(0, 0) = 0.0;
            return m;
        }
    }
    throw std::invalid_argument("make_operator: unknown kind");
}

/// y = L x, cumulative sum.
inline Vector apply_L(const Vector& x) {
    Vector y(x.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += x[i];
        y[i] = acc;
    }
    return y;
}

/// y = L^T x, suffix sum.
inline Vector apply_Lt(const Vector& x) {
    Vector y(x.size());
    double acc = 0.0;
    for (std::size_t i = x.size(); i-- > 0;) {
        acc += x[i];
        y[i] = acc;
    }
    return y;
}

/// z = Dt u: z_0 = u_0, z_i = u_i - u_{i-1}.
inline Vector apply_Dtilde(const Vector& u) {
    Vector z(u.size());
    for (std::size_t i = u.size(); i-- > 1;) z[i] = u[i] - u[i - 1];
    if (!u.empty()) z[0] = u[0];
    return z;
}

/// y = Dt^T x: y_i = x_i - x_{i+1}, y_{k-1} = x_{k-1}.
inline Vector apply_Dtilde_t(const Vector& x) {
    Vector y(x.size());
    if (x.empty()) return y;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) y[i] = x[i] - x[i + 1];
    y[x.size() - 1] = x[x.size() - 1];
    return y;
}

/// AL by suffix sums along rows: (AL)_{ij} = sum_{l >= j} A_{il}. Every
/// consumer of the synthesis dictionary builds it through this one routine so
/// the entries agree bit for bit.
inline DenseMatrix times_L(const DenseMatrix& a) {
    DenseMatrix al(a.rows, a.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = a.cols; j-- > 0;) {
            acc += a(i, j);
            al(i, j) = acc;
        }
    }
    return al;
}

/// Closed-form singular values of the running-sum operator L on R^k.
struct SpectralReport {
    std::size_t k = 0;
    Vector singular_values;  // ascending, all positive
    double operator_norm = 0.0;
};

/// sigma_l = 1 / (2 cos(pi l / (2k+1))), l = 1..k; the norm is sigma_k,
/// asymptotically (2k+1)/pi.
inline SpectralReport singular_values_L(std::size_t k) {
    require(k >= 1, "singular_values_L: dimension must be at least 1");
    SpectralReport rep;
    rep.k = k;
    rep.singular_values.resize(k);
    const double denom = 2.0 * static_cast<double>(k) + 1.0;
    for (std::size_t l = 1; l <= k; ++l) {
        rep.singular_values[l - 1] =
            1.0 / (2.0 * std::cos(M_PI * static_cast<double>(l) / denom));
    }
    rep.operator_norm = rep.singular_values.back();
    return rep;
}

/// Largest singular value by power iteration on M^T M, relative-change
/// stopping rule. Deterministic: the start vector comes from a fixed seed.
inline double operator_norm(const DenseMatrix& m, double tol = 1e-10,
                            std::size_t max_iter = 10000) {
    require(tol > 0.0, "operator_norm: tolerance must be positive");
    require(max_iter >= 1, "operator_norm: max_iter must be at least 1");
    bool nonzero = false;
    for (double v : m.data) {
        if (v != 0.0) {
            nonzero = true;
            break;
        }
    }
    if (!nonzero) throw std::domain_error("operator_norm: zero matrix");

    Xoshiro256pp gen(0x5eedULL);
    Vector v(m.cols);
    for (auto& x : v) x = gen.next_gaussian();
    double nv = norm2(v);
    for (auto& x : v) x /= nv;

    double sigma_prev = -1.0;
    double sigma = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        Vector w = matvec(m, v);
        sigma = norm2(w);  // ||Mv|| with ||v|| = 1
        Vector z = matvec_t(m, w);
        const double nz = norm2(z);
        if (nz == 0.0)
            throw std::domain_error("operator_norm: iterate vanished (degenerate matrix)");
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = z[i] / nz;
        if (sigma_prev >= 0.0 && std::abs(sigma - sigma_prev) <= tol * sigma) return sigma;
        sigma_prev = sigma;
    }
    throw ConvergenceError("operator_norm: power iteration did not converge", sigma);
}

/// Monte-Carlo study of ||AL||^2 / ||A||^2 for Gaussian A.
struct RatioReport {
    std::size_t k = 0;
    double mean = 0.0;
    double q10 = 0.0;
    double q90 = 0.0;
    double lower_bound = 0.0;  // (2k+1) / (4 pi^2)
    double conjecture = 0.0;   // (2k+1)^2 / (16 pi^2)
    std::vector<double> ratios;  // per trial, in trial order
};

/// Samples A with i.i.d. standard normal entries (row count thin relative to
/// k -- the regime where the conjectured mean is tight over the studied
/// range; the ratio itself is invariant to the entries' scale) and measures
/// the spectral-norm ratio per trial. Trials use independent generators
/// seeded seed + trial so any worker layout reduces identically.
inline RatioReport ratio_experiment(std::size_t k, std::size_t trials,
                                    std::uint64_t seed, unsigned threads = 1) {
    require(k >= 2, "ratio_experiment: dimension must be at least 2");
    require(trials >= 1, "ratio_experiment: need at least one trial");
    const std::size_t m_rows =
        static_cast<std::size_t>(std::max<long long>(1, static_cast<long long>(k / 10) - 1));

    RatioReport rep;
    rep.k = k;
    const double two_k1 = 2.0 * static_cast<double>(k) + 1.0;
    rep.lower_bound = two_k1 / (4.0 * M_PI * M_PI);
    rep.conjecture = two_k1 * two_k1 / (16.0 * M_PI * M_PI);
    rep.ratios.resize(trials);

    for_each_block(trials, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            Xoshiro256pp gen(seed + t);
            DenseMatrix a(m_rows, k);
            for (auto& x : a.data) x = gen.next_gaussian();
            DenseMatrix al(m_rows, k);
            for (std::size_t i = 0; i < m_rows; ++i) {
                double acc = 0.0;
                for (std::size_t j = k; j-- > 0;) {
                    acc += a(i, j);  // (AL)_{ij} = sum_{l >= j} A_{il}
                    al(i, j) = acc;
                }
            }
            const double na = operator_norm(a);
            const double nal = operator_norm(al);
            rep.ratios[t] = (nal / na) * (nal / na);
        }
    });

    std::vector<double> sorted = rep.ratios;
    std::sort(sorted.begin(), sorted.end());
    rep.mean = mean(rep.ratios);
    rep.q10 = quantile_nearest_rank(sorted, 0.1);
    rep.q90 = quantile_nearest_rank(sorted, 0.9);
    return rep;
}

}  // namespace tvu
