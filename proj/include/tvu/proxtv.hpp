#pragma once

#include <cmath>
#include <cstdint>

#include "tvu/common.hpp"
#include "tvu/dense.hpp"
#include "tvu/operators.hpp"

namespace tvu {

/*
 * Exact 1D TV proximal operator and its weak Jacobians.
 *
 * The prox solves, for mu >= 0,
 *
 *      u* = argmin_u  1/2 ||y - u||^2 + mu * sum_i |u_{i+1} - u_i|
 *
 * by the direct taut-string construction (dual tube of half-width mu around
 * the running sums, linearized majorant/minorant candidates). Worst case
 * O(k^2), O(k) on all practical inputs.
 *
 * In jump coordinates z = Dt u the solution is piecewise constant with a
 * small support S = {0} u { i >= 1 : z_i != 0 }. The weak Jacobians of the
 * prox with respect to its input and threshold depend only on that support
 * and the jump signs:
 *
 *      J_x  = L_S (L_S^T L_S)^{-1} L_S^T          (projection, symmetric)
 *      J_mu = -L_S (L_S^T L_S)^{-1} sign(z)_S     (offset coordinate: 0)
 *
 * where L_S collects the running-sum columns indexed by S. The Gram matrix
 * has closed-form entries (L_S^T L_S)_{ab} = k - max(p_a, p_b) for 0-based
 * column positions p, so nothing beyond an |S| x |S| Cholesky is ever built.
 */

/// Absolute tolerance on |z_i| when extracting the jump support. The taut
/// string merges segments exactly, so ties at the tolerance are off-support.
inline constexpr double kSupportTol = 1e-12;

struct SoftThresholdGrad {
    double d_t = 0.0;    // in {0, 1}
    double d_tau = 0.0;  // in {-1, 0, +1}, zero exactly when d_t is
};

struct SoftThresholdResult {
    double value = 0.0;
    SoftThresholdGrad grad;
};

/// ST(t, tau) = sign(t) (|t| - tau)_+ with the output-based weak derivatives
/// d/dt = 1{|z|>0}, d/dtau = -sign(z) 1{|z|>0}.
inline SoftThresholdResult soft_threshold(double t, double tau) {
    if (tau < 0.0) throw std::domain_error("soft_threshold: negative threshold");
    SoftThresholdResult r;
    const double mag = std::abs(t) - tau;
    if (mag > 0.0) {
        r.value = t >= 0.0 ? mag : -mag;
        r.grad.d_t = 1.0;
        r.grad.d_tau = t >= 0.0 ? -1.0 : 1.0;
    }
    return r;
}

struct ProxResult {
    Vector u;                          // prox output
    std::vector<std::uint8_t> support;  // mask over z = Dt u; support[0] always set
    std::vector<std::int8_t> signs;     // sign(z_i) on support, 0 elsewhere and at 0
};

namespace detail {

/// Condat-style direct taut-string scan, 0-based. lam > 0, n >= 1.
inline void taut_string(const double* y, std::size_t n, double lam, double* x) {
    std::size_t k = 0, k0 = 0, km = 0, kp = 0;
    double vmin = y[0] - lam, vmax = y[0] + lam;
    double umin = lam, umax = -lam;
    for (;;) {
        if (k == n - 1) {  // single point left after a restart
            x[k] = vmin + umin;
            return;
        }
        while (k < n - 1) {
            const double ynext = y[k + 1];
            if (ynext + umin < vmin - lam) {
                // minorant broken: the string bends down at the last floor touch
                for (std::size_t i = k0; i <= km; ++i) x[i] = vmin;
                k = k0 = km = kp = km + 1;
                vmin = y[k];
                vmax = y[k] + 2.0 * lam;
                umin = lam;
                umax = -lam;
            } else if (ynext + umax > vmax + lam) {
                // majorant broken: bend up at the last ceiling touch
                for (std::size_t i = k0; i <= kp; ++i) x[i] = vmax;
                k = k0 = km = kp = kp + 1;
                vmin = y[k] - 2.0 * lam;
                vmax = y[k];
                umin = lam;
                umax = -lam;
            } else {
                ++k;
                umin += y[k] - vmin;
                umax += y[k] - vmax;
                if (umin >= lam) {
                    vmin += (umin - lam) / static_cast<double>(k - k0 + 1);
                    umin = lam;
                    km = k;
                }
                if (umax <= -lam) {
                    vmax += (umax + lam) / static_cast<double>(k - k0 + 1);
                    umax = -lam;
                    kp = k;
                }
            }
        }
        // end of data: decide how the final segment closes
        if (umin < 0.0) {
            for (std::size_t i = k0; i <= km; ++i) x[i] = vmin;
            k = k0 = km = km + 1;
            if (kp < k0) kp = k0;  // ceiling touch cannot precede the new segment
            vmin = y[k];
            umin = lam;
            umax = y[k] + lam - vmax;
        } else if (umax > 0.0) {
            for (std::size_t i = k0; i <= kp; ++i) x[i] = vmax;
            k = k0 = kp = kp + 1;
            if (km < k0) km = k0;
            vmax = y[k];
            umax = -lam;
            umin = y[k] - lam - vmin;
        } else {
            const double v = vmin + umin / static_cast<double>(k - k0 + 1);
            for (std::size_t i = k0; i < n; ++i) x[i] = v;
            return;
        }
    }
}

/// Fills support/signs from jump coordinates. The offset coordinate is always
/// on-support with sign entry 0: it is never thresholded, and the threshold
/// Jacobian must not move it.
inline void fill_support(const Vector& z, ProxResult& res) {
    const std::size_t k = z.size();
    res.support.assign(k, 0);
    res.signs.assign(k, 0);
    res.support[0] = 1;
    for (std::size_t i = 1; i < k; ++i) {
        if (std::abs(z[i]) > kSupportTol) {
            res.support[i] = 1;
            res.signs[i] = z[i] > 0.0 ? 1 : -1;
        }
    }
}

}  // namespace detail

inline ProxResult prox_tv_exact(const Vector& y, double mu) {
    if (mu < 0.0) throw std::domain_error("prox_tv_exact: negative regularization");
    require(!y.empty(), "prox_tv_exact: empty input");
    if (!all_finite(y)) throw std::domain_error("prox_tv_exact: non-finite input");

    ProxResult res;
    res.u.resize(y.size());
    if (mu == 0.0 || y.size() == 1) {
        res.u = y;
    } else {
        detail::taut_string(y.data(), y.size(), mu, res.u.data());
    }
    detail::fill_support(apply_Dtilde(res.u), res);
    return res;
}

namespace detail {

/// Solve and expansion helpers restricted to the support columns of L.
struct SupportOps {
    std::size_t k = 0;
    std::vector<std::size_t> pos;  // ascending support positions, pos[0] == 0
    DenseMatrix chol;              // Cholesky factor of L_S^T L_S

    explicit SupportOps(const ProxResult& res) : k(res.support.size()) {
        require(k > 0 && res.support[0], "prox jacobian: malformed support");
        for (std::size_t i = 0; i < k; ++i)
            if (res.support[i]) pos.push_back(i);
        const std::size_t s = pos.size();
        chol = DenseMatrix(s, s);
        for (std::size_t a = 0; a < s; ++a)
            for (std::size_t b = 0; b < s; ++b)
                chol(a, b) = static_cast<double>(k - std::max(pos[a], pos[b]));
        cholesky(chol);
    }

    // a = L_S^T g, suffix sums of g sampled at the support positions
    Vector restrict_lt(const Vector& g) const {
        Vector suffix = apply_Lt(g);
        Vector a(pos.size());
        for (std::size_t j = 0; j < pos.size(); ++j) a[j] = suffix[pos[j]];
        return a;
    }

    // out = L_S w, cumulative expansion of the support columns
    Vector expand_l(const Vector& w) const {
        Vector out(k, 0.0);
        double acc = 0.0;
        std::size_t j = 0;
        for (std::size_t i = 0; i < k; ++i) {
            while (j < pos.size() && pos[j] == i) acc += w[j++];
            out[i] = acc;
        }
        return out;
    }

    Vector apply_x(const Vector& g) const {
        Vector w = restrict_lt(g);
        cholesky_solve(chol, w);
        return expand_l(w);
    }

    Vector mu_vector(const ProxResult& res) const {
        Vector s(pos.size());
        for (std::size_t j = 0; j < pos.size(); ++j)
            s[j] = static_cast<double>(res.signs[pos[j]]);
        cholesky_solve(chol, s);
        Vector out = expand_l(s);
        for (auto& v : out) v = -v;
        return out;
    }
};

}  // namespace detail

/// J_x g without materializing the k x k projection; needs only the mask.
inline Vector prox_tv_jacobian_x_apply(const ProxResult& res, const Vector& g) {
    require(g.size() == res.support.size(), "jacobian apply: dimension mismatch");
    return detail::SupportOps(res).apply_x(g);
}

/// Dense weak Jacobian with respect to the prox input.
inline DenseMatrix prox_tv_jacobian_x(const ProxResult& res) {
    detail::SupportOps ops(res);
    const std::size_t k = ops.k;
    DenseMatrix j(k, k);
    Vector basis(k, 0.0);
    for (std::size_t col = 0; col < k; ++col) {
        basis[col] = 1.0;
        Vector jc = ops.apply_x(basis);
        basis[col] = 0.0;
        for (std::size_t row = 0; row < k; ++row) j(row, col) = jc[row];
    }
    return j;
}

/// Weak Jacobian with respect to the threshold.
inline Vector prox_tv_jacobian_mu(const ProxResult& res) {
    return detail::SupportOps(res).mu_vector(res);
}

/*
 * Learned / unrolled approximation of the prox: the jump-coordinate problem
 *
 *      z* = argmin_z F_h(z) = 1/2 ||h - Lz||^2 + mu ||Rz||_1
 *
 * is a Lasso, solved by a fixed number of soft-thresholding layers
 *
 *      z^(0) = Dt h;   z^(l+1) = ST(W_z^(l) z^(l) + W_h^(l) h, mu_in^(l)/rho)
 *
 * with the offset coordinate passed through unthresholded. rho is the squared
 * norm of L. Untrained weights make this exactly ISTA on F_h, so the output
 * converges to the true prox as the layer count grows.
 */
struct InnerLayerParams {
    DenseMatrix W_z;  // k x k
    DenseMatrix W_h;  // k x k
    double mu_in = 0.0;
};

struct NestedListaParams {
    std::size_t k = 0;
    double rho_inner = 0.0;  // ||L||_2^2; denominator of every applied threshold
    std::vector<InnerLayerParams> layers;

    static NestedListaParams untrained(std::size_t k, double mu, std::size_t t_in) {
        require(k >= 1, "nested lista: dimension must be at least 1");
        if (mu < 0.0) throw std::domain_error("nested lista: negative regularization");
        NestedListaParams p;
        p.k = k;
        const double sig = singular_values_L(k).operator_norm;
        p.rho_inner = sig * sig;
        InnerLayerParams layer;
        layer.W_z = DenseMatrix(k, k);
        layer.W_h = DenseMatrix(k, k);
        layer.mu_in = mu;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                // (L^T L)_{ij} = k - max(i, j);  W_z = I - L^T L / rho
                const double g = static_cast<double>(k - std::max(i, j));
                layer.W_z(i, j) = (i == j ? 1.0 : 0.0) - g / p.rho_inner;
                layer.W_h(i, j) = (j >= i ? 1.0 : 0.0) / p.rho_inner;  // L^T / rho
            }
        }
        p.layers.assign(t_in, layer);
        return p;
    }
};

/// Runs the z-recursion for t_in layers and rebuilds the prox output
/// u = L z^(t_in); support and signs come from z^(t_in) itself.
inline ProxResult prox_tv_lista(const Vector& h, double mu,
                                const NestedListaParams& params, std::size_t t_in) {
    if (mu < 0.0) throw std::domain_error("prox_tv_lista: negative regularization");
    require(params.layers.size() == t_in, "prox_tv_lista: layer count mismatch");
    require(t_in == 0 || params.k == h.size(), "prox_tv_lista: dimension mismatch");

    ProxResult res;
    if (t_in == 0) {
        res.u = h;  // empty recursion: u = L Dt h = h
        detail::fill_support(apply_Dtilde(h), res);
        return res;
    }
    Vector z = apply_Dtilde(h);
    for (std::size_t l = 0; l < t_in; ++l) {
        const InnerLayerParams& layer = params.layers[l];
        Vector pre = matvec(layer.W_z, z);
        const Vector hb = matvec(layer.W_h, h);
        for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += hb[i];
        const double thr = std::max(0.0, layer.mu_in) / params.rho_inner;
        z[0] = pre[0];
        for (std::size_t i = 1; i < pre.size(); ++i) z[i] = soft_threshold(pre[i], thr).value;
    }
    res.u = apply_L(z);
    detail::fill_support(z, res);
    return res;
}

/// F_h(z_approx) - F_h(z*), the jump-coordinate objective gap against the
/// exact prox. Nonnegative up to rounding.
inline double prox_error(const Vector& h, const Vector& z_approx, double mu) {
    require(h.size() == z_approx.size(), "prox_error: dimension mismatch");
    const auto objective = [&](const Vector& z) {
        Vector lz = apply_L(z);
        double quad = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double d = h[i] - lz[i];
            quad += d * d;
        }
        double pen = 0.0;
        for (std::size_t i = 1; i < z.size(); ++i) pen += std::abs(z[i]);
        return 0.5 * quad + mu * pen;
    };
    const Vector z_star = apply_Dtilde(prox_tv_exact(h, mu).u);
    return objective(z_approx) - objective(z_star);
}

}  // namespace tvu
