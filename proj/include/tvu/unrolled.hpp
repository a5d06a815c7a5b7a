#pragma once

#include <filesystem>
#include <string>

#include "tvu/common.hpp"
#include "tvu/dense.hpp"
#include "tvu/io.hpp"
#include "tvu/operators.hpp"
#include "tvu/parallel.hpp"
#include "tvu/proxtv.hpp"
#include "tvu/solvers.hpp"

namespace tvu {

/*
 * Unrolled proximal-gradient networks. One layer computes
 *
 *      u^(t) = prox( W_x^(t) x + W_u^(t) u^(t-1), mu^(t) )
 *
 * where the prox is the exact taut-string operator (lpgd_taut), a nested
 * soft-thresholding network in jump coordinates (lpgd_lista), or -- with the
 * whole recursion living in jump coordinates -- a plain soft-threshold
 * (lista_synthesis). Untrained weights reproduce the corresponding classic
 * algorithm layer for layer; training moves every tensor by plain gradient
 * descent with gradients chained manually through each prox.
 */
enum class Arch { lpgd_taut, lpgd_lista, lista_synthesis };

inline const char* arch_name(Arch a) {
    switch (a) {
        case Arch::lpgd_taut: return "lpgd-taut";
        case Arch::lpgd_lista: return "lpgd-lista";
        case Arch::lista_synthesis: return "lista-synthesis";
    }
    return "unknown";
}

inline Arch arch_from_name(const std::string& s) {
    for (Arch a : {Arch::lpgd_taut, Arch::lpgd_lista, Arch::lista_synthesis})
        if (s == arch_name(a)) return a;
    throw std::invalid_argument("unknown architecture: " + s);
}

struct LayerParams {
    DenseMatrix W_x;  // k x m
    DenseMatrix W_u;  // k x k
    double mu = 0.0;  // stored unconstrained, clamped to >= 0 where applied
};

struct UnrolledNet {
    Arch arch = Arch::lpgd_taut;
    std::size_t m = 0, k = 0;
    double lam = 0.0;    // analysis regularization the network optimizes
    std::size_t t_in = 0;  // inner layers per prox (lpgd_lista only)
    std::vector<LayerParams> layers;
    std::vector<NestedListaParams> nested;  // per layer, lpgd_lista only

    std::size_t depth() const { return layers.size(); }
};

/// Untrained layer for recursion matrix B: W_x = B^T/rho, W_u = I - B^T B/rho,
/// mu = lam/rho with rho = ||B||_2^2.
inline LayerParams untrained_layer(const DenseMatrix& b, double lam, double rho) {
    LayerParams lp;
    lp.W_x = transpose(b);
    for (auto& v : lp.W_x.data) v /= rho;
    lp.W_u = gram(b);
    for (auto& v : lp.W_u.data) v = -v / rho;
    for (std::size_t i = 0; i < lp.W_u.rows; ++i) lp.W_u(i, i) += 1.0;
    lp.mu = lam / rho;
    return lp;
}

/// B is the recursion dictionary: the design matrix A for lpgd_taut and
/// lpgd_lista, AL for lista_synthesis. Nested inner layers (lpgd_lista) are
/// initialized the same way with dictionary L, so the whole untrained network
/// is exactly T steps of the classic algorithm.
inline UnrolledNet init_net(Arch arch, const DenseMatrix& b, double lam, std::size_t T,
                            std::size_t t_in = 0) {
    require(lam >= 0.0, "init_net: negative regularization");
    require(b.rows >= 1 && b.cols >= 1, "init_net: empty dictionary");
    UnrolledNet net;
    net.arch = arch;
    net.m = b.rows;
    net.k = b.cols;
    net.lam = lam;
    net.t_in = arch == Arch::lpgd_lista ? t_in : 0;
    const double nrm = operator_norm(b);
    const double rho = nrm * nrm;
    const LayerParams layer = untrained_layer(b, lam, rho);
    net.layers.assign(T, layer);
    if (arch == Arch::lpgd_lista) {
        const NestedListaParams inner =
            NestedListaParams::untrained(net.k, layer.mu, t_in);
        net.nested.assign(T, inner);
    }
    return net;
}

struct LayerCache {
    Vector h;                     // pre-prox input (u-space, or z-space pre-threshold)
    ProxResult prox;              // taut / lista final state; masks drive backward
    std::vector<Vector> inner_z;  // lpgd_lista: z^(0..t_in)
    Vector z_out;                 // lista_synthesis: post-threshold state
    Vector u;                     // layer output in signal space
};

struct ForwardCache {
    Vector u0;
    std::vector<LayerCache> layers;
};

struct ForwardResult {
    Vector u;
    ForwardCache cache;
};

inline ForwardResult forward(const UnrolledNet& net, const Vector& x, const Vector& u0) {
    require(x.size() == net.m, "forward: observation dimension mismatch");
    require(u0.size() == net.k, "forward: initial estimate dimension mismatch");

    ForwardResult fr;
    fr.cache.u0 = u0;
    fr.cache.layers.resize(net.depth());

    if (net.arch == Arch::lista_synthesis) {
        Vector z = apply_Dtilde(u0);
        for (std::size_t t = 0; t < net.depth(); ++t) {
            const LayerParams& lp = net.layers[t];
            LayerCache& lc = fr.cache.layers[t];
            lc.h = matvec(lp.W_x, x);
            const Vector wu = matvec(lp.W_u, z);
            for (std::size_t i = 0; i < net.k; ++i) lc.h[i] += wu[i];
            const double thr = std::max(0.0, lp.mu);
            Vector z_next(net.k);
            z_next[0] = lc.h[0];
            for (std::size_t i = 1; i < net.k; ++i)
                z_next[i] = soft_threshold(lc.h[i], thr).value;
            lc.z_out = z_next;
            lc.u = apply_L(z_next);
            z = std::move(z_next);
        }
        fr.u = net.depth() ? fr.cache.layers.back().u : u0;
        return fr;
    }

    Vector u = u0;
    for (std::size_t t = 0; t < net.depth(); ++t) {
        const LayerParams& lp = net.layers[t];
        LayerCache& lc = fr.cache.layers[t];
        lc.h = matvec(lp.W_x, x);
        const Vector wu = matvec(lp.W_u, u);
        for (std::size_t i = 0; i < net.k; ++i) lc.h[i] += wu[i];
        const double mu_t = std::max(0.0, lp.mu);

        if (net.arch == Arch::lpgd_taut) {
            lc.prox = prox_tv_exact(lc.h, mu_t);
        } else {  // lpgd_lista: unrolled inner recursion, trajectory cached
            const NestedListaParams& inner = net.nested[t];
            lc.inner_z.resize(net.t_in + 1);
            lc.inner_z[0] = apply_Dtilde(lc.h);
            for (std::size_t l = 0; l < net.t_in; ++l) {
                const InnerLayerParams& il = inner.layers[l];
                Vector pre = matvec(il.W_z, lc.inner_z[l]);
                const Vector hb = matvec(il.W_h, lc.h);
                for (std::size_t i = 0; i < net.k; ++i) pre[i] += hb[i];
                const double thr = std::max(0.0, il.mu_in) / inner.rho_inner;
                Vector z_next(net.k);
                z_next[0] = pre[0];
                for (std::size_t i = 1; i < net.k; ++i)
                    z_next[i] = soft_threshold(pre[i], thr).value;
                lc.inner_z[l + 1] = std::move(z_next);
            }
            const Vector& zf = lc.inner_z[net.t_in];
            lc.prox.u = net.t_in == 0 ? lc.h : apply_L(zf);
            lc.prox.support.assign(net.k, 0);
            lc.prox.signs.assign(net.k, 0);
            lc.prox.support[0] = 1;
            for (std::size_t i = 1; i < net.k; ++i) {
                if (std::abs(zf[i]) > kSupportTol) {
                    lc.prox.support[i] = 1;
                    lc.prox.signs[i] = zf[i] > 0.0 ? 1 : -1;
                }
            }
        }
        lc.u = lc.prox.u;
        u = lc.u;
    }
    fr.u = u;
    return fr;
}

/// Same shapes as the network parameters; gradient values.
struct ParamGrads {
    std::vector<LayerParams> layers;
    std::vector<NestedListaParams> nested;
};

inline ParamGrads zero_grads(const UnrolledNet& net) {
    ParamGrads g;
    g.layers.resize(net.depth());
    for (std::size_t t = 0; t < net.depth(); ++t) {
        g.layers[t].W_x = DenseMatrix(net.k, net.m);
        g.layers[t].W_u = DenseMatrix(net.k, net.k);
        g.layers[t].mu = 0.0;
    }
    if (net.arch == Arch::lpgd_lista) {
        g.nested.resize(net.depth());
        for (std::size_t t = 0; t < net.depth(); ++t) {
            g.nested[t].k = net.k;
            g.nested[t].rho_inner = net.nested[t].rho_inner;
            g.nested[t].layers.resize(net.t_in);
            for (auto& il : g.nested[t].layers) {
                il.W_z = DenseMatrix(net.k, net.k);
                il.W_h = DenseMatrix(net.k, net.k);
                il.mu_in = 0.0;
            }
        }
    }
    return g;
}

inline void grads_accumulate(ParamGrads& acc, const ParamGrads& g) {
    for (std::size_t t = 0; t < acc.layers.size(); ++t) {
        for (std::size_t i = 0; i < acc.layers[t].W_x.data.size(); ++i)
            acc.layers[t].W_x.data[i] += g.layers[t].W_x.data[i];
        for (std::size_t i = 0; i < acc.layers[t].W_u.data.size(); ++i)
            acc.layers[t].W_u.data[i] += g.layers[t].W_u.data[i];
        acc.layers[t].mu += g.layers[t].mu;
    }
    for (std::size_t t = 0; t < acc.nested.size(); ++t)
        for (std::size_t l = 0; l < acc.nested[t].layers.size(); ++l) {
            auto& a = acc.nested[t].layers[l];
            const auto& b = g.nested[t].layers[l];
            for (std::size_t i = 0; i < a.W_z.data.size(); ++i) a.W_z.data[i] += b.W_z.data[i];
            for (std::size_t i = 0; i < a.W_h.data.size(); ++i) a.W_h.data[i] += b.W_h.data[i];
            a.mu_in += b.mu_in;
        }
}

inline void grads_scale(ParamGrads& g, double alpha) {
    for (auto& lp : g.layers) {
        for (auto& v : lp.W_x.data) v *= alpha;
        for (auto& v : lp.W_u.data) v *= alpha;
        lp.mu *= alpha;
    }
    for (auto& np : g.nested)
        for (auto& il : np.layers) {
            for (auto& v : il.W_z.data) v *= alpha;
            for (auto& v : il.W_h.data) v *= alpha;
            il.mu_in *= alpha;
        }
}

namespace detail {

inline void add_outer(DenseMatrix& acc, const Vector& a, const Vector& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) acc(i, j) += ai * b[j];
    }
}

}  // namespace detail

/// Chains grad_u backward through every layer, producing gradients for all
/// parameters. Prox layers use the analytic weak Jacobians: only the cached
/// masks and signs enter, never the taut-string control flow.
inline ParamGrads backward(const UnrolledNet& net, const Vector& x, const Vector& u0,
                           const ForwardCache& cache, const Vector& grad_u) {
    require(cache.layers.size() == net.depth(), "backward: cache/net mismatch");
    require(grad_u.size() == net.k, "backward: gradient dimension mismatch");
    ParamGrads g = zero_grads(net);

    if (net.arch == Arch::lista_synthesis) {
        Vector g_z = apply_Lt(grad_u);  // output u = L z^(T)
        for (std::size_t t = net.depth(); t-- > 0;) {
            const LayerCache& lc = cache.layers[t];
            const Vector& z_prev = t > 0 ? cache.layers[t - 1].z_out : cache.u0;
            Vector z_prev_jump;
            const Vector* zp = &z_prev;
            if (t == 0) {
                z_prev_jump = apply_Dtilde(cache.u0);
                zp = &z_prev_jump;
            }
            Vector g_pre(net.k, 0.0);
            double g_thr = 0.0;
            g_pre[0] = g_z[0];
            for (std::size_t i = 1; i < net.k; ++i) {
                if (std::abs(lc.z_out[i]) > 0.0) {
                    g_pre[i] = g_z[i];
                    g_thr -= (lc.z_out[i] > 0.0 ? 1.0 : -1.0) * g_z[i];
                }
            }
            g.layers[t].mu = net.layers[t].mu >= 0.0 ? g_thr : 0.0;
            detail::add_outer(g.layers[t].W_x, g_pre, x);
            detail::add_outer(g.layers[t].W_u, g_pre, *zp);
            g_z = matvec_t(net.layers[t].W_u, g_pre);
        }
        return g;
    }

    Vector g_u = grad_u;
    for (std::size_t t = net.depth(); t-- > 0;) {
        const LayerCache& lc = cache.layers[t];
        const Vector& u_prev = t > 0 ? cache.layers[t - 1].u : cache.u0;
        Vector g_h;

        if (net.arch == Arch::lpgd_taut) {
            g_h = prox_tv_jacobian_x_apply(lc.prox, g_u);  // J_x symmetric
            const Vector jmu = prox_tv_jacobian_mu(lc.prox);
            g.layers[t].mu = net.layers[t].mu >= 0.0 ? dot(jmu, g_u) : 0.0;
        } else {  // lpgd_lista: soft-threshold chain through the inner layers
            const NestedListaParams& inner = net.nested[t];
            Vector g_z = apply_Lt(g_u);
            Vector g_h_acc(net.k, 0.0);
            for (std::size_t l = net.t_in; l-- > 0;) {
                const InnerLayerParams& il = inner.layers[l];
                const Vector& z_next = lc.inner_z[l + 1];
                Vector g_pre(net.k, 0.0);
                double g_thr = 0.0;
                g_pre[0] = g_z[0];
                for (std::size_t i = 1; i < net.k; ++i) {
                    if (std::abs(z_next[i]) > 0.0) {
                        g_pre[i] = g_z[i];
                        g_thr -= (z_next[i] > 0.0 ? 1.0 : -1.0) * g_z[i];
                    }
                }
                g.nested[t].layers[l].mu_in =
                    il.mu_in >= 0.0 ? g_thr / inner.rho_inner : 0.0;
                detail::add_outer(g.nested[t].layers[l].W_z, g_pre, lc.inner_z[l]);
                detail::add_outer(g.nested[t].layers[l].W_h, g_pre, lc.h);
                const Vector gh = matvec_t(il.W_h, g_pre);
                for (std::size_t i = 0; i < net.k; ++i) g_h_acc[i] += gh[i];
                g_z = matvec_t(il.W_z, g_pre);
            }
            // z^(0) = Dt h
            const Vector g_from_z0 = apply_Dtilde_t(g_z);
            g_h = g_h_acc;
            for (std::size_t i = 0; i < net.k; ++i) g_h[i] += g_from_z0[i];
            // the outer mu of a lista layer is inert: inner thresholds own it
        }

        detail::add_outer(g.layers[t].W_x, g_h, x);
        detail::add_outer(g.layers[t].W_u, g_h, u_prev);
        g_u = matvec_t(net.layers[t].W_u, g_h);
    }
    return g;
}

/// Flat parameter order: per layer W_x, W_u, mu, then per inner layer
/// W_z, W_h, mu_in. Used by the trainer and by finite-difference checks.
inline std::size_t param_count(const UnrolledNet& net) {
    std::size_t n = net.depth() * (net.k * net.m + net.k * net.k + 1);
    if (net.arch == Arch::lpgd_lista)
        n += net.depth() * net.t_in * (2 * net.k * net.k + 1);
    return n;
}

inline Vector pack_params(const UnrolledNet& net) {
    Vector v;
    v.reserve(param_count(net));
    for (std::size_t t = 0; t < net.depth(); ++t) {
        const LayerParams& lp = net.layers[t];
        v.insert(v.end(), lp.W_x.data.begin(), lp.W_x.data.end());
        v.insert(v.end(), lp.W_u.data.begin(), lp.W_u.data.end());
        v.push_back(lp.mu);
        if (net.arch == Arch::lpgd_lista) {
            for (const auto& il : net.nested[t].layers) {
                v.insert(v.end(), il.W_z.data.begin(), il.W_z.data.end());
                v.insert(v.end(), il.W_h.data.begin(), il.W_h.data.end());
                v.push_back(il.mu_in);
            }
        }
    }
    return v;
}

inline void unpack_params(UnrolledNet& net, const Vector& v) {
    require(v.size() == param_count(net), "unpack_params: size mismatch");
    std::size_t off = 0;
    const auto take = [&](Vector& dst) {
        std::copy(v.begin() + static_cast<std::ptrdiff_t>(off),
                  v.begin() + static_cast<std::ptrdiff_t>(off + dst.size()), dst.begin());
        off += dst.size();
    };
    for (std::size_t t = 0; t < net.depth(); ++t) {
        take(net.layers[t].W_x.data);
        take(net.layers[t].W_u.data);
        net.layers[t].mu = v[off++];
        if (net.arch == Arch::lpgd_lista) {
            for (auto& il : net.nested[t].layers) {
                take(il.W_z.data);
                take(il.W_h.data);
                il.mu_in = v[off++];
            }
        }
    }
}

inline Vector pack_grads(const UnrolledNet& net, const ParamGrads& g) {
    Vector v;
    v.reserve(param_count(net));
    for (std::size_t t = 0; t < net.depth(); ++t) {
        v.insert(v.end(), g.layers[t].W_x.data.begin(), g.layers[t].W_x.data.end());
        v.insert(v.end(), g.layers[t].W_u.data.begin(), g.layers[t].W_u.data.end());
        v.push_back(g.layers[t].mu);
        if (net.arch == Arch::lpgd_lista) {
            for (const auto& il : g.nested[t].layers) {
                v.insert(v.end(), il.W_z.data.begin(), il.W_z.data.end());
                v.insert(v.end(), il.W_h.data.begin(), il.W_h.data.end());
                v.push_back(il.mu_in);
            }
        }
    }
    return v;
}

/// View over rows [first, first+count) of shared-design sample matrices.
struct SampleBatch {
    const DenseMatrix* A = nullptr;   // m x k
    const DenseMatrix* X = nullptr;   // n x m observations, one per row
    const DenseMatrix* U0 = nullptr;  // n x k initial estimates, one per row
    std::size_t first = 0;
    std::size_t count = 0;

    Vector sample_x(std::size_t i) const {
        Vector x(X->cols);
        for (std::size_t j = 0; j < X->cols; ++j) x[j] = (*X)(first + i, j);
        return x;
    }
    Vector sample_u0(std::size_t i) const {
        Vector u(U0->cols);
        for (std::size_t j = 0; j < U0->cols; ++j) u[j] = (*U0)(first + i, j);
        return u;
    }
};

/// U0 = X (A+)^T, the shared least-squares initializations, one per row.
inline DenseMatrix initial_estimates(const DenseMatrix& a, const DenseMatrix& x_rows) {
    return matmul(x_rows, transpose(pinv(a)));
}

inline double analysis_objective(const DenseMatrix& a, const Vector& x, double lam,
                                 const Vector& u) {
    Vector r = matvec(a, u);
    double quad = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = x[i] - r[i];
        quad += d * d;
    }
    double tv = 0.0;
    for (std::size_t i = 1; i < u.size(); ++i) tv += std::abs(u[i] - u[i - 1]);
    return 0.5 * quad + lam * tv;
}

/// Weak gradient of the analysis objective at u; the TV term contributes
/// through the jump signs (zero on merged segments).
inline Vector analysis_objective_grad(const DenseMatrix& a, const Vector& x, double lam,
                                      const Vector& u) {
    Vector r = matvec(a, u);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= x[i];
    Vector g = matvec_t(a, r);
    Vector s(u.size(), 0.0);
    for (std::size_t i = 1; i < u.size(); ++i) {
        const double d = u[i] - u[i - 1];
        if (d > 0.0)
            s[i] = lam;
        else if (d < 0.0)
            s[i] = -lam;
    }
    const Vector ts = apply_Dtilde_t(s);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += ts[i];
    return g;
}

/// Mean analysis objective of the network outputs over a batch.
inline double network_loss(const UnrolledNet& net, const SampleBatch& batch,
                           unsigned threads = 1) {
    require(batch.count > 0, "network_loss: empty batch");
    std::vector<double> block_loss(block_count(batch.count), 0.0);
    for_each_block(batch.count, threads, [&](std::size_t blk, std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const Vector x = batch.sample_x(i);
            const Vector u0 = batch.sample_u0(i);
            const ForwardResult fr = forward(net, x, u0);
            acc += analysis_objective(*batch.A, x, net.lam, fr.u);
        }
        block_loss[blk] = acc;
    });
    double total = 0.0;
    for (double b : block_loss) total += b;  // fixed block order
    return total / static_cast<double>(batch.count);
}

/// Full-batch loss and parameter gradients with a worker-count-independent
/// reduction: per-block partials combined in block order.
inline std::pair<double, ParamGrads> network_loss_and_grads(const UnrolledNet& net,
                                                            const SampleBatch& batch,
                                                            unsigned threads = 1) {
    require(batch.count > 0, "network_loss_and_grads: empty batch");
    const std::size_t nblocks = block_count(batch.count);
    std::vector<double> block_loss(nblocks, 0.0);
    std::vector<ParamGrads> block_grads(nblocks);
    for_each_block(batch.count, threads, [&](std::size_t blk, std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        ParamGrads acc_g = zero_grads(net);
        for (std::size_t i = lo; i < hi; ++i) {
            const Vector x = batch.sample_x(i);
            const Vector u0 = batch.sample_u0(i);
            const ForwardResult fr = forward(net, x, u0);
            acc += analysis_objective(*batch.A, x, net.lam, fr.u);
            const Vector gu = analysis_objective_grad(*batch.A, x, net.lam, fr.u);
            grads_accumulate(acc_g, backward(net, x, u0, fr.cache, gu));
        }
        block_loss[blk] = acc;
        block_grads[blk] = std::move(acc_g);
    });
    double total = 0.0;
    ParamGrads g = zero_grads(net);
    for (std::size_t b = 0; b < nblocks; ++b) {
        total += block_loss[b];
        grads_accumulate(g, block_grads[b]);
    }
    const double inv_n = 1.0 / static_cast<double>(batch.count);
    grads_scale(g, inv_n);
    return {total * inv_n, g};
}

/*
 * Checkpoint layout: <dir>/manifest.txt with arch, T, t_in, m, k, lam, seed,
 * plus one raw little-endian float64 array per tensor named
 * layer<t>.<param>.f64 and layer<t>.inner<l>.<param>.f64, row-major.
 */
inline void save_checkpoint(const UnrolledNet& net, const std::filesystem::path& dir,
                            std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    std::map<std::string, std::string> kv;
    kv["arch"] = arch_name(net.arch);
    kv["T"] = std::to_string(net.depth());
    kv["t_in"] = std::to_string(net.t_in);
    kv["m"] = std::to_string(net.m);
    kv["k"] = std::to_string(net.k);
    kv["lam"] = format_double(net.lam);
    kv["seed"] = std::to_string(seed);
    write_manifest(dir / "manifest.txt", kv);
    for (std::size_t t = 0; t < net.depth(); ++t) {
        const std::string base = "layer" + std::to_string(t) + ".";
        write_f64(dir / (base + "W_x.f64"), net.layers[t].W_x.data);
        write_f64(dir / (base + "W_u.f64"), net.layers[t].W_u.data);
        write_f64(dir / (base + "mu.f64"), Vector{net.layers[t].mu});
        if (net.arch == Arch::lpgd_lista) {
            for (std::size_t l = 0; l < net.t_in; ++l) {
                const std::string ib = base + "inner" + std::to_string(l) + ".";
                const InnerLayerParams& il = net.nested[t].layers[l];
                write_f64(dir / (ib + "W_z.f64"), il.W_z.data);
                write_f64(dir / (ib + "W_h.f64"), il.W_h.data);
                write_f64(dir / (ib + "mu_in.f64"), Vector{il.mu_in});
            }
        }
    }
}

struct Checkpoint {
    UnrolledNet net;
    std::uint64_t seed = 0;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    const auto kv = read_manifest(dir / "manifest.txt");
    const auto need = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw FormatError(std::string("manifest missing key: ") + key);
        return it->second;
    };
    Checkpoint cp;
    cp.net.arch = arch_from_name(need("arch"));
    const std::size_t T = std::stoull(need("T"));
    cp.net.t_in = std::stoull(need("t_in"));
    cp.net.m = std::stoull(need("m"));
    cp.net.k = std::stoull(need("k"));
    cp.net.lam = std::stod(need("lam"));
    cp.seed = std::stoull(need("seed"));
    const std::size_t k = cp.net.k, m = cp.net.m;
    cp.net.layers.resize(T);
    if (cp.net.arch == Arch::lpgd_lista) cp.net.nested.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        const std::string base = "layer" + std::to_string(t) + ".";
        LayerParams& lp = cp.net.layers[t];
        lp.W_x = DenseMatrix(k, m);
        lp.W_x.data = read_f64(dir / (base + "W_x.f64"), k * m);
        lp.W_u = DenseMatrix(k, k);
        lp.W_u.data = read_f64(dir / (base + "W_u.f64"), k * k);
        lp.mu = read_f64(dir / (base + "mu.f64"), 1)[0];
        if (cp.net.arch == Arch::lpgd_lista) {
            NestedListaParams& np = cp.net.nested[t];
            np.k = k;
            const double sig = singular_values_L(k).operator_norm;
            np.rho_inner = sig * sig;
            np.layers.resize(cp.net.t_in);
            for (std::size_t l = 0; l < cp.net.t_in; ++l) {
                const std::string ib = base + "inner" + std::to_string(l) + ".";
                InnerLayerParams& il = np.layers[l];
                il.W_z = DenseMatrix(k, k);
                il.W_z.data = read_f64(dir / (ib + "W_z.f64"), k * k);
                il.W_h = DenseMatrix(k, k);
                il.W_h.data = read_f64(dir / (ib + "W_h.f64"), k * k);
                il.mu_in = read_f64(dir / (ib + "mu_in.f64"), 1)[0];
            }
        }
    }
    return cp;
}

}  // namespace tvu
