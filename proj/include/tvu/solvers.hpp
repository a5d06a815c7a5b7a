#pragma once

#include <cmath>
#include <string>

#include "tvu/common.hpp"
#include "tvu/dense.hpp"
#include "tvu/operators.hpp"
#include "tvu/proxtv.hpp"

namespace tvu {

/*
 * Classic iterative solvers for the 1D TV-regularized least-squares problem
 *
 *      min_u P(u) = 1/2 ||x - Au||^2 + lam ||Dt u||_{1,offset-free}
 *
 * in four parametrizations: proximal gradient on u (exact prox per step),
 * ISTA/FISTA on the jump coordinates z = Dt u (dictionary AL, offset
 * unpenalized), projected (accelerated) gradient on the box-constrained dual,
 * and a primal-dual splitting. All run a fixed iteration count with step
 * sizes from power-iteration operator norms and record the primal objective
 * per iteration.
 */
struct TVProblem {
    DenseMatrix A;  // m x k design
    Vector x;       // m observations
    double lam = 0.0;
    double rho = 0.0;  // ||A||_2^2, cached at construction
};

inline TVProblem make_problem(DenseMatrix A, Vector x, double lam) {
    require(A.rows == x.size(), "make_problem: dimension mismatch");
    require(lam >= 0.0, "make_problem: negative regularization");
    require(A.finite() && all_finite(x), "make_problem: non-finite input");
    TVProblem p{std::move(A), std::move(x), lam, 0.0};
    const double nrm = operator_norm(p.A);
    p.rho = nrm * nrm;
    return p;
}

/// P(u) = 1/2 ||x - Au||^2 + lam * sum |(Du)_i|
inline double objective_analysis(const TVProblem& p, const Vector& u) {
    require(u.size() == p.A.cols, "objective_analysis: dimension mismatch");
    Vector r = matvec(p.A, u);
    double quad = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = p.x[i] - r[i];
        quad += d * d;
    }
    double tv = 0.0;
    for (std::size_t i = 1; i < u.size(); ++i) tv += std::abs(u[i] - u[i - 1]);
    return 0.5 * quad + p.lam * tv;
}

/// S(z) = 1/2 ||x - ALz||^2 + lam ||Rz||_1 = P(Lz)
inline double objective_synthesis(const TVProblem& p, const Vector& z) {
    require(z.size() == p.A.cols, "objective_synthesis: dimension mismatch");
    Vector u = apply_L(z);
    Vector r = matvec(p.A, u);
    double quad = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = p.x[i] - r[i];
        quad += d * d;
    }
    double pen = 0.0;
    for (std::size_t i = 1; i < z.size(); ++i) pen += std::abs(z[i]);
    return 0.5 * quad + p.lam * pen;
}

/// Least-squares initialization u0 = A+ x shared by every solver and network.
inline Vector initial_estimate(const TVProblem& p) {
    return matvec(pinv(p.A), p.x);
}

enum class Method {
    pgd_analysis,
    apgd_analysis,
    ista_synthesis,
    fista_synthesis,
    dual_pgd,
    dual_apgd,
    primal_dual,
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::pgd_analysis: return "pgd_analysis";
        case Method::apgd_analysis: return "apgd_analysis";
        case Method::ista_synthesis: return "ista_synthesis";
        case Method::fista_synthesis: return "fista_synthesis";
        case Method::dual_pgd: return "dual_pgd";
        case Method::dual_apgd: return "dual_apgd";
        case Method::primal_dual: return "primal_dual";
    }
    return "unknown";
}

inline Method method_from_name(const std::string& s) {
    for (Method m : {Method::pgd_analysis, Method::apgd_analysis, Method::ista_synthesis,
                     Method::fista_synthesis, Method::dual_pgd, Method::dual_apgd,
                     Method::primal_dual}) {
        if (s == method_name(m)) return m;
    }
    throw std::invalid_argument("unknown solver method: " + s);
}

struct ConvergenceTrace {
    std::string solver_name;
    Vector objectives;  // P(u^(t)) for t = 0..iterations
    std::size_t iterations = 0;
};

struct SolveResult {
    Vector u;
    ConvergenceTrace trace;
};

namespace detail {

/// y = D^T v for v in R^{k-1}: y_0 = -v_0, y_i = v_{i-1} - v_i, y_{k-1} = v_{k-2}.
inline Vector apply_D_t(const Vector& v, std::size_t k) {
    Vector y(k, 0.0);
    for (std::size_t i = 0; i + 1 < k; ++i) {
        y[i] -= v[i];
        y[i + 1] += v[i];
    }
    return y;
}

/// v = D u: first-order differences.
inline Vector apply_D(const Vector& u) {
    Vector v(u.size() - 1);
    for (std::size_t i = 0; i + 1 < u.size(); ++i) v[i] = u[i + 1] - u[i];
    return v;
}

inline double fista_next(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

}  // namespace detail

/// Runs exactly T iterations of the chosen method from u0 and records the
/// analysis objective at every iterate, including t = 0.
inline SolveResult solve(const TVProblem& p, Method method, std::size_t T, const Vector& u0) {
    const std::size_t k = p.A.cols;
    require(u0.size() == k, "solve: initial estimate has wrong dimension");

    SolveResult out;
    out.trace.solver_name = method_name(method);
    out.trace.objectives.reserve(T + 1);
    out.trace.iterations = T;

    const auto record_u = [&](const Vector& u) {
        out.trace.objectives.push_back(objective_analysis(p, u));
    };

    switch (method) {
        case Method::pgd_analysis:
        case Method::apgd_analysis: {
            const bool accel = method == Method::apgd_analysis;
            const double step = 1.0 / p.rho;
            const double thr = p.lam / p.rho;
            const Vector atx = matvec_t(p.A, p.x);
            Vector u = u0, y = u0;
            double t_mom = 1.0;
            record_u(u);
            for (std::size_t t = 0; t < T; ++t) {
                Vector grad = matvec_t(p.A, matvec(p.A, y));
                Vector g(k);
                for (std::size_t i = 0; i < k; ++i) g[i] = y[i] - step * (grad[i] - atx[i]);
                Vector u_next = prox_tv_exact(g, thr).u;
                if (accel) {
                    const double t_next = detail::fista_next(t_mom);
                    const double beta = (t_mom - 1.0) / t_next;
                    for (std::size_t i = 0; i < k; ++i)
                        y[i] = u_next[i] + beta * (u_next[i] - u[i]);
                    t_mom = t_next;
                } else {
                    y = u_next;
                }
                u = std::move(u_next);
                record_u(u);
            }
            out.u = std::move(u);
            break;
        }
        case Method::ista_synthesis:
        case Method::fista_synthesis: {
            const bool accel = method == Method::fista_synthesis;
            const DenseMatrix al = times_L(p.A);
            const double nrm = operator_norm(al);
            const double rho_s = nrm * nrm;
            const double step = 1.0 / rho_s;
            const double thr = p.lam / rho_s;
            Vector z = apply_Dtilde(u0), y = z;
            double t_mom = 1.0;
            record_u(apply_L(z));
            for (std::size_t t = 0; t < T; ++t) {
                Vector res = matvec(al, y);
                for (std::size_t i = 0; i < res.size(); ++i) res[i] -= p.x[i];
                Vector grad = matvec_t(al, res);
                Vector z_next(k);
                z_next[0] = y[0] - step * grad[0];  // offset coordinate unpenalized
                for (std::size_t i = 1; i < k; ++i)
                    z_next[i] = soft_threshold(y[i] - step * grad[i], thr).value;
                if (accel) {
                    const double t_next = detail::fista_next(t_mom);
                    const double beta = (t_mom - 1.0) / t_next;
                    for (std::size_t i = 0; i < k; ++i)
                        y[i] = z_next[i] + beta * (z_next[i] - z[i]);
                    t_mom = t_next;
                } else {
                    y = z_next;
                }
                z = std::move(z_next);
                record_u(apply_L(z));
            }
            out.u = apply_L(z);
            break;
        }
        case Method::dual_pgd:
        case Method::dual_apgd: {
            // Dual of the analysis problem over v in R^{k-1}, ||v||_inf <= lam:
            //   min_v 1/2 ||(A+)^T D^T v||^2 - v^T D A+ x
            // with primal recovery u(v) = A+ x - A+ (A+)^T D^T v.
            const bool accel = method == Method::dual_apgd;
            const DenseMatrix apinv = pinv(p.A);          // k x m
            const DenseMatrix apinv_t = transpose(apinv);  // m x k
            const Vector u_ls = matvec(apinv, p.x);        // A+ x
            const Vector b = detail::apply_D(u_ls);        // D A+ x
            // M v = (A+)^T D^T v; step from ||M||^2
            const auto apply_M = [&](const Vector& v) {
                return matvec(apinv_t, detail::apply_D_t(v, k));
            };
            const auto apply_Mt = [&](const Vector& w) {
                return detail::apply_D(matvec(apinv, w));
            };
            DenseMatrix m_mat(p.A.rows, k - 1);  // dense M for the norm estimate
            {
                Vector basis(k - 1, 0.0);
                for (std::size_t j = 0; j + 1 < k; ++j) {
                    basis[j] = 1.0;
                    Vector col = apply_M(basis);
                    basis[j] = 0.0;
                    for (std::size_t i = 0; i < col.size(); ++i) m_mat(i, j) = col[i];
                }
            }
            double rho_d = 1.0;
            bool degenerate = true;
            for (double vden : m_mat.data)
                if (vden != 0.0) degenerate = false;
            if (!degenerate) {
                const double nrm = operator_norm(m_mat);
                rho_d = nrm * nrm;
            }
            const double step = 1.0 / rho_d;
            const auto project = [&](Vector& vv) {
                for (auto& vi : vv) vi = std::clamp(vi, -p.lam, p.lam);
            };
            const auto recover = [&](const Vector& v) {
                Vector u = u_ls;
                Vector corr = matvec(apinv, apply_M(v));
                for (std::size_t i = 0; i < k; ++i) u[i] -= corr[i];
                return u;
            };
            Vector v(k - 1, 0.0), y = v;
            double t_mom = 1.0;
            record_u(recover(v));
            for (std::size_t t = 0; t < T; ++t) {
                Vector grad = apply_Mt(apply_M(y));
                for (std::size_t i = 0; i + 1 < k; ++i) grad[i] -= b[i];
                Vector v_next(k - 1);
                for (std::size_t i = 0; i + 1 < k; ++i) v_next[i] = y[i] - step * grad[i];
                project(v_next);
                if (accel) {
                    const double t_next = detail::fista_next(t_mom);
                    const double beta = (t_mom - 1.0) / t_next;
                    for (std::size_t i = 0; i + 1 < k; ++i)
                        y[i] = v_next[i] + beta * (v_next[i] - v[i]);
                    t_mom = t_next;
                } else {
                    y = v_next;
                }
                v = std::move(v_next);
                record_u(recover(v));
            }
            out.u = recover(v);
            break;
        }
        case Method::primal_dual: {
            // Condat-Vu splitting on min_u f(u) + g(Du), f smooth. Steps
            // tau = 1/rho, sigma = rho/16 (so tau*sigma*||D||^2 <= 1/4 and the
            // convergence condition 1/tau - sigma*||D||^2 >= rho/2 holds with
            // the bound ||D||^2 <= 4), relaxation 1.
            const double tau = 1.0 / p.rho;
            const double sigma = p.rho / 16.0;
            Vector u = u0;
            Vector v(k - 1, 0.0);
            const Vector atx = matvec_t(p.A, p.x);
            record_u(u);
            for (std::size_t t = 0; t < T; ++t) {
                Vector grad = matvec_t(p.A, matvec(p.A, u));
                Vector dtv = detail::apply_D_t(v, k);
                Vector u_next(k);
                for (std::size_t i = 0; i < k; ++i)
                    u_next[i] = u[i] - tau * (grad[i] - atx[i] + dtv[i]);
                Vector bar(k);
                for (std::size_t i = 0; i < k; ++i) bar[i] = 2.0 * u_next[i] - u[i];
                Vector dv = detail::apply_D(bar);
                for (std::size_t i = 0; i + 1 < k; ++i)
                    v[i] = std::clamp(v[i] + sigma * dv[i], -p.lam, p.lam);
                u = std::move(u_next);
                record_u(u);
            }
            out.u = std::move(u);
            break;
        }
    }
    return out;
}

/// Smallest regularization for which the solution is the best constant fit:
/// lam_max = ||A^T (A c 1 - x)||_inf with c = sum(S_i x_i) / sum(S_i^2),
/// S_i the row sums of A.
inline double lambda_max(const DenseMatrix& a, const Vector& x) {
    require(a.rows == x.size(), "lambda_max: dimension mismatch");
    double num = 0.0, den = 0.0;
    Vector row_sums(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j);
        row_sums[i] = s;
        num += s * x[i];
        den += s * s;
    }
    if (den == 0.0) throw std::domain_error("lambda_max: all row sums vanish");
    const double c = num / den;
    Vector r(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) r[i] = c * row_sums[i] - x[i];
    return norm_inf(matvec_t(a, r));
}

/*
 * Iteration budget for inexact proximal gradient: layers T and inner prox
 * layers T_in needed to certify an error level delta,
 *
 *   T_in = (ln(1/delta) + ln(6 sqrt(2 rho) C1)) / ln(1/(1-gamma)),
 *   T    = 2 rho C0^2 / delta,
 *
 * both rounded up and clamped to at least 1.
 */
struct BudgetReport {
    double delta = 0.0;
    std::size_t T = 0;
    std::size_t T_in = 0;
    double gamma = 0.0;
    double C0 = 0.0;
    double C1 = 0.0;
};

inline BudgetReport inexact_budget(double delta, double rho, double gamma, double C0,
                                   double C1) {
    if (!(delta > 0.0) || !(rho > 0.0) || !(C0 > 0.0) || !(C1 > 0.0))
        throw std::domain_error("inexact_budget: delta, rho, C0, C1 must be positive");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::domain_error("inexact_budget: gamma must lie in (0, 1)");
    BudgetReport rep{delta, 0, 0, gamma, C0, C1};
    const double t_raw = 2.0 * rho * C0 * C0 / delta;
    const double tin_raw = (std::log(1.0 / delta) + std::log(6.0 * std::sqrt(2.0 * rho) * C1)) /
                           std::log(1.0 / (1.0 - gamma));
    rep.T = static_cast<std::size_t>(std::max(1.0, std::ceil(t_raw)));
    rep.T_in = static_cast<std::size_t>(std::max(1.0, std::ceil(tin_raw)));
    return rep;
}

/// gamma = cos(pi/(2k+1)) / sin(pi/(2k+1)), the conditioning factor quoted
/// for the inner problem. Exceeds 1 for k >= 2, so it cannot be fed back
/// into inexact_budget verbatim; the budget keeps gamma a free parameter.
inline double condition_gamma(std::size_t k) {
    require(k >= 1, "condition_gamma: dimension must be at least 1");
    const double arg = M_PI / (2.0 * static_cast<double>(k) + 1.0);
    return std::cos(arg) / std::sin(arg);
}

}  // namespace tvu
