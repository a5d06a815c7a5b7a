#pragma once

#include <cstdint>
#include <utility>

#include "tvu/common.hpp"
#include "tvu/unrolled.hpp"

namespace tvu {

/*
 * Full-batch gradient descent with backtracking line search. Each epoch
 * retries from twice the previously accepted step (capped at eta0) and halves
 * until the training loss strictly decreases; training stops when the trial
 * step sinks below eta_limit or the epoch budget runs out. Deterministic:
 * gradients reduce in fixed block order regardless of worker count.
 */
struct TrainConfig {
    double eta0 = 1e-2;
    double backtrack_factor = 0.5;
    double eta_limit = 1e-20;
    std::size_t max_epochs = 300;
    std::uint64_t seed = 0;       // recorded in checkpoints; training itself is deterministic
    unsigned threads = 1;
    bool freeze_inner = false;  // keep nested prox parameters at their current values
};

enum class StopReason { eta_limit, max_epochs };

struct TrainReport {
    std::size_t epochs_run = 0;
    Vector loss_history;  // initial loss, then one entry per accepted epoch
    Vector eta_history;   // accepted step sizes, aligned with accepted epochs
    double final_loss = 0.0;
    StopReason stop_reason = StopReason::max_epochs;
};

struct TrainResult {
    UnrolledNet net;
    TrainReport report;
};

namespace detail {

inline void zero_inner_grads(ParamGrads& g) {
    for (auto& np : g.nested)
        for (auto& il : np.layers) {
            for (auto& v : il.W_z.data) v = 0.0;
            for (auto& v : il.W_h.data) v = 0.0;
            il.mu_in = 0.0;
        }
}

}  // namespace detail

inline TrainResult train(UnrolledNet net, const SampleBatch& train_set, const TrainConfig& cfg) {
    require(train_set.count > 0, "train: empty training set");
    require(cfg.eta_limit > 0.0 && cfg.eta0 > cfg.eta_limit, "train: bad step-size bounds");
    require(cfg.backtrack_factor > 0.0 && cfg.backtrack_factor < 1.0,
            "train: backtrack factor must lie in (0, 1)");

    auto [loss, grads] = network_loss_and_grads(net, train_set, cfg.threads);
    if (!std::isfinite(loss))
        throw std::domain_error("train: non-finite loss at initialization");
    if (cfg.freeze_inner) detail::zero_inner_grads(grads);

    TrainReport report;
    report.loss_history.push_back(loss);
    report.stop_reason = StopReason::max_epochs;

    double eta = cfg.eta0;
    UnrolledNet candidate = net;
    while (report.epochs_run < cfg.max_epochs) {
        const Vector theta = pack_params(net);
        const Vector gvec = pack_grads(net, grads);
        double eta_try = std::min(cfg.eta0, 2.0 * eta);
        bool accepted = false;
        double cand_loss = 0.0;
        while (eta_try >= cfg.eta_limit) {
            Vector trial = theta;
            axpy(-eta_try, gvec, trial);
            unpack_params(candidate, trial);
            cand_loss = network_loss(candidate, train_set, cfg.threads);
            if (cand_loss < loss) {
                accepted = true;
                break;
            }
            eta_try *= cfg.backtrack_factor;
        }
        if (!accepted) {
            report.stop_reason = StopReason::eta_limit;
            break;
        }
        std::swap(net, candidate);
        loss = cand_loss;
        eta = eta_try;
        report.loss_history.push_back(loss);
        report.eta_history.push_back(eta);
        ++report.epochs_run;
        if (report.epochs_run < cfg.max_epochs) {
            auto lg = network_loss_and_grads(net, train_set, cfg.threads);
            grads = std::move(lg.second);
            if (cfg.freeze_inner) detail::zero_inner_grads(grads);
        }
    }
    report.final_loss = loss;
    return {std::move(net), std::move(report)};
}

/// Layer-wise curriculum step: keep the trained layers, append fresh
/// untrained ones, retrain. The untrained tail performs exact algorithm
/// steps, so the grown network starts at or below the shallower one's loss.
inline TrainResult grow_and_train(const UnrolledNet& trained, std::size_t extra_layers,
                                  const SampleBatch& train_set, const TrainConfig& cfg) {
    UnrolledNet net = trained;
    if (extra_layers > 0) {
        const DenseMatrix b =
            net.arch == Arch::lista_synthesis ? times_L(*train_set.A) : *train_set.A;
        const double nrm = operator_norm(b);
        const double rho = nrm * nrm;
        const LayerParams tail = untrained_layer(b, net.lam, rho);
        net.layers.insert(net.layers.end(), extra_layers, tail);
        if (net.arch == Arch::lpgd_lista) {
            const NestedListaParams inner =
                NestedListaParams::untrained(net.k, tail.mu, net.t_in);
            net.nested.insert(net.nested.end(), extra_layers, inner);
        }
    }
    return train(std::move(net), train_set, cfg);
}

/// Empirical risk on held-out samples: mean analysis objective of outputs.
inline double evaluate_risk(const UnrolledNet& net, const SampleBatch& test_set,
                            unsigned threads = 1) {
    return network_loss(net, test_set, threads);
}

}  // namespace tvu
