#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <thread>

#include "kgr/eval.hpp"
#include "kgr/forward.hpp"

namespace kgr {

struct TrainConfig {
    int epochs = 50;
    int batch_size = 64;
    double lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int L = 3;
    int M = 0;
    int N = 0;
    LambdaMode lambda_mode = LambdaMode::Dynamic;
    uint64_t seed = 1;
    bool float32 = false;
    int threads = 1;
    int queries_per_epoch = 0;  // subsample per epoch; 0 = all
    int d = 32;
    int d_t = 16;

    InferenceConfig inference() const { return {L, M, N, lambda_mode, seed, threads}; }
};

template <class S>
struct Adam {
    double lr, b1, b2, eps;
    int64_t step = 0;
    GradStore<S> m, v;

    Adam(const ParamStore<S>& params, const TrainConfig& cfg)
        : lr(cfg.lr), b1(cfg.adam_beta1), b2(cfg.adam_beta2), eps(cfg.adam_eps), m(params), v(params) {}

    void update(ParamStore<S>& params, const GradStore<S>& g) {
        ++step;
        const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
        for (size_t i = 0; i < params.size(); ++i) {
            m[i] = S(b1) * m[i] + S(1 - b1) * g[i];
            v[i] = (S(b2) * v[i].array() + S(1 - b2) * g[i].array().square()).matrix();
            params[i].array() -= S(lr) * (m[i].array() / S(bc1)) /
                                 ((v[i].array() / S(bc2)).sqrt() + S(eps));
        }
    }
};

template <class S>
struct TrainResult {
    ModelParams<S> params;
    std::vector<double> epoch_loss;
};

// Mini-batch optimization of the multi-class log-loss. The query fact itself
// is masked out of the graph while it is being answered. Gradients of a batch
// are reduced in a fixed order, so a fixed seed and thread count reproduce
// bit-identical trajectories.
template <class S>
TrainResult<S> train(
    const KnowledgeGraph& kg, const std::vector<Query>& queries, ModelDims dims,
    const TrainConfig& cfg,
    const std::function<void(int, const ModelParams<S>&, double)>& on_epoch = {}) {
    if (queries.empty()) throw std::invalid_argument("train: no queries");
    if (dims.inductive && cfg.lambda_mode != LambdaMode::Fixed1)
        throw std::invalid_argument("train: SKG_I requires lambda mode fixed-1");
    dims.L = cfg.L;
    dims.d = cfg.d;
    dims.d_t = cfg.d_t;

    TrainResult<S> res{ModelParams<S>::make(dims, cfg.seed), {}};
    ModelParams<S>& params = res.params;
    Adam<S> adam(params.store, cfg);

    const int n_threads = std::max(1, cfg.threads);
    std::vector<GradStore<S>> grads(n_threads, GradStore<S>(params.store));
    GradStore<S> total(params.store);

    std::vector<size_t> order(queries.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 shuffle_rng(cfg.seed);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        size_t n_epoch = order.size();
        if (cfg.queries_per_epoch > 0)
            n_epoch = std::min(n_epoch, static_cast<size_t>(cfg.queries_per_epoch));

        double loss_sum = 0;
        for (size_t begin = 0; begin < n_epoch; begin += cfg.batch_size) {
            const size_t end = std::min(n_epoch, begin + cfg.batch_size);
            std::vector<double> batch_loss(end - begin, 0.0);

            auto work = [&](int tid) {
                Tape<S> tape(params.store);
                for (size_t k = begin + tid; k < end; k += n_threads) {
                    const Query& q = queries[order[k]];
                    tape.clear();
                    FactMask mask{q.s, q.r, q.label, kg.vocab.inverse(q.r), q.t};
                    ExpansionConfig ec{cfg.L, cfg.M, cfg.N,
                                       mix_seed(cfg.seed, order[k] * 2654435761u + epoch)};
                    auto fr = forward(tape, kg, q, params, ec, cfg.lambda_mode, &mask);
                    VarId loss = multiclass_logloss(tape, fr, q.label);
                    batch_loss[k - begin] = static_cast<double>(tape.scalar(loss));
                    tape.backward(loss, grads[tid]);
                }
            };
            if (n_threads == 1) {
                work(0);
            } else {
                std::vector<std::thread> pool;
                for (int tid = 0; tid < n_threads; ++tid) pool.emplace_back(work, tid);
                for (auto& th : pool) th.join();
            }

            total.zero();
            for (auto& g : grads) {
                total.add(g);
                g.zero();
            }
            const S inv = S(1) / static_cast<S>(end - begin);
            for (auto& g : total.grads) g *= inv;
            adam.update(params.store, total);

            for (double l : batch_loss) loss_sum += l;
            if (!std::isfinite(loss_sum))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch));
        }
        res.epoch_loss.push_back(loss_sum / static_cast<double>(n_epoch));
        if (on_epoch) on_epoch(epoch, params, res.epoch_loss.back());
    }
    return res;
}

}  // namespace kgr
