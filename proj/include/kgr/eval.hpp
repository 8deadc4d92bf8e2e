#pragma once

#include <span>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "kgr/forward.hpp"

namespace kgr {

struct RankingMetrics {
    double mrr = 0;
    double hits1 = 0, hits3 = 0, hits10 = 0;
    int64_t n_queries = 0;
};

// Mean-tie rank under a filter: filtered entities are removed from the
// candidate pool; rank = |better| + |ties|/2 + 1. The label must not be in
// the filter.
double rank_of(std::span<const double> scores, EntityId label,
               const std::unordered_set<EntityId>& filter);

// Known-true answers per (s, r, t) key, across all splits; used for the
// filtered evaluation setting.
class FilterIndex {
  public:
    void add(EntityId s, RelationId r, TimeId t, EntityId o) { known_[key(s, r, t)].insert(o); }
    void add_queries(std::span<const Query> queries) {
        for (const Query& q : queries) add(q.s, q.r, q.t, q.label);
    }

    // All known answers except the query's own label.
    std::unordered_set<EntityId> filter_for(const Query& q) const {
        std::unordered_set<EntityId> out;
        auto it = known_.find(key(q.s, q.r, q.t));
        if (it != known_.end()) {
            out = it->second;
            out.erase(q.label);
        }
        return out;
    }

  private:
    static uint64_t key(EntityId s, RelationId r, TimeId t) {
        return (static_cast<uint64_t>(s) << 40) ^ (static_cast<uint64_t>(r) << 20) ^
               static_cast<uint64_t>(t + 1);
    }
    std::unordered_map<uint64_t, std::unordered_set<EntityId>> known_;
};

inline RankingMetrics metrics_from_ranks(std::span<const double> ranks) {
    RankingMetrics m;
    m.n_queries = static_cast<int64_t>(ranks.size());
    for (double r : ranks) {
        m.mrr += 1.0 / r;
        m.hits1 += r <= 1.0;
        m.hits3 += r <= 3.0;
        m.hits10 += r <= 10.0;
    }
    const double n = static_cast<double>(std::max<int64_t>(1, m.n_queries));
    m.mrr /= n;
    m.hits1 /= n;
    m.hits3 /= n;
    m.hits10 /= n;
    return m;
}

struct InferenceConfig {
    int L = 3;
    int M = 0;
    int N = 0;
    LambdaMode lambda_mode = LambdaMode::Dynamic;
    uint64_t seed = 0;
    int threads = 1;
    // Hide each query's own fact during its forward pass. Off for held-out
    // splits (the fact is absent anyway); on when scoring queries whose fact
    // is part of the background graph, mirroring the training objective.
    bool mask_known_fact = false;
};

// Filtered ranking over all entities: MRR and Hits@{1,3,10}. Parallel across
// queries; the reduction order is fixed, so results do not depend on the
// thread count.
template <class S>
RankingMetrics evaluate(const KnowledgeGraph& kg, const std::vector<Query>& queries,
                        const ModelParams<S>& params, const InferenceConfig& cfg,
                        const FilterIndex& filter) {
    if (queries.empty()) throw std::invalid_argument("evaluate: no queries");
    std::vector<double> ranks(queries.size());

    const int n_threads = std::max(1, cfg.threads);
    auto work = [&](int tid) {
        Tape<S> tape(params.store);
        for (size_t qi = tid; qi < queries.size(); qi += n_threads) {
            const Query& q = queries[qi];
            tape.clear();
            ExpansionConfig ec{cfg.L, cfg.M, cfg.N, mix_seed(cfg.seed, qi)};
            FactMask mask{q.s, q.r, q.label, kg.vocab.inverse(q.r), q.t};
            auto fr = forward(tape, kg, q, params, ec, cfg.lambda_mode,
                              cfg.mask_known_fact ? &mask : nullptr);
            ranks[qi] = rank_of(fr.dense_scores(), q.label, filter.filter_for(q));
        }
    };
    if (n_threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int tid = 0; tid < n_threads; ++tid) pool.emplace_back(work, tid);
        for (auto& th : pool) th.join();
    }

    return metrics_from_ranks(ranks);
}

}  // namespace kgr
