#pragma once

#include <map>
#include <unordered_map>

#include "kgr/params.hpp"
#include "kgr/reasoning_graph.hpp"
#include "kgr/tape.hpp"

namespace kgr {

// One scored answer candidate (an entity of the last layer).
template <class S>
struct Candidate {
    EntityId entity;
    VarId score;  // size-1 tape node
};

template <class S>
struct ForwardResult {
    ReasoningGraph rg;
    std::vector<Candidate<S>> candidates;  // entities absent here score exactly 0
    VarId scores = -1;                     // stacked candidate scores
    int n_entities = 0;                    // ranking universe size

    // Value snapshots (attention distributions and scores), for explanation,
    // rule induction and evaluation. Indexed like rg.layers.
    std::vector<std::vector<double>> node_alpha, node_beta;
    std::vector<std::vector<double>> edge_alpha, edge_beta;
    std::vector<double> score_values;

    int candidate_of(EntityId e) const {
        for (size_t i = 0; i < candidates.size(); ++i)
            if (candidates[i].entity == e) return static_cast<int>(i);
        return -1;
    }

    // Dense per-entity scores under the zero rule for unreached entities.
    std::vector<double> dense_scores() const {
        std::vector<double> s(n_entities, 0.0);
        for (size_t i = 0; i < candidates.size(); ++i)
            s[candidates[i].entity] = score_values[i];
        return s;
    }
};

// q = Wq [h_s ∥ g_r ∥ e_t]; the time slice is dropped for static graphs.
// `query_time_value` is the raw numeric timestamp (ignored when static).
template <class S>
VarId embed_query(Tape<S>& t, const ModelParams<S>& p, const Query& q, S query_time_value = S(0)) {
    VarId hs = t.param_row(p.h, p.entity_row(q.s));
    VarId gr = t.param_row(p.g, q.r);
    if (p.dims.temporal) {
        VarId et = time_encode(t, p, query_time_value);
        return t.matvec(p.Wq, t.concat(hs, gr, et));
    }
    return t.matvec(p.Wq, t.concat(hs, gr));
}

// λ-combination and scoring of one candidate: h = (1−λ)x + λy,
// γ = (1−λ)α + λβ, score = Wout h + γ.
template <class S>
VarId combine_and_score(Tape<S>& t, const ModelParams<S>& p, LambdaMode mode, VarId x, VarId y,
                        VarId alpha, VarId beta, VarId qvec, VarId lambda_global = -1) {
    if (mode == LambdaMode::Fixed0) return t.add(t.matvec(p.Wout, x), alpha);
    if (mode == LambdaMode::Fixed1) return t.add(t.matvec(p.Wout, y), beta);
    VarId lam = mode == LambdaMode::GlobalScalar
                    ? lambda_global
                    : t.sigmoid(t.matvec(p.Wlambda, t.concat(x, y, qvec)));
    VarId lam1 = t.one_minus(lam);
    VarId h = t.add(t.scalar_mul(lam1, x), t.scalar_mul(lam, y));
    VarId gamma = t.add(t.scalar_mul(lam1, alpha), t.scalar_mul(lam, beta));
    return t.add(t.matvec(p.Wout, h), gamma);
}

// Full reasoning pass: expand the graph layer by layer, run the
// propositional and FOL message-passing channels (subject to the λ mode),
// prune extrapolation layers to the top-N edges, and score the entities of
// the last layer. `mask`, when set, hides one fact during expansion.
template <class S>
ForwardResult<S> forward(Tape<S>& t, const KnowledgeGraph& kg, const Query& q,
                         const ModelParams<S>& p, const ExpansionConfig& cfg, LambdaMode mode,
                         const FactMask* mask = nullptr) {
    const bool use_prop = mode != LambdaMode::Fixed1;
    const bool use_fol = mode != LambdaMode::Fixed0;
    const Scenario sc = q.scenario;

    ForwardResult<S> res;
    res.n_entities = kg.vocab.n_entities();
    ReasoningGraph rg = init_reasoning_graph(q);
    std::mt19937_64 rng(cfg.rng_seed);

    std::unordered_map<TimeId, VarId> time_enc;
    auto enc_time = [&](TimeId tm) {
        auto it = time_enc.find(tm);
        if (it != time_enc.end()) return it->second;
        VarId v = time_encode(t, p, static_cast<S>(kg.vocab.time_value(tm)));
        time_enc.emplace(tm, v);
        return v;
    };
    std::unordered_map<RelationId, VarId> rel_emb;
    auto g_row = [&](RelationId r) {
        auto it = rel_emb.find(r);
        if (it != rel_emb.end()) return it->second;
        VarId v = t.param_row(p.g, r);
        rel_emb.emplace(r, v);
        return v;
    };

    VarId qvec = -1;
    if (use_prop)
        qvec = embed_query(t, p, q,
                           p.dims.temporal ? static_cast<S>(kg.vocab.time_value(q.t)) : S(0));
    VarId lambda_global = -1;
    if (mode == LambdaMode::GlobalScalar) lambda_global = t.sigmoid(t.param_vec(p.lambda_scalar));

    // Layer-0 states: the query entity with unit attention on both channels.
    std::vector<VarId> x, y, alpha, beta;
    if (use_prop) x = {t.param_row(p.h, p.entity_row(q.s))};
    if (use_fol) y = {gru_cell(t, p.gru, g_row(q.r), t.param_vec(p.y0))};
    alpha = {t.constant_scalar(S(1))};
    beta = {t.constant_scalar(S(1))};
    res.node_alpha.push_back({1.0});
    res.node_beta.push_back({1.0});
    res.edge_alpha.emplace_back();
    res.edge_beta.emplace_back();

    for (int l = 0; l < cfg.L; ++l) {
        expand_layer(rg, kg, cfg, rng, mask);
        Layer layer = rg.layers.back();
        const int n_nodes = static_cast<int>(layer.nodes.size());

        std::vector<VarId> xbase(n_nodes, -1);
        if (use_prop)
            for (int j = 0; j < n_nodes; ++j) {
                VarId he = t.param_row(p.h, p.entity_row(layer.nodes[j].entity));
                if (!p.dims.temporal)
                    xbase[j] = t.matvec(p.Wn, he);
                else if (sc == Scenario::TkgE)
                    xbase[j] = t.matvec(p.Wn, t.concat(he, enc_time(layer.nodes[j].time)));
                else  // fused interpolation node: query-time slice
                    xbase[j] = t.matvec(p.Wn, t.concat(he, enc_time(q.t)));
            }

        const int n_edges = static_cast<int>(layer.edges.size());
        std::vector<VarId> e_raw(n_edges, -1), w2m(n_edges, -1);
        std::vector<VarId> b_raw(n_edges, -1), y_edge(n_edges, -1);
        std::map<std::pair<int, RelationId>, std::pair<VarId, VarId>> fol_cache;
        for (int e = 0; e < n_edges; ++e) {
            const LayerEdge& edge = layer.edges[e];
            if (use_prop) {
                VarId m = t.matvec(p.W3[l], t.concat(x[edge.prior], g_row(edge.rel), xbase[edge.post]));
                w2m[e] = t.matvec(p.W2[l], m);
                e_raw[e] = t.sigmoid(t.matvec(p.W4[l], t.concat(m, qvec)));
            }
            if (use_fol) {
                auto key = std::make_pair(edge.prior, edge.rel);
                auto it = fol_cache.find(key);
                if (it == fol_cache.end()) {
                    VarId ye = gru_cell(t, p.gru, g_row(edge.rel), y[edge.prior]);
                    VarId braw =
                        t.scalar_mul(beta[edge.prior], t.sigmoid(t.matvec(p.W5[l], ye)));
                    it = fol_cache.emplace(key, std::make_pair(ye, braw)).first;
                }
                y_edge[e] = it->second.first;
                b_raw[e] = it->second.second;
            }
        }

        // Extrapolation: keep only the top-N edges of this iteration, then
        // renormalize over the survivors. Selection follows the propositional
        // edge attention (the softmax is monotone in the raw logit); with the
        // propositional channel disabled it falls back to the FOL logit.
        if (sc == Scenario::TkgE && cfg.N > 0 && n_edges > cfg.N) {
            std::vector<double> att(n_edges);
            for (int e = 0; e < n_edges; ++e)
                att[e] = static_cast<double>(t.scalar(use_prop ? e_raw[e] : b_raw[e]));
            std::vector<int> kept;
            Layer pruned = prune_edges_topN(layer, att, cfg.N, &kept);
            std::vector<int> node_of_new(pruned.nodes.size(), -1);
            for (size_t k = 0; k < kept.size(); ++k)
                node_of_new[pruned.edges[k].post] = layer.edges[kept[k]].post;

            auto take = [&](std::vector<VarId>& v) {
                if (v.empty()) return;
                std::vector<VarId> out(kept.size());
                for (size_t k = 0; k < kept.size(); ++k) out[k] = v[kept[k]];
                v = std::move(out);
            };
            take(e_raw);
            take(w2m);
            take(b_raw);
            take(y_edge);
            if (use_prop) {
                std::vector<VarId> xb(pruned.nodes.size());
                for (size_t j = 0; j < pruned.nodes.size(); ++j) xb[j] = xbase[node_of_new[j]];
                xbase = std::move(xb);
            }
            layer = std::move(pruned);
            rg.layers.back() = layer;
        }

        const int m_edges = static_cast<int>(layer.edges.size());
        const int m_nodes = static_cast<int>(layer.nodes.size());
        std::vector<std::vector<int>> in_pos(m_nodes);
        for (int e = 0; e < m_edges; ++e) in_pos[layer.edges[e].post].push_back(e);

        VarId alpha_vec = -1, beta_vec = -1;
        if (use_prop) alpha_vec = t.softmax(t.stack_scalars(e_raw));
        if (use_fol) beta_vec = t.softmax(t.stack_scalars(b_raw));

        std::vector<VarId> nx(m_nodes, -1), ny(m_nodes, -1), nalpha(m_nodes, -1),
            nbeta(m_nodes, -1);
        for (int j = 0; j < m_nodes; ++j) {
            const auto& pos = in_pos[j];
            if (use_prop) {
                std::vector<VarId> msgs(pos.size());
                for (size_t k = 0; k < pos.size(); ++k) msgs[k] = w2m[pos[k]];
                nx[j] = t.add(t.matvec(p.W1[l], xbase[j]),
                              t.weighted_sum_select(alpha_vec, pos, msgs));
                nalpha[j] = t.sum_select(alpha_vec, pos);
            }
            if (use_fol) {
                std::vector<VarId> ys(pos.size());
                for (size_t k = 0; k < pos.size(); ++k) ys[k] = y_edge[pos[k]];
                ny[j] = t.weighted_sum_select(beta_vec, pos, ys);
                nbeta[j] = t.sum_select(beta_vec, pos);
            }
        }
        x = std::move(nx);
        y = std::move(ny);
        alpha = std::move(nalpha);
        beta = std::move(nbeta);

        auto snap = [&](const std::vector<VarId>& ids) {
            std::vector<double> vals;
            vals.reserve(ids.size());
            for (VarId id : ids) vals.push_back(id < 0 ? 0.0 : static_cast<double>(t.scalar(id)));
            return vals;
        };
        res.node_alpha.push_back(use_prop ? snap(alpha) : std::vector<double>(m_nodes, 0.0));
        res.node_beta.push_back(use_fol ? snap(beta) : std::vector<double>(m_nodes, 0.0));
        std::vector<double> ea(m_edges, 0.0), eb(m_edges, 0.0);
        for (int e = 0; e < m_edges; ++e) {
            if (use_prop) ea[e] = static_cast<double>(t.val(alpha_vec)[e]);
            if (use_fol) eb[e] = static_cast<double>(t.val(beta_vec)[e]);
        }
        res.edge_alpha.push_back(std::move(ea));
        res.edge_beta.push_back(std::move(eb));
    }

    // Score the last layer. Extrapolation first aggregates the entity-time
    // copies of each entity: attentions are summed, embeddings combined by an
    // attention-weighted mean.
    const Layer& last = rg.layers.back();
    struct Group {
        EntityId entity;
        std::vector<int> nodes;
    };
    std::vector<Group> groups;
    {
        std::map<EntityId, int> gi;
        for (int j = 0; j < static_cast<int>(last.nodes.size()); ++j) {
            EntityId e = last.nodes[j].entity;
            auto [it, fresh] = gi.try_emplace(e, static_cast<int>(groups.size()));
            if (fresh) groups.push_back({e, {}});
            groups[it->second].nodes.push_back(j);
        }
    }

    std::vector<VarId> score_ids;
    for (const Group& grp : groups) {
        VarId gx = -1, gy = -1, galpha = -1, gbeta = -1;
        if (grp.nodes.size() == 1) {
            int j = grp.nodes[0];
            gx = use_prop ? x[j] : -1;
            gy = use_fol ? y[j] : -1;
            galpha = use_prop ? alpha[j] : -1;
            gbeta = use_fol ? beta[j] : -1;
        } else {
            std::vector<VarId> xs, ys, as, bs;
            for (int j : grp.nodes) {
                if (use_prop) {
                    as.push_back(alpha[j]);
                    xs.push_back(t.scalar_mul(alpha[j], x[j]));
                }
                if (use_fol) {
                    bs.push_back(beta[j]);
                    ys.push_back(t.scalar_mul(beta[j], y[j]));
                }
            }
            if (use_prop) {
                galpha = t.add(as);
                gx = t.div_scalar(t.add(xs), galpha);
            }
            if (use_fol) {
                gbeta = t.add(bs);
                gy = t.div_scalar(t.add(ys), gbeta);
            }
        }
        VarId s = combine_and_score(t, p, mode, gx, gy, galpha, gbeta, qvec, lambda_global);
        score_ids.push_back(s);
        res.candidates.push_back({grp.entity, s});
    }
    res.scores = t.stack_scalars(score_ids);
    res.score_values.resize(score_ids.size());
    for (size_t i = 0; i < score_ids.size(); ++i)
        res.score_values[i] = static_cast<double>(t.scalar(score_ids[i]));
    res.rg = std::move(rg);
    return res;
}

// Multi-class log-loss: -s(label) + log Σ_all-entities exp(s), where
// entities outside the last layer contribute exp(0).
template <class S>
VarId multiclass_logloss(Tape<S>& t, const ForwardResult<S>& fr, EntityId label) {
    const int64_t n_zero = fr.n_entities - static_cast<int64_t>(fr.candidates.size());
    VarId lse = t.log_sum_exp_zeros(fr.scores, n_zero);
    int pos = fr.candidate_of(label);
    if (pos < 0) return lse;  // label unreached: its score is the constant 0
    return t.add(t.scale(t.pick(fr.scores, pos), S(-1)), lse);
}

}  // namespace kgr
