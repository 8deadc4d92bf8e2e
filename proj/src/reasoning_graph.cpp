#include "kgr/reasoning_graph.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace kgr {

ReasoningGraph init_reasoning_graph(const Query& query) {
    ReasoningGraph rg;
    rg.query = query;
    rg.layers.push_back(Layer{{NodeRef{query.s, kNoTime}}, {}});
    return rg;
}

std::vector<double> time_sampling_weights(const std::vector<double>& candidate_times,
                                          double query_time) {
    std::vector<double> w(candidate_times.size());
    double max_dt = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < w.size(); ++i) {
        w[i] = candidate_times[i] - query_time;
        max_dt = std::max(max_dt, w[i]);
    }
    double sum = 0;
    for (double& x : w) {
        x = std::exp(x - max_dt);
        sum += x;
    }
    for (double& x : w) x /= sum;
    return w;
}

std::vector<std::pair<RelationId, NodeRef>> sample_posterior(
    std::vector<std::pair<RelationId, NodeRef>> candidates, int max_nodes,
    const std::vector<double>& time_values, double query_time, std::mt19937_64& rng) {
    const int n = static_cast<int>(candidates.size());
    if (max_nodes <= 0 || n <= max_nodes) return candidates;

    std::vector<double> times(n);
    for (int i = 0; i < n; ++i) times[i] = time_values[candidates[i].second.time];
    std::vector<double> w = time_sampling_weights(times, query_time);

    std::vector<int> picked;
    std::vector<bool> taken(n, false);
    for (int k = 0; k < max_nodes; ++k) {
        double total = 0;
        for (int i = 0; i < n; ++i)
            if (!taken[i]) total += w[i];
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        int choice = -1;
        for (int i = 0; i < n; ++i) {
            if (taken[i]) continue;
            choice = i;
            u -= w[i];
            if (u <= 0) break;
        }
        taken[choice] = true;
        picked.push_back(choice);
    }
    std::sort(picked.begin(), picked.end());
    std::vector<std::pair<RelationId, NodeRef>> out;
    out.reserve(picked.size());
    for (int i : picked) out.push_back(candidates[i]);
    return out;
}

Layer fuse_entity_nodes(const Layer& layer) {
    Layer fused;
    std::map<EntityId, int> index;
    std::vector<int> remap(layer.nodes.size());
    for (size_t i = 0; i < layer.nodes.size(); ++i) {
        EntityId e = layer.nodes[i].entity;
        auto [it, fresh] = index.try_emplace(e, static_cast<int>(fused.nodes.size()));
        if (fresh) fused.nodes.push_back(NodeRef{e, kNoTime});
        remap[i] = it->second;
    }
    fused.edges = layer.edges;
    for (LayerEdge& e : fused.edges) e.post = remap[e.post];
    return fused;
}

Layer expand_layer(ReasoningGraph& rg, const KnowledgeGraph& kg, const ExpansionConfig& cfg,
                   std::mt19937_64& rng, const FactMask* mask) {
    const Scenario sc = rg.query.scenario;
    const Layer& cur = rg.layers.back();
    const bool root_layer = rg.n_layers() == 1;

    Layer next;
    std::map<std::pair<EntityId, TimeId>, int> index;
    auto node_index = [&](const NodeRef& n) {
        auto [it, fresh] =
            index.try_emplace(std::make_pair(n.entity, n.time), static_cast<int>(next.nodes.size()));
        if (fresh) next.nodes.push_back(n);
        return it->second;
    };

    for (int i = 0; i < static_cast<int>(cur.nodes.size()); ++i) {
        const NodeRef& node = cur.nodes[i];
        auto cands = posterior_neighbors(kg, node, sc, rg.query.t, mask);
        if (sc == Scenario::TkgE && cfg.M > 0)
            cands = sample_posterior(std::move(cands), cfg.M, kg.vocab.time_values,
                                     kg.vocab.time_value(rg.query.t), rng);
        for (const auto& [rel, target] : cands)
            next.edges.push_back({i, rel, node_index(target), target.time});

        // Self successor; in extrapolation the root's copy takes the minimum time.
        NodeRef self_target = node;
        TimeId self_time = kNoTime;
        if (sc == Scenario::TkgE) {
            self_target.time = root_layer ? (kg.vocab.n_times() > 0 ? 0 : kNoTime) : node.time;
            self_time = self_target.time;
        }
        next.edges.push_back({i, kg.vocab.self_relation(), node_index(self_target), self_time});
    }

    if (sc == Scenario::TkgI) next = fuse_entity_nodes(next);
    rg.layers.push_back(next);
    return next;
}

Layer prune_edges_topN(const Layer& layer, const std::vector<double>& edge_attentions, int N,
                       std::vector<int>* kept_out) {
    const int n_edges = static_cast<int>(layer.edges.size());
    std::vector<int> order(n_edges);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return edge_attentions[a] > edge_attentions[b];
    });
    if (N < n_edges) order.resize(N);
    std::sort(order.begin(), order.end());

    Layer pruned;
    std::vector<int> remap(layer.nodes.size(), -1);
    for (int e : order) {
        const LayerEdge& edge = layer.edges[e];
        if (remap[edge.post] < 0) {
            remap[edge.post] = static_cast<int>(pruned.nodes.size());
            pruned.nodes.push_back(layer.nodes[edge.post]);
        }
        pruned.edges.push_back({edge.prior, edge.rel, remap[edge.post], edge.fact_time});
    }
    if (kept_out) *kept_out = order;
    return pruned;
}

}  // namespace kgr
