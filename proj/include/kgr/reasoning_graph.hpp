#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kgr/kg.hpp"

namespace kgr {

// One edge of the reasoning graph; lives with its target layer. `fact_time`
// keeps the underlying fact's time even when fusion drops node times (FARI
// needs it for temporal order tags). Self edges carry the prior node's time
// in extrapolation and kNoTime otherwise.
struct LayerEdge {
    int prior;  // index into the previous layer's nodes
    RelationId rel;
    int post;  // index into this layer's nodes
    TimeId fact_time = kNoTime;
};

struct Layer {
    std::vector<NodeRef> nodes;
    std::vector<LayerEdge> edges;  // empty for layer 0
};

struct ExpansionConfig {
    int L = 3;        // iteration count / rule length bound
    int M = 0;        // max sampled posterior neighbors per node (TKG_E; 0 = unlimited)
    int N = 0;        // top-N edges kept per layer after attention scoring (TKG_E; 0 = no pruning)
    uint64_t rng_seed = 0;
};

// Per-query layered DAG grown by posterior-neighbor expansion. Layer 0 holds
// exactly the query entity.
struct ReasoningGraph {
    Query query;
    std::vector<Layer> layers;

    int n_layers() const { return static_cast<int>(layers.size()); }
    const Layer& last() const { return layers.back(); }
};

ReasoningGraph init_reasoning_graph(const Query& query);

// Expands the last layer: posterior neighbors of every node (scenario
// filtered, sampled down to M for extrapolation) plus one self successor per
// node. Duplicate (entity,time) targets are merged; interpolation layers are
// fused to entity nodes before returning. Deterministic given rng state.
Layer expand_layer(ReasoningGraph& rg, const KnowledgeGraph& kg, const ExpansionConfig& cfg,
                   std::mt19937_64& rng, const FactMask* mask = nullptr);

// Collapses entity-time nodes with equal entity into one time-less node;
// incoming edges are retargeted and keep their fact time. Idempotent.
Layer fuse_entity_nodes(const Layer& layer);

// exp(t'-t̃) normalized over all candidates (max-shifted for stability).
std::vector<double> time_sampling_weights(const std::vector<double>& candidate_times,
                                          double query_time);

// Time-aware weighted sampling without replacement using the weights above.
// Order of survivors follows the input order.
std::vector<std::pair<RelationId, NodeRef>> sample_posterior(
    std::vector<std::pair<RelationId, NodeRef>> candidates, int max_nodes,
    const std::vector<double>& time_values, double query_time, std::mt19937_64& rng);

// Keeps the N edges with largest attention (ties by edge order) and drops
// nodes left without incoming edges. Returns the pruned layer plus the kept
// edge indices (in original order) via `kept`.
Layer prune_edges_topN(const Layer& layer, const std::vector<double>& edge_attentions, int N,
                       std::vector<int>* kept = nullptr);

}  // namespace kgr
