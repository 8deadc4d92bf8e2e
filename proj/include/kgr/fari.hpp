#pragma once

#include "kgr/reasoning_graph.hpp"
#include "kgr/rules.hpp"

namespace kgr {

struct FariOptions {
    bool normalize = true;         // per-layer softmax over node weights
    int max_bodies_per_node = 0;   // 0 = exact; otherwise keep top-k bodies by weight
};

// Per-layer node weights produced while inducing (post-normalization when
// enabled), plus per-node body-confidence sums at the final layer.
struct FariTrace {
    std::vector<std::vector<double>> node_weights;
    std::vector<double> final_body_sums;
};

// Forward attentive rule induction: walk the reasoning graph layer by layer,
// extending every rule body along every edge with confidence scaled by the
// edge's FOL attention, then emit one rule per surviving body of the last
// layer. Self atoms are deleted, temporal order tags attached, duplicate
// bodies merged (confidences summed, capped at 1).
// `edge_beta[l]` must align with rg.layers[l].edges for l >= 1.
std::vector<Rule> induce_rules(const ReasoningGraph& rg,
                               const std::vector<std::vector<double>>& edge_beta,
                               const Vocab& vocab, const FariOptions& opt = {},
                               FariTrace* trace = nullptr);

// Independent check of the same quantity: enumerate every root-to-node path
// explicitly and sum the per-path attention products under the same
// normalization schedule. Intended for small graphs; throws when the path
// count exceeds `max_paths`.
std::vector<std::vector<double>> path_sum_oracle(const ReasoningGraph& rg,
                                                 const std::vector<std::vector<double>>& edge_beta,
                                                 bool normalize = true,
                                                 size_t max_paths = 1u << 20);

}  // namespace kgr
