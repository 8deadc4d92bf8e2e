#pragma once

#include <string>

#include "kgr/reasoning_graph.hpp"
#include "kgr/rules.hpp"

namespace kgr {

// Plain-text rendering of one reasoning pass: per layer the nodes with their
// propositional/FOL attentions, the edges with relations, then the top
// induced rules for the query.
std::string render_explanation(const ReasoningGraph& rg, const Vocab& vocab,
                               const std::vector<std::vector<double>>& node_alpha,
                               const std::vector<std::vector<double>>& node_beta,
                               const std::vector<std::vector<double>>& edge_alpha,
                               const std::vector<std::vector<double>>& edge_beta,
                               const std::vector<Rule>& top_rules);

}  // namespace kgr
