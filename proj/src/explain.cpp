#include "kgr/explain.hpp"

#include <cstdio>
#include <sstream>

namespace kgr {
namespace {

std::string node_label(const NodeRef& n, const Vocab& v) {
    std::string s = v.entity_name(n.entity);
    if (n.time != kNoTime) s += ":" + v.time_names[n.time];
    return s;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

}  // namespace

std::string render_explanation(const ReasoningGraph& rg, const Vocab& vocab,
                               const std::vector<std::vector<double>>& node_alpha,
                               const std::vector<std::vector<double>>& node_beta,
                               const std::vector<std::vector<double>>& edge_alpha,
                               const std::vector<std::vector<double>>& edge_beta,
                               const std::vector<Rule>& top_rules) {
    std::ostringstream out;
    const Query& q = rg.query;
    out << "query: (" << vocab.entity_name(q.s) << ", " << vocab.relation_name(q.r) << ", ?";
    if (q.t != kNoTime) out << ", " << vocab.time_names[q.t];
    out << ")  scenario=" << to_string(q.scenario) << "\n";

    for (int l = 0; l < rg.n_layers(); ++l) {
        const Layer& layer = rg.layers[l];
        out << "layer " << l << " (" << layer.nodes.size() << " nodes, " << layer.edges.size()
            << " edges)\n";
        for (size_t j = 0; j < layer.nodes.size(); ++j) {
            out << "  [" << j << "] " << node_label(layer.nodes[j], vocab)
                << "  alpha=" << fmt(node_alpha[l][j]) << " beta=" << fmt(node_beta[l][j]) << "\n";
        }
        for (size_t e = 0; e < layer.edges.size(); ++e) {
            const LayerEdge& edge = layer.edges[e];
            out << "    " << node_label(rg.layers[l - 1].nodes[edge.prior], vocab) << " -["
                << vocab.relation_name(edge.rel) << "]-> "
                << node_label(layer.nodes[edge.post], vocab) << "  alpha=" << fmt(edge_alpha[l][e])
                << " beta=" << fmt(edge_beta[l][e]) << "\n";
        }
    }

    out << "top rules:\n";
    for (const Rule& r : top_rules) out << "  " << format_rule(r, vocab) << "\n";
    return out.str();
}

}  // namespace kgr
