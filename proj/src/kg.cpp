#include "kgr/kg.hpp"

#include <algorithm>

namespace kgr {

Scenario scenario_from_string(std::string_view s) {
    if (s == "SKG_T") return Scenario::SkgT;
    if (s == "SKG_I") return Scenario::SkgI;
    if (s == "TKG_I") return Scenario::TkgI;
    if (s == "TKG_E") return Scenario::TkgE;
    throw std::invalid_argument("unknown scenario: " + std::string(s));
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::SkgT: return "SKG_T";
        case Scenario::SkgI: return "SKG_I";
        case Scenario::TkgI: return "TKG_I";
        case Scenario::TkgE: return "TKG_E";
    }
    return "?";
}

EntityId Vocab::entity(std::string_view name) const {
    auto it = entity_ids.find(std::string(name));
    if (it == entity_ids.end()) throw std::out_of_range("unknown entity: " + std::string(name));
    return it->second;
}

RelationId Vocab::relation(std::string_view name) const {
    auto it = relation_ids.find(std::string(name));
    if (it == relation_ids.end()) throw std::out_of_range("unknown relation: " + std::string(name));
    return it->second;
}

void KnowledgeGraph::build_adjacency() {
    const int n = vocab.n_entities();
    std::vector<int64_t> degree(n, 0);
    for (const Fact& f : facts) {
        ++degree[f.s];
        ++degree[f.o];
    }
    adj_offsets.assign(n + 1, 0);
    for (int e = 0; e < n; ++e) adj_offsets[e + 1] = adj_offsets[e] + degree[e];
    adj.resize(static_cast<size_t>(adj_offsets[n]));

    std::vector<int64_t> cursor(adj_offsets.begin(), adj_offsets.end() - 1);
    for (const Fact& f : facts) {
        adj[cursor[f.s]++] = {f.r, f.o, f.t};
        adj[cursor[f.o]++] = {vocab.inverse(f.r), f.s, f.t};
    }
    for (int e = 0; e < n; ++e) {
        std::sort(adj.begin() + adj_offsets[e], adj.begin() + adj_offsets[e + 1],
                  [](const Edge& a, const Edge& b) {
                      return std::tie(a.r, a.o, a.t) < std::tie(b.r, b.o, b.t);
                  });
    }
}

std::vector<std::pair<RelationId, NodeRef>> posterior_neighbors(
    const KnowledgeGraph& kg, const NodeRef& node, Scenario scenario, TimeId query_time,
    const FactMask* mask) {
    std::vector<std::pair<RelationId, NodeRef>> out;
    for (const KnowledgeGraph::Edge& e : kg.neighbors(node.entity)) {
        if (mask && mask->hides(node.entity, e.r, e.o, e.t)) continue;
        switch (scenario) {
            case Scenario::SkgT:
            case Scenario::SkgI:
                out.push_back({e.r, NodeRef{e.o, kNoTime}});
                break;
            case Scenario::TkgI:
                // No time restriction; node time is dropped again by fusion.
                out.push_back({e.r, NodeRef{e.o, e.t}});
                break;
            case Scenario::TkgE: {
                if (e.t >= query_time) break;
                if (node.time != kNoTime && e.t < node.time) break;
                out.push_back({e.r, NodeRef{e.o, e.t}});
                break;
            }
        }
    }
    return out;
}

}  // namespace kgr
