#include "kgr/grounding.hpp"

#include <algorithm>
#include <set>

namespace kgr {
namespace {

// Adjacency slice for one relation (entries are sorted by relation first).
std::span<const KnowledgeGraph::Edge> neighbors_for(const KnowledgeGraph& kg, EntityId e,
                                                    RelationId r) {
    auto all = kg.neighbors(e);
    auto lo = std::lower_bound(all.begin(), all.end(), r,
                               [](const KnowledgeGraph::Edge& x, RelationId rel) { return x.r < rel; });
    auto hi = std::upper_bound(all.begin(), all.end(), r,
                               [](RelationId rel, const KnowledgeGraph::Edge& x) { return rel < x.r; });
    return {all.data() + (lo - all.begin()), all.data() + (hi - all.begin())};
}

struct Search {
    const Rule& rule;
    const KnowledgeGraph& kg;
    const Query& query;
    size_t budget;
    std::set<EntityId> found;
    std::vector<Grounding> out;
    std::vector<Fact> path;

    bool admissible(size_t atom_idx, TimeId t, TimeId prev) const {
        if (rule.cls == RuleClass::TEH) {
            if (t == kNoTime || query.t == kNoTime) return false;
            if (t >= query.t) return false;                      // strictly before head time
            if (prev != kNoTime && t < prev) return false;       // non-decreasing
            return true;
        }
        if (rule.cls == RuleClass::TIH) {
            switch (rule.body[atom_idx].tag) {
                case OrderTag::LePrev: return prev == kNoTime || t <= prev;
                case OrderTag::GePrev: return prev == kNoTime || t >= prev;
                default: return true;
            }
        }
        return true;
    }

    void dfs(EntityId at, size_t atom_idx, TimeId prev) {
        if (budget == 0) return;
        --budget;
        if (atom_idx == rule.body.size()) {
            if (found.insert(at).second) out.push_back({at, path});
            return;
        }
        for (const auto& e : neighbors_for(kg, at, rule.body[atom_idx].rel)) {
            if (!admissible(atom_idx, e.t, prev)) continue;
            path.push_back({at, e.r, e.o, e.t});
            dfs(e.o, atom_idx + 1, e.t == kNoTime ? prev : e.t);
            path.pop_back();
        }
    }
};

}  // namespace

std::vector<Grounding> ground_rule(const Rule& rule, const KnowledgeGraph& kg, const Query& query,
                                   size_t budget) {
    if (rule.body.empty()) throw std::invalid_argument("ground_rule: empty body");
    Search s{rule, kg, query, budget, {}, {}, {}};
    s.dfs(query.s, 0, kNoTime);
    return s.out;
}

std::map<EntityId, double> score_by_grounding(const std::vector<Rule>& rules,
                                              const KnowledgeGraph& kg, const Query& query) {
    std::map<EntityId, double> scores;
    for (const Rule& r : rules) {
        if (r.head != query.r) continue;
        for (const Grounding& g : ground_rule(r, kg, query)) scores[g.answer] += r.confidence;
    }
    return scores;
}

}  // namespace kgr
