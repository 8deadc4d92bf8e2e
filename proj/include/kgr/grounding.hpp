#pragma once

#include <map>

#include "kgr/kg.hpp"
#include "kgr/rules.hpp"

namespace kgr {

struct Grounding {
    EntityId answer;
    std::vector<Fact> witness;  // one fact per body atom
};

// Depth-first chain matching of a rule body from the query subject. Temporal
// tags are enforced against fact times; TEH additionally requires
// non-decreasing body times strictly before the query time. Returns distinct
// terminal entities with one witness each, in deterministic search order.
std::vector<Grounding> ground_rule(const Rule& rule, const KnowledgeGraph& kg, const Query& query,
                                   size_t budget = 1u << 22);

// Symbolic score: per candidate entity, the sum of confidences of rules with
// at least one grounding ending there.
std::map<EntityId, double> score_by_grounding(const std::vector<Rule>& rules,
                                              const KnowledgeGraph& kg, const Query& query);

}  // namespace kgr
