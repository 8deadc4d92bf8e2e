#pragma once

#include <string>
#include <vector>

#include "kgr/kg.hpp"

namespace kgr {

// Temporal order of a body atom relative to the previous one. TIH bodies
// carry explicit tags; TEH bodies are globally constrained (non-decreasing
// times, all before the head time) and carry no per-atom tags.
enum class OrderTag { None, LePrev, GePrev, Any };

enum class RuleClass { CCH, TIH, TEH };

struct RuleAtom {
    RelationId rel;
    OrderTag tag = OrderTag::None;

    friend bool operator==(const RuleAtom&, const RuleAtom&) = default;
    friend auto operator<=>(const RuleAtom&, const RuleAtom&) = default;
};

// A connected, closed Horn rule: body relations chain X -> Z, head r(X, Z).
struct Rule {
    RelationId head;
    std::vector<RuleAtom> body;
    double confidence = 0.0;
    RuleClass cls = RuleClass::CCH;
};

// One rule per line:
//   <confidence>\t<head>(X,Z) <- r1(X,Y1)[:tag] & r2(Y1,Z)[:tag]
// Tags: `le`/`ge`/`any` mark TIH order constraints, `grow` marks the TEH
// time-growth class. CCH atoms carry no tag. Round-trip parseable.
std::string format_rule(const Rule& rule, const Vocab& vocab);
Rule parse_rule(const std::string& line, const Vocab& vocab);

void write_rules(const std::string& path, const std::vector<Rule>& rules, const Vocab& vocab);
std::vector<Rule> read_rules(const std::string& path, const Vocab& vocab);

// Deterministic export order: by head, then confidence descending, then body.
void sort_rules(std::vector<Rule>& rules);

}  // namespace kgr
