#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgr {

using EntityId = int32_t;
using RelationId = int32_t;
using TimeId = int32_t;

constexpr TimeId kNoTime = -1;

enum class Scenario { SkgT, SkgI, TkgI, TkgE };

inline bool is_temporal(Scenario s) { return s == Scenario::TkgI || s == Scenario::TkgE; }

Scenario scenario_from_string(std::string_view s);
std::string to_string(Scenario s);

// splitmix64 step; used to derive independent per-query RNG streams.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Entity, relation and time vocabularies with dense zero-based ids.
// Relation layout: base relations [0, n_base), their reverses [n_base, 2*n_base),
// and one reserved `self` relation at 2*n_base. `self` never appears in facts.
struct Vocab {
    std::vector<std::string> entity_names;
    std::unordered_map<std::string, EntityId> entity_ids;

    std::vector<std::string> relation_names;  // full table incl. reverses and self
    std::unordered_map<std::string, RelationId> relation_ids;
    int n_base_relations = 0;

    std::vector<std::string> time_names;   // sorted by value
    std::vector<double> time_values;       // raw numeric value per time id
    std::unordered_map<std::string, TimeId> time_ids;

    int n_entities() const { return static_cast<int>(entity_names.size()); }
    int n_relations() const { return 2 * n_base_relations + 1; }
    int n_times() const { return static_cast<int>(time_values.size()); }

    RelationId self_relation() const { return 2 * n_base_relations; }
    bool is_self(RelationId r) const { return r == self_relation(); }

    RelationId inverse(RelationId r) const {
        if (is_self(r)) throw std::logic_error("self relation has no reverse");
        return r < n_base_relations ? r + n_base_relations : r - n_base_relations;
    }

    EntityId entity(std::string_view name) const;
    RelationId relation(std::string_view name) const;
    const std::string& entity_name(EntityId e) const { return entity_names.at(e); }
    const std::string& relation_name(RelationId r) const { return relation_names.at(r); }
    double time_value(TimeId t) const { return time_values.at(t); }
};

struct Fact {
    EntityId s;
    RelationId r;
    EntityId o;
    TimeId t = kNoTime;

    friend bool operator==(const Fact&, const Fact&) = default;
};

// A node of the reasoning graph: an entity, or an entity-time pair when the
// scenario keeps per-node time (extrapolation; interpolation before fusion).
struct NodeRef {
    EntityId entity;
    TimeId time = kNoTime;

    friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct Query {
    EntityId s;
    RelationId r;
    TimeId t = kNoTime;
    Scenario scenario = Scenario::SkgT;
    EntityId label = -1;
};

// Directed edges that must be hidden while answering one training query
// (the query fact itself, in both stored directions).
struct FactMask {
    EntityId s;
    RelationId r;
    EntityId o;
    RelationId r_inv;
    TimeId t = kNoTime;

    bool hides(EntityId from, RelationId rel, EntityId to, TimeId time) const {
        if (time != t) return false;
        return (from == s && rel == r && to == o) || (from == o && rel == r_inv && to == s);
    }
};

// Immutable after load; safe for concurrent read-only use.
struct KnowledgeGraph {
    struct Edge {
        RelationId r;
        EntityId o;
        TimeId t;
    };

    Vocab vocab;
    std::vector<Fact> facts;  // stored facts, original direction only
    bool temporal = false;

    // CSR adjacency over subject entity id; each fact appears once per
    // direction (under r and under r^-1), entries sorted by (r, o, t).
    std::vector<int64_t> adj_offsets;
    std::vector<Edge> adj;

    std::span<const Edge> neighbors(EntityId e) const {
        return {adj.data() + adj_offsets[e], adj.data() + adj_offsets[e + 1]};
    }

    void build_adjacency();
};

// Scenario-aware posterior-neighbor lookup. The `self` successor is appended
// by reasoning-graph expansion, never returned here. `mask`, when given,
// hides one fact in both directions. For temporal scenarios the returned
// NodeRef time is the fact time.
std::vector<std::pair<RelationId, NodeRef>> posterior_neighbors(
    const KnowledgeGraph& kg, const NodeRef& node, Scenario scenario,
    TimeId query_time = kNoTime, const FactMask* mask = nullptr);

}  // namespace kgr
