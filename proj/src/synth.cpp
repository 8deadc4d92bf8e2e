#include "kgr/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

namespace kgr {

Vocab build_vocab(const std::vector<std::string>& entities,
                  const std::vector<std::string>& base_relations,
                  const std::vector<double>& time_values) {
    Vocab v;
    for (const auto& e : entities) {
        v.entity_ids.emplace(e, static_cast<EntityId>(v.entity_names.size()));
        v.entity_names.push_back(e);
    }
    for (const auto& r : base_relations) {
        v.relation_ids.emplace(r, static_cast<RelationId>(v.relation_names.size()));
        v.relation_names.push_back(r);
    }
    v.n_base_relations = static_cast<int>(base_relations.size());
    for (int r = 0; r < v.n_base_relations; ++r) {
        std::string rev = v.relation_names[r] + "^-1";
        v.relation_ids.emplace(rev, static_cast<RelationId>(v.relation_names.size()));
        v.relation_names.push_back(std::move(rev));
    }
    v.relation_ids.emplace("__self__", static_cast<RelationId>(v.relation_names.size()));
    v.relation_names.push_back("__self__");

    for (size_t i = 0; i < time_values.size(); ++i) {
        if (i > 0 && time_values[i] <= time_values[i - 1])
            throw std::invalid_argument("build_vocab: time values must be strictly increasing");
        std::string name = std::to_string(static_cast<long long>(time_values[i]));
        v.time_ids.emplace(name, static_cast<TimeId>(i));
        v.time_names.push_back(name);
        v.time_values.push_back(time_values[i]);
    }
    return v;
}

namespace {

struct FactLess {
    bool operator()(const Fact& a, const Fact& b) const {
        return std::tie(a.s, a.r, a.o, a.t) < std::tie(b.s, b.r, b.o, b.t);
    }
};

// All chain groundings of `body` over `facts`, with non-decreasing times in
// temporal mode. Returns (start, end, last body time).
std::vector<std::tuple<EntityId, EntityId, TimeId>> chain_groundings(
    const std::vector<Fact>& facts, const std::vector<int>& body, bool temporal) {
    std::vector<std::tuple<EntityId, EntityId, TimeId>> frontier;
    for (const Fact& f : facts)
        if (f.r == body[0]) frontier.emplace_back(f.s, f.o, f.t);
    for (size_t k = 1; k < body.size(); ++k) {
        std::vector<std::tuple<EntityId, EntityId, TimeId>> next;
        for (const auto& [s, mid, t] : frontier)
            for (const Fact& f : facts) {
                if (f.r != body[k] || f.s != mid) continue;
                if (temporal && f.t < t) continue;  // TEH: non-decreasing body times
                next.emplace_back(s, f.o, f.t);
            }
        frontier = std::move(next);
    }
    return frontier;
}

}  // namespace

SynthResult synth_kg(const SynthSpec& spec) {
    for (const auto& [head, body] : spec.rules) {
        if (head < 0 || head >= spec.n_relations)
            throw std::invalid_argument("synth_kg: rule head out of range");
        if (body.empty()) throw std::invalid_argument("synth_kg: empty rule body");
        for (int r : body)
            if (r < 0 || r >= spec.n_relations)
                throw std::invalid_argument("synth_kg: rule body relation out of range");
    }

    std::set<int> heads;
    for (const auto& [head, body] : spec.rules) heads.insert(head);
    for (const auto& [head, body] : spec.rules)
        for (int r : body)
            if (heads.contains(r))
                throw std::invalid_argument(
                    "synth_kg: rule bodies may not use head relations (closure would need "
                    "iteration)");
    std::vector<int> body_pool;
    for (int r = 0; r < spec.n_relations; ++r)
        if (!heads.contains(r)) body_pool.push_back(r);
    if (body_pool.empty()) throw std::invalid_argument("synth_kg: every relation is a rule head");

    std::mt19937_64 rng(spec.seed);
    auto rand_entity = [&] {
        return static_cast<EntityId>(std::uniform_int_distribution<int>(0, spec.n_entities - 1)(rng));
    };
    const int base_time_cap = std::max(1, spec.n_times * 3 / 4);
    auto rand_base_time = [&]() -> TimeId {
        if (!spec.temporal) return kNoTime;
        return std::uniform_int_distribution<int>(0, base_time_cap - 1)(rng);
    };

    std::set<Fact, FactLess> seen;
    std::vector<Fact> base;
    for (EntityId s = 0; s < spec.n_entities; ++s)
        for (int k = 0; k < spec.facts_per_entity; ++k) {
            int r = body_pool[std::uniform_int_distribution<size_t>(0, body_pool.size() - 1)(rng)];
            Fact f{s, r, rand_entity(), rand_base_time()};
            if (seen.insert(f).second) base.push_back(f);
        }

    // Noise goes in before entailment so the planted rules stay sound on the
    // final graph: every body chain present in the data implies its head fact.
    const auto n_noise = static_cast<size_t>(spec.noise_ratio * 1.5 * base.size());
    std::vector<Fact> noise;
    for (size_t k = 0; k < n_noise; ++k) {
        Fact f{rand_entity(),
               std::uniform_int_distribution<int>(0, spec.n_relations - 1)(rng), rand_entity(),
               spec.temporal ? static_cast<TimeId>(std::uniform_int_distribution<int>(
                                   0, spec.n_times - 1)(rng))
                             : kNoTime};
        if (seen.insert(f).second) noise.push_back(f);
    }

    std::vector<Fact> body_facts = base;
    body_facts.insert(body_facts.end(), noise.begin(), noise.end());
    std::vector<Fact> entailed;
    for (const auto& [head, body] : spec.rules)
        for (const auto& [s, o, t_last] : chain_groundings(body_facts, body, spec.temporal)) {
            TimeId t = kNoTime;
            if (spec.temporal) {
                if (t_last + 1 >= spec.n_times) continue;  // no room for a later head time
                t = static_cast<TimeId>(
                    std::uniform_int_distribution<int>(t_last + 1, spec.n_times - 1)(rng));
            }
            Fact f{s, head, o, t};
            if (seen.insert(f).second) entailed.push_back(f);
        }
    if (entailed.empty()) throw std::invalid_argument("synth_kg: planted rules entail no facts");

    // Hold out a slice of the entailed facts for evaluation. In temporal mode
    // the latest head times go to test, matching the extrapolation setting.
    std::vector<Fact> pool = entailed;
    if (spec.temporal)
        std::stable_sort(pool.begin(), pool.end(),
                         [](const Fact& a, const Fact& b) { return a.t < b.t; });
    else
        std::shuffle(pool.begin(), pool.end(), rng);
    const size_t n_test = static_cast<size_t>(spec.test_fraction * pool.size());
    const size_t n_valid = static_cast<size_t>(spec.valid_fraction * pool.size());

    SynthResult res;
    res.test_facts.assign(pool.end() - n_test, pool.end());
    res.valid_facts.assign(pool.end() - n_test - n_valid, pool.end() - n_test);
    res.train_facts = base;
    res.train_facts.insert(res.train_facts.end(), pool.begin(), pool.end() - n_test - n_valid);
    res.train_facts.insert(res.train_facts.end(), noise.begin(), noise.end());

    // Vocab over all entities/relations; times over the full configured range.
    std::vector<std::string> entity_names, relation_names;
    for (int e = 0; e < spec.n_entities; ++e) entity_names.push_back("e" + std::to_string(e));
    for (int r = 0; r < spec.n_relations; ++r) relation_names.push_back("r" + std::to_string(r));
    std::vector<double> times;
    if (spec.temporal)
        for (int t = 0; t < spec.n_times; ++t) times.push_back(static_cast<double>(t));

    const Scenario sc = spec.temporal ? Scenario::TkgE : Scenario::SkgT;
    Dataset& ds = res.dataset;
    ds.scenario = sc;
    ds.kg.vocab = build_vocab(entity_names, relation_names, times);
    ds.kg.temporal = spec.temporal;
    ds.kg.facts = res.train_facts;
    ds.kg.build_adjacency();

    const Vocab& v = ds.kg.vocab;
    for (const Fact& f : res.train_facts) {
        ds.queries.train.push_back({f.s, f.r, f.t, sc, f.o});
        ds.queries.train.push_back({f.o, v.inverse(f.r), f.t, sc, f.s});
    }
    for (const Fact& f : res.valid_facts) ds.queries.valid.push_back({f.s, f.r, f.t, sc, f.o});
    for (const Fact& f : res.test_facts) ds.queries.test.push_back({f.s, f.r, f.t, sc, f.o});

    for (const auto& [head, body] : spec.rules) {
        Rule r;
        r.head = head;
        for (int b : body) r.body.push_back({b, OrderTag::None});
        r.confidence = 1.0;
        r.cls = spec.temporal ? RuleClass::TEH : RuleClass::CCH;
        res.planted.push_back(r);
    }
    return res;
}

void write_synth_dataset(const std::string& dir, const SynthResult& synth) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const Vocab& v = synth.dataset.kg.vocab;
    auto dump = [&](const std::string& name, const std::vector<Fact>& facts) {
        std::ofstream out(fs::path(dir) / name);
        if (!out) throw std::runtime_error("cannot write " + name + " in " + dir);
        for (const Fact& f : facts) {
            out << v.entity_name(f.s) << '\t' << v.relation_name(f.r) << '\t'
                << v.entity_name(f.o);
            if (f.t != kNoTime) out << '\t' << v.time_names[f.t];
            out << '\n';
        }
    };
    dump("train.txt", synth.train_facts);
    dump("valid.txt", synth.valid_facts);
    dump("test.txt", synth.test_facts);
    write_rules((fs::path(dir) / "rules.txt").string(), synth.planted, v);
}

}  // namespace kgr
