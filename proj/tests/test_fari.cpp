#include <doctest.h>

#include <set>

#include "kgr/fari.hpp"
#include "kgr/grounding.hpp"
#include "kgr/synth.hpp"

using namespace kgr;

namespace {

Vocab toy_vocab(int n_rel) {
    std::vector<std::string> ents{"root", "u", "v", "o", "a"};
    std::vector<std::string> rels;
    for (int i = 0; i < n_rel; ++i) rels.push_back("r" + std::to_string(i + 1));
    return build_vocab(ents, rels, {});
}

// root -(r1)-> u, root -(r2)-> v; u -(r3)-> o, v -(r3)-> o.
ReasoningGraph diamond_graph(const Vocab& v) {
    ReasoningGraph rg = init_reasoning_graph(Query{0, v.relation("r1"), kNoTime, Scenario::SkgT, -1});
    Layer l1;
    l1.nodes = {{1, kNoTime}, {2, kNoTime}};
    l1.edges = {{0, v.relation("r1"), 0, kNoTime}, {0, v.relation("r2"), 1, kNoTime}};
    Layer l2;
    l2.nodes = {{3, kNoTime}};
    l2.edges = {{0, v.relation("r3"), 0, kNoTime}, {1, v.relation("r3"), 0, kNoTime}};
    rg.layers.push_back(l1);
    rg.layers.push_back(l2);
    return rg;
}

// Random layered graph: every node has at least one in-edge, attention values
// per layer are positive and sum to 1 (like real softmax outputs).
struct RandomGraph {
    ReasoningGraph rg;
    std::vector<std::vector<double>> beta;
};

RandomGraph random_layered_graph(std::mt19937_64& rng, const Vocab& v, int max_layers,
                                 int max_nodes) {
    RandomGraph g;
    g.rg = init_reasoning_graph(Query{0, 0, kNoTime, Scenario::SkgT, -1});
    g.beta.push_back({});
    const int L = 1 + static_cast<int>(rng() % max_layers);
    int prev = 1;
    for (int l = 1; l <= L; ++l) {
        Layer layer;
        const int n = 1 + static_cast<int>(rng() % max_nodes);
        for (int j = 0; j < n; ++j) layer.nodes.push_back({static_cast<EntityId>(j), kNoTime});
        for (int j = 0; j < n; ++j)
            layer.edges.push_back({static_cast<int>(rng() % prev),
                                   static_cast<RelationId>(rng() % v.n_relations()), j, kNoTime});
        const int extra = static_cast<int>(rng() % (2 * max_nodes));
        for (int e = 0; e < extra; ++e)
            layer.edges.push_back({static_cast<int>(rng() % prev),
                                   static_cast<RelationId>(rng() % v.n_relations()),
                                   static_cast<int>(rng() % n), kNoTime});
        std::vector<double> b(layer.edges.size());
        double sum = 0;
        for (double& x : b) {
            x = 0.05 + std::uniform_real_distribution<double>(0, 1)(rng);
            sum += x;
        }
        for (double& x : b) x /= sum;
        g.rg.layers.push_back(layer);
        g.beta.push_back(b);
        prev = n;
    }
    return g;
}

}  // namespace

TEST_CASE("diamond example: path products and the path-sum oracle") {
    Vocab v = toy_vocab(3);
    ReasoningGraph rg = diamond_graph(v);
    std::vector<std::vector<double>> beta{{}, {0.6, 0.4}, {0.5, 0.5}};

    SUBCASE("raw (unnormalized) body confidences are the per-path products") {
        FariOptions opt;
        opt.normalize = false;
        FariTrace trace;
        auto rules = induce_rules(rg, beta, v, opt, &trace);
        REQUIRE(rules.size() == 2);
        // sorted by confidence descending within the head
        CHECK(rules[0].confidence == doctest::Approx(0.30).epsilon(1e-12));
        CHECK(rules[0].body.size() == 2);
        CHECK(rules[0].body[0].rel == v.relation("r1"));
        CHECK(rules[0].body[1].rel == v.relation("r3"));
        CHECK(rules[1].confidence == doctest::Approx(0.20).epsilon(1e-12));
        CHECK(rules[1].body[0].rel == v.relation("r2"));
        CHECK(rules[0].head == v.relation("r1"));
        CHECK(rules[0].cls == RuleClass::CCH);
        // the terminal node's weight is the path sum 0.5
        CHECK(trace.node_weights[2][0] == doctest::Approx(0.50).epsilon(1e-12));

        auto oracle = path_sum_oracle(rg, beta, false);
        CHECK(oracle[2][0] == doctest::Approx(0.50).epsilon(1e-12));
        CHECK(oracle[1][0] == doctest::Approx(0.6).epsilon(1e-12));
    }
    SUBCASE("normalized runs keep oracle equivalence") {
        FariTrace trace;
        induce_rules(rg, beta, v, {}, &trace);
        auto oracle = path_sum_oracle(rg, beta, true);
        for (size_t l = 0; l < oracle.size(); ++l)
            for (size_t j = 0; j < oracle[l].size(); ++j)
                CHECK(trace.node_weights[l][j] == doctest::Approx(oracle[l][j]).epsilon(1e-12));
    }
}

TEST_CASE("self atoms are stripped; all-self bodies are discarded") {
    Vocab v = toy_vocab(1);
    const RelationId self = v.self_relation();
    ReasoningGraph rg = init_reasoning_graph(Query{0, 0, kNoTime, Scenario::SkgT, -1});
    Layer l1;
    l1.nodes = {{0, kNoTime}, {4, kNoTime}};
    l1.edges = {{0, self, 0, kNoTime}, {0, v.relation("r1"), 1, kNoTime}};
    Layer l2;
    l2.nodes = {{0, kNoTime}, {3, kNoTime}};
    l2.edges = {{0, self, 0, kNoTime}, {1, v.relation("r1^-1"), 1, kNoTime}};
    rg.layers.push_back(l1);
    rg.layers.push_back(l2);
    std::vector<std::vector<double>> beta{{}, {0.5, 0.5}, {0.5, 0.5}};

    auto rules = induce_rules(rg, beta, v, {});
    // root-self-self path vanishes; [self, r1^-1]... wait [r1, r1^-1] stays (2 atoms)
    REQUIRE(rules.size() == 1);
    CHECK(rules[0].body.size() == 2);
    CHECK(rules[0].body[0].rel == v.relation("r1"));
    CHECK(rules[0].body[1].rel == v.relation("r1^-1"));
    for (const Rule& r : rules)
        for (const RuleAtom& a : r.body) CHECK(!v.is_self(a.rel));
}

TEST_CASE("single self hop then a relation leaves a length-1 body") {
    Vocab v = toy_vocab(1);
    const RelationId self = v.self_relation();
    ReasoningGraph rg = init_reasoning_graph(Query{0, 0, kNoTime, Scenario::SkgT, -1});
    Layer l1;
    l1.nodes = {{0, kNoTime}};
    l1.edges = {{0, self, 0, kNoTime}};
    Layer l2;
    l2.nodes = {{3, kNoTime}};
    l2.edges = {{0, v.relation("r1"), 0, kNoTime}};
    rg.layers.push_back(l1);
    rg.layers.push_back(l2);
    std::vector<std::vector<double>> beta{{}, {1.0}, {1.0}};
    auto rules = induce_rules(rg, beta, v, {});
    REQUIRE(rules.size() == 1);
    CHECK(rules[0].body.size() == 1);
    CHECK(rules[0].body[0].rel == v.relation("r1"));
}

TEST_CASE("oracle equivalence on random graphs") {
    std::mt19937_64 rng(555);
    Vocab v = toy_vocab(4);
    for (int it = 0; it < 60; ++it) {
        RandomGraph g = random_layered_graph(rng, v, 4, 8);
        FariTrace trace;
        auto rules = induce_rules(g.rg, g.beta, v, {}, &trace);
        auto oracle = path_sum_oracle(g.rg, g.beta, true, 1u << 22);

        REQUIRE(trace.node_weights.size() == oracle.size());
        for (size_t l = 0; l < oracle.size(); ++l) {
            REQUIRE(trace.node_weights[l].size() == oracle[l].size());
            for (size_t j = 0; j < oracle[l].size(); ++j)
                CHECK(trace.node_weights[l][j] ==
                      doctest::Approx(oracle[l][j]).epsilon(1e-9));
        }
        // per-node body-confidence sums equal the final node weights
        const auto& final_w = trace.node_weights.back();
        for (size_t j = 0; j < final_w.size(); ++j)
            CHECK(trace.final_body_sums[j] == doctest::Approx(final_w[j]).epsilon(1e-9));
        // confidences lie in [0,1]; no self atoms survive
        for (const Rule& r : rules) {
            CHECK(r.confidence >= 0.0);
            CHECK(r.confidence <= 1.0);
            for (const RuleAtom& a : r.body) CHECK(!v.is_self(a.rel));
        }
    }
}

TEST_CASE("temporal order tags") {
    std::vector<std::string> ents{"root", "u", "o"};
    Vocab v = build_vocab(ents, {"r1", "r2"}, {0.0, 1.0, 2.0});

    SUBCASE("interpolation bodies carry relative-order tags") {
        ReasoningGraph rg =
            init_reasoning_graph(Query{0, v.relation("r1"), 2, Scenario::TkgI, -1});
        Layer l1;
        l1.nodes = {{1, kNoTime}};
        l1.edges = {{0, v.relation("r1"), 0, 2}};  // fact at time 2
        Layer l2;
        l2.nodes = {{2, kNoTime}};
        l2.edges = {{0, v.relation("r2"), 0, 0}};  // fact at time 0 (earlier)
        rg.layers.push_back(l1);
        rg.layers.push_back(l2);
        std::vector<std::vector<double>> beta{{}, {1.0}, {1.0}};
        auto rules = induce_rules(rg, beta, v, {});
        REQUIRE(rules.size() == 1);
        CHECK(rules[0].cls == RuleClass::TIH);
        CHECK(rules[0].body[0].tag == OrderTag::Any);
        CHECK(rules[0].body[1].tag == OrderTag::LePrev);
    }
    SUBCASE("extrapolation bodies are tagged as the time-growth class") {
        ReasoningGraph rg =
            init_reasoning_graph(Query{0, v.relation("r1"), 2, Scenario::TkgE, -1});
        Layer l1;
        l1.nodes = {{1, 0}};
        l1.edges = {{0, v.relation("r1"), 0, 0}};
        Layer l2;
        l2.nodes = {{2, 1}};
        l2.edges = {{0, v.relation("r2"), 0, 1}};
        rg.layers.push_back(l1);
        rg.layers.push_back(l2);
        std::vector<std::vector<double>> beta{{}, {1.0}, {1.0}};
        auto rules = induce_rules(rg, beta, v, {});
        REQUIRE(rules.size() == 1);
        CHECK(rules[0].cls == RuleClass::TEH);
    }
}

TEST_CASE("duplicate bodies merge with confidences summed and capped") {
    Vocab v = toy_vocab(2);
    // two parallel paths with the same relation sequence
    ReasoningGraph rg = init_reasoning_graph(Query{0, 0, kNoTime, Scenario::SkgT, -1});
    Layer l1;
    l1.nodes = {{1, kNoTime}, {2, kNoTime}};
    l1.edges = {{0, v.relation("r1"), 0, kNoTime}, {0, v.relation("r1"), 1, kNoTime}};
    Layer l2;
    l2.nodes = {{3, kNoTime}};
    l2.edges = {{0, v.relation("r2"), 0, kNoTime}, {1, v.relation("r2"), 0, kNoTime}};
    rg.layers.push_back(l1);
    rg.layers.push_back(l2);
    std::vector<std::vector<double>> beta{{}, {0.9, 0.8}, {0.9, 0.9}};
    FariOptions opt;
    opt.normalize = false;
    auto rules = induce_rules(rg, beta, v, opt);
    REQUIRE(rules.size() == 1);  // merged
    // 0.9*0.9 + 0.8*0.9 = 1.53, capped at 1
    CHECK(rules[0].confidence == doctest::Approx(1.0));
}

TEST_CASE("missing attentions raise") {
    Vocab v = toy_vocab(3);
    ReasoningGraph rg = diamond_graph(v);
    std::vector<std::vector<double>> beta{{}, {0.6, 0.4}};  // one layer short
    CHECK_THROWS_AS(induce_rules(rg, beta, v, {}), std::invalid_argument);
}

TEST_CASE("rule file format round-trips") {
    Vocab v = build_vocab({"a"}, {"r1", "r2", "r3"}, {0.0, 1.0});
    std::mt19937_64 rng(31);
    std::vector<Rule> rules;
    for (int i = 0; i < 30; ++i) {
        Rule r;
        r.head = static_cast<RelationId>(rng() % v.n_relations());
        int n = 1 + static_cast<int>(rng() % 3);
        int cls = static_cast<int>(rng() % 3);
        r.cls = cls == 0 ? RuleClass::CCH : cls == 1 ? RuleClass::TIH : RuleClass::TEH;
        for (int k = 0; k < n; ++k) {
            OrderTag tag = OrderTag::None;
            if (r.cls == RuleClass::TIH)
                tag = k == 0 ? OrderTag::Any
                             : (rng() % 2 ? OrderTag::LePrev : OrderTag::GePrev);
            r.body.push_back({static_cast<RelationId>(rng() % v.n_relations()), tag});
        }
        r.confidence = std::round(1e6 * std::uniform_real_distribution<double>(0, 1)(rng)) / 1e6;
        rules.push_back(r);
    }
    sort_rules(rules);
    for (const Rule& r : rules) {
        Rule back = parse_rule(format_rule(r, v), v);
        CHECK(back.head == r.head);
        CHECK(back.cls == r.cls);
        REQUIRE(back.body.size() == r.body.size());
        for (size_t k = 0; k < r.body.size(); ++k) {
            CHECK(back.body[k].rel == r.body[k].rel);
            CHECK(back.body[k].tag == r.body[k].tag);
        }
        CHECK(back.confidence == doctest::Approx(r.confidence).epsilon(1e-9));
    }
}

TEST_CASE("grounding") {
    std::vector<std::string> ents{"a", "b", "c", "d"};
    Vocab v = build_vocab(ents, {"r1", "r2", "r"}, {});
    KnowledgeGraph kg;
    kg.vocab = v;
    kg.facts = {{0, v.relation("r1"), 1}, {1, v.relation("r2"), 2}};
    kg.build_adjacency();

    SUBCASE("chain match finds the terminal entity with a witness") {
        Rule rule{v.relation("r"),
                  {{v.relation("r1"), OrderTag::None}, {v.relation("r2"), OrderTag::None}},
                  0.8,
                  RuleClass::CCH};
        auto gr = ground_rule(rule, kg, Query{0, v.relation("r"), kNoTime, Scenario::SkgT, -1});
        REQUIRE(gr.size() == 1);
        CHECK(gr[0].answer == 2);
        REQUIRE(gr[0].witness.size() == 2);
        CHECK(gr[0].witness[0].r == v.relation("r1"));
        CHECK(gr[0].witness[1].r == v.relation("r2"));

        auto scores = score_by_grounding({rule}, kg,
                                         Query{0, v.relation("r"), kNoTime, Scenario::SkgT, -1});
        CHECK(scores.at(2) == doctest::Approx(0.8));
        CHECK(scores.size() == 1);
    }
    SUBCASE("two rules grounding to the same entity sum their confidences") {
        Rule r1{v.relation("r"),
                {{v.relation("r1"), OrderTag::None}, {v.relation("r2"), OrderTag::None}},
                0.3,
                RuleClass::CCH};
        Rule direct{v.relation("r"), {{v.relation("r1"), OrderTag::None}}, 0.2, RuleClass::CCH};
        // direct grounds to b (=1), chain grounds to c (=2); add one more fact so
        // both reach c
        kg.facts.push_back({0, v.relation("r1"), 2});
        kg.build_adjacency();
        Rule direct_c{v.relation("r"), {{v.relation("r1"), OrderTag::None}}, 0.2, RuleClass::CCH};
        auto scores = score_by_grounding(
            {r1, direct_c}, kg, Query{0, v.relation("r"), kNoTime, Scenario::SkgT, -1});
        CHECK(scores.at(2) == doctest::Approx(0.5));  // 0.3 + 0.2
        CHECK(scores.at(1) == doctest::Approx(0.2));
    }
}

TEST_CASE("TEH grounding requires non-decreasing body times before the head time") {
    std::vector<std::string> ents{"a", "b", "c"};
    Vocab v = build_vocab(ents, {"r1", "r2", "r"}, {0, 1, 2, 3});
    KnowledgeGraph kg;
    kg.vocab = v;
    kg.temporal = true;
    kg.facts = {{0, v.relation("r1"), 1, 3}, {1, v.relation("r2"), 2, 2}};  // decreasing
    kg.build_adjacency();
    Rule rule{v.relation("r"),
              {{v.relation("r1"), OrderTag::None}, {v.relation("r2"), OrderTag::None}},
              0.9,
              RuleClass::TEH};

    SUBCASE("decreasing times never ground") {
        auto gr = ground_rule(rule, kg, Query{0, v.relation("r"), 3, Scenario::TkgE, -1});
        CHECK(gr.empty());
    }
    SUBCASE("non-decreasing times before the query ground") {
        kg.facts = {{0, v.relation("r1"), 1, 1}, {1, v.relation("r2"), 2, 2}};
        kg.build_adjacency();
        auto gr = ground_rule(rule, kg, Query{0, v.relation("r"), 3, Scenario::TkgE, -1});
        REQUIRE(gr.size() == 1);
        CHECK(gr[0].answer == 2);
        // but not if the query time is not strictly later
        auto gr2 = ground_rule(rule, kg, Query{0, v.relation("r"), 2, Scenario::TkgE, -1});
        CHECK(gr2.empty());
    }
}

TEST_CASE("grounding matches an independent relational join on planted data") {
    SynthSpec spec;
    spec.n_entities = 30;
    spec.n_relations = 5;
    spec.rules = {{4, {0, 1}}};
    spec.noise_ratio = 0.0;
    spec.facts_per_entity = 4;
    spec.seed = 99;
    SynthResult synth = synth_kg(spec);
    const auto& kg = synth.dataset.kg;
    const Rule& rule = synth.planted[0];

    for (EntityId s = 0; s < 10; ++s) {
        // join oracle: all o with (s, r0, y), (y, r1, o) over stored facts
        std::set<EntityId> expect;
        for (const Fact& f1 : kg.facts)
            if (f1.s == s && f1.r == 0)
                for (const Fact& f2 : kg.facts)
                    if (f2.s == f1.o && f2.r == 1) expect.insert(f2.o);
        auto gr = ground_rule(rule, kg, Query{s, 4, kNoTime, Scenario::SkgT, -1});
        std::set<EntityId> got;
        for (const auto& g : gr) got.insert(g.answer);
        CHECK(got == expect);
    }
}

TEST_CASE("TIH tag enforcement in grounding") {
    std::vector<std::string> ents{"a", "b", "c"};
    Vocab v = build_vocab(ents, {"r1", "r2", "r"}, {0, 1, 2});
    KnowledgeGraph kg;
    kg.vocab = v;
    kg.temporal = true;
    kg.facts = {{0, v.relation("r1"), 1, 2}, {1, v.relation("r2"), 2, 0}};
    kg.build_adjacency();
    Query q{0, v.relation("r"), 2, Scenario::TkgI, -1};

    Rule le{v.relation("r"),
            {{v.relation("r1"), OrderTag::Any}, {v.relation("r2"), OrderTag::LePrev}},
            1.0,
            RuleClass::TIH};
    CHECK(ground_rule(le, kg, q).size() == 1);  // 0 <= 2 holds

    Rule ge{v.relation("r"),
            {{v.relation("r1"), OrderTag::Any}, {v.relation("r2"), OrderTag::GePrev}},
            1.0,
            RuleClass::TIH};
    CHECK(ground_rule(ge, kg, q).empty());  // 0 >= 2 fails
}
