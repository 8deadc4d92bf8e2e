#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "kgr/dataset.hpp"

using namespace kgr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("kgr_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    std::string file(const std::string& name, const std::string& content) const {
        fs::path p = path / name;
        std::ofstream(p) << content;
        return p.string();
    }
};

}  // namespace

TEST_CASE("single-fact static load: vocab, reverse augmentation, adjacency") {
    TempDir d;
    auto train = d.file("train.txt", "a\tr\tb\n");
    auto empty = d.file("empty.txt", "");
    Dataset ds = load_static_kg(train, empty, empty);

    CHECK(ds.kg.vocab.n_entities() == 2);
    CHECK(ds.kg.vocab.n_base_relations == 1);
    CHECK(ds.kg.vocab.n_relations() == 3);  // r, r^-1, self
    CHECK(ds.kg.vocab.relation("r") == 0);
    CHECK(ds.kg.vocab.relation("r^-1") == 1);
    CHECK(ds.kg.vocab.is_self(ds.kg.vocab.relation("__self__")));

    EntityId a = ds.kg.vocab.entity("a"), b = ds.kg.vocab.entity("b");
    auto na = ds.kg.neighbors(a);
    REQUIRE(na.size() == 1);
    CHECK(na[0].r == 0);
    CHECK(na[0].o == b);
    auto nb = ds.kg.neighbors(b);
    REQUIRE(nb.size() == 1);
    CHECK(nb[0].r == 1);
    CHECK(nb[0].o == a);
}

TEST_CASE("empty train file is an error") {
    TempDir d;
    auto train = d.file("train.txt", "# only a comment\n");
    auto empty = d.file("empty.txt", "");
    CHECK_THROWS_WITH_AS(load_static_kg(train, empty, empty), doctest::Contains("no facts"),
                         ParseError);
}

TEST_CASE("malformed line reports its number") {
    TempDir d;
    auto train = d.file("train.txt", "a\tr\tb\na\tr\n");
    auto empty = d.file("empty.txt", "");
    CHECK_THROWS_WITH_AS(load_static_kg(train, empty, empty), doctest::Contains(":2"), ParseError);
}

TEST_CASE("timestamps map to rank-order ids") {
    TempDir d;
    auto train = d.file("train.txt",
                        "a\tr\tb\t2014-01-01\n"
                        "b\tr\tc\t2014-01-05\n"
                        "c\tr\ta\t2014-01-01\n");
    auto empty = d.file("empty.txt", "");
    Dataset ds = load_temporal_kg(train, empty, empty);
    CHECK(ds.kg.vocab.n_times() == 2);
    CHECK(ds.kg.vocab.time_ids.at("2014-01-01") == 0);
    CHECK(ds.kg.vocab.time_ids.at("2014-01-05") == 1);
    CHECK(ds.kg.vocab.time_value(1) - ds.kg.vocab.time_value(0) == 4.0);
}

TEST_CASE("mixed column counts are a parse error") {
    TempDir d;
    auto train = d.file("train.txt", "a\tr\tb\t3\na\tr\tc\n");
    auto empty = d.file("empty.txt", "");
    CHECK_THROWS_AS(load_temporal_kg(train, empty, empty), ParseError);
}

TEST_CASE("unparseable timestamp is a parse error") {
    TempDir d;
    auto train = d.file("train.txt", "a\tr\tb\tnot-a-date\n");
    auto empty = d.file("empty.txt", "");
    CHECK_THROWS_AS(load_temporal_kg(train, empty, empty), ParseError);
}

TEST_CASE("adjacency lookup equals a naive full scan, sorted") {
    // 10-fact synthetic TKG.
    TempDir d;
    std::string lines;
    const char* rows[] = {"a\tr1\tb\t5", "a\tr2\tc\t3", "b\tr1\tc\t2", "c\tr2\ta\t9",
                          "a\tr1\tc\t1", "d\tr2\ta\t4", "b\tr2\td\t7", "d\tr1\tb\t6",
                          "c\tr1\td\t8", "a\tr2\tb\t2"};
    for (auto* r : rows) lines += std::string(r) + "\n";
    auto train = d.file("train.txt", lines);
    auto empty = d.file("empty.txt", "");
    Dataset ds = load_temporal_kg(train, empty, empty);
    const auto& kg = ds.kg;

    for (EntityId e = 0; e < kg.vocab.n_entities(); ++e) {
        std::vector<std::tuple<RelationId, EntityId, TimeId>> naive;
        for (const Fact& f : kg.facts) {
            if (f.s == e) naive.emplace_back(f.r, f.o, f.t);
            if (f.o == e) naive.emplace_back(kg.vocab.inverse(f.r), f.s, f.t);
        }
        std::sort(naive.begin(), naive.end());
        auto got = kg.neighbors(e);
        REQUIRE(got.size() == naive.size());
        for (size_t i = 0; i < naive.size(); ++i) {
            CHECK(std::make_tuple(got[i].r, got[i].o, got[i].t) == naive[i]);
        }
    }
}

TEST_CASE("posterior neighbors respect the extrapolation time window") {
    TempDir d;
    auto train = d.file("train.txt", "a\tr1\tb\t1\nb\tr2\tc\t2\nb\tr3\td\t5\n");
    auto empty = d.file("empty.txt", "");
    Dataset ds = load_temporal_kg(train, empty, empty);
    const Vocab& v = ds.kg.vocab;
    EntityId b = v.entity("b");
    TimeId t1 = v.time_ids.at("1"), t5 = v.time_ids.at("5");

    SUBCASE("TKG_E from (b,1) at query time 5: only strictly-earlier, non-decreasing") {
        auto out = posterior_neighbors(ds.kg, {b, t1}, Scenario::TkgE, t5);
        // (d,5) fails t_j < query time; (a,1) via r1^-1 passes (t=1 >= node time).
        REQUIRE(out.size() == 2);
        CHECK(out[0].first == v.relation("r2"));
        CHECK(out[0].second.entity == v.entity("c"));
        CHECK(out[1].first == v.relation("r1^-1"));
    }
    SUBCASE("TKG_I has no time restriction") {
        auto out = posterior_neighbors(ds.kg, {b, kNoTime}, Scenario::TkgI);
        CHECK(out.size() == 3);  // r1^-1 -> a, r2 -> c, r3 -> d
    }
    SUBCASE("node with no outgoing facts") {
        TempDir d2;
        auto t2 = d2.file("train.txt", "x\tr\ty\n");
        auto e2 = d2.file("empty.txt", "");
        Dataset ds2 = load_static_kg(t2, e2, e2);
        // y has only the reverse edge; mask it away to get an empty result.
        FactMask mask{ds2.kg.vocab.entity("x"), 0, ds2.kg.vocab.entity("y"), 1, kNoTime};
        auto out = posterior_neighbors(ds2.kg, {ds2.kg.vocab.entity("y"), kNoTime},
                                       Scenario::SkgT, kNoTime, &mask);
        CHECK(out.empty());
    }
}

TEST_CASE("round-trip: facts recoverable in both directions; double reverse is identity") {
    TempDir d;
    auto train = d.file("train.txt", "a\tr1\tb\na\tr2\tc\nb\tr1\tc\nc\tr2\ta\n");
    auto empty = d.file("empty.txt", "");
    Dataset ds = load_static_kg(train, empty, empty);
    const auto& kg = ds.kg;
    for (const Fact& f : kg.facts) {
        CHECK(kg.vocab.inverse(kg.vocab.inverse(f.r)) == f.r);
        bool fwd = false, rev = false;
        for (const auto& e : kg.neighbors(f.s))
            if (e.r == f.r && e.o == f.o) fwd = true;
        for (const auto& e : kg.neighbors(f.o))
            if (e.r == kg.vocab.inverse(f.r) && e.o == f.s) rev = true;
        CHECK(fwd);
        CHECK(rev);
    }
}

TEST_CASE("two loads of the same files are identical") {
    TempDir d;
    auto train = d.file("train.txt", "b\tr2\ta\na\tr1\tb\nc\tr1\ta\n");
    auto valid = d.file("valid.txt", "a\tr2\tc\n");
    auto test = d.file("test.txt", "b\tr1\tc\n");
    Dataset d1 = load_static_kg(train, valid, test);
    Dataset d2 = load_static_kg(train, valid, test);
    CHECK(d1.kg.vocab.entity_names == d2.kg.vocab.entity_names);
    CHECK(d1.kg.vocab.relation_names == d2.kg.vocab.relation_names);
    REQUIRE(d1.kg.adj.size() == d2.kg.adj.size());
    for (size_t i = 0; i < d1.kg.adj.size(); ++i) {
        CHECK(d1.kg.adj[i].r == d2.kg.adj[i].r);
        CHECK(d1.kg.adj[i].o == d2.kg.adj[i].o);
    }
    // splits become both-direction queries
    CHECK(d1.queries.valid.size() == 2);
    CHECK(d1.queries.test.size() == 2);
}

TEST_CASE("inductive layout loads a disjoint graph with the shared relation vocab") {
    TempDir d;
    d.file("train.txt", "a\tr1\tb\nb\tr2\tc\n");
    d.file("valid.txt", "a\tr1\tc\n");
    d.file("test.txt", "a\tr2\tb\n");
    fs::create_directories(d.path / "inductive");
    std::ofstream(d.path / "inductive" / "train.txt") << "x\tr1\ty\ny\tr2\tz\n";
    std::ofstream(d.path / "inductive" / "valid.txt") << "x\tr1\tz\n";
    std::ofstream(d.path / "inductive" / "test.txt") << "x\tr2\ty\n";

    Dataset ds = load_dataset(d.path.string(), Scenario::SkgI);
    REQUIRE(ds.has_inductive);
    CHECK(ds.ind_kg.vocab.n_relations() == ds.kg.vocab.n_relations());
    CHECK(ds.ind_kg.vocab.relation("r2") == ds.kg.vocab.relation("r2"));
    CHECK(ds.ind_kg.vocab.n_entities() == 3);
    CHECK(ds.ind_test.size() == 2);

    SUBCASE("entity overlap is a validation error") {
        std::ofstream(d.path / "inductive" / "train.txt") << "a\tr1\ty\n";
        CHECK_THROWS_AS(load_dataset(d.path.string(), Scenario::SkgI), ParseError);
    }
}
