#include "kgr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>

namespace kgr {
namespace {

struct RawFact {
    std::string s, r, o, t;
};

std::vector<RawFact> read_tsv(const std::string& path, bool temporal) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<RawFact> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        size_t start = 0;
        while (true) {
            size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                cols.push_back(line.substr(start));
                break;
            }
            cols.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        const size_t want = temporal ? 4 : 3;
        if (cols.size() != want)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(want) + " columns, got " + std::to_string(cols.size()));
        RawFact f{cols[0], cols[1], cols[2], temporal ? cols[3] : std::string{}};
        rows.push_back(std::move(f));
    }
    return rows;
}

EntityId intern_entity(Vocab& v, const std::string& name) {
    auto [it, fresh] = v.entity_ids.try_emplace(name, static_cast<EntityId>(v.entity_names.size()));
    if (fresh) v.entity_names.push_back(name);
    return it->second;
}

// Base relation id during scanning; reverse/self rows are appended afterwards.
RelationId intern_relation(Vocab& v, const std::string& name) {
    auto [it, fresh] =
        v.relation_ids.try_emplace(name, static_cast<RelationId>(v.relation_names.size()));
    if (fresh) v.relation_names.push_back(name);
    return it->second;
}

void finalize_relations(Vocab& v) {
    v.n_base_relations = static_cast<int>(v.relation_names.size());
    for (int r = 0; r < v.n_base_relations; ++r) {
        std::string rev = v.relation_names[r] + "^-1";
        v.relation_ids.emplace(rev, static_cast<RelationId>(v.relation_names.size()));
        v.relation_names.push_back(std::move(rev));
    }
    v.relation_ids.emplace("__self__", static_cast<RelationId>(v.relation_names.size()));
    v.relation_names.push_back("__self__");
}

void finalize_times(Vocab& v, const std::vector<std::string>& stamps) {
    std::map<double, std::string> by_value;  // sorted, deduped
    for (const auto& s : stamps) by_value.emplace(parse_timestamp(s), s);
    for (auto& [value, name] : by_value) {
        v.time_ids.emplace(name, static_cast<TimeId>(v.time_values.size()));
        v.time_values.push_back(value);
        v.time_names.push_back(name);
    }
}

Fact to_fact(Vocab& v, const RawFact& raw, bool temporal) {
    Fact f;
    f.s = intern_entity(v, raw.s);
    f.r = v.relation(raw.r);
    f.o = intern_entity(v, raw.o);
    f.t = temporal ? v.time_ids.at(raw.t) : kNoTime;
    return f;
}

std::vector<Query> to_queries(const std::vector<Fact>& facts, const Vocab& v, Scenario sc) {
    std::vector<Query> qs;
    qs.reserve(facts.size() * 2);
    for (const Fact& f : facts) {
        qs.push_back({f.s, f.r, f.t, sc, f.o});
        qs.push_back({f.o, v.inverse(f.r), f.t, sc, f.s});
    }
    return qs;
}

Dataset load_splits(const std::string& train_path, const std::string& valid_path,
                    const std::string& test_path, Scenario scenario, bool temporal,
                    const Vocab* shared_relations) {
    auto train_rows = read_tsv(train_path, temporal);
    auto valid_rows = read_tsv(valid_path, temporal);
    auto test_rows = read_tsv(test_path, temporal);
    if (train_rows.empty()) throw ParseError(train_path + ": no facts");

    Dataset ds;
    ds.scenario = scenario;
    Vocab& v = ds.kg.vocab;

    if (shared_relations) {
        // Inductive graph: relations come from the training vocab.
        v.relation_names = shared_relations->relation_names;
        v.relation_ids = shared_relations->relation_ids;
        v.n_base_relations = shared_relations->n_base_relations;
        auto check = [&](const std::vector<RawFact>& rows, const std::string& path) {
            for (const auto& r : rows)
                if (!v.relation_ids.contains(r.r))
                    throw ParseError(path + ": relation not in training vocab: " + r.r);
        };
        check(train_rows, train_path);
        check(valid_rows, valid_path);
        check(test_rows, test_path);
    } else {
        for (const auto* rows : {&train_rows, &valid_rows, &test_rows})
            for (const auto& r : *rows) intern_relation(v, r.r);
        finalize_relations(v);
    }

    for (const auto* rows : {&train_rows, &valid_rows, &test_rows})
        for (const auto& r : *rows) {
            intern_entity(v, r.s);
            intern_entity(v, r.o);
        }

    if (temporal) {
        std::vector<std::string> stamps;
        for (const auto* rows : {&train_rows, &valid_rows, &test_rows})
            for (const auto& r : *rows) stamps.push_back(r.t);
        try {
            finalize_times(v, stamps);
        } catch (const std::invalid_argument& e) {
            throw ParseError(std::string("bad timestamp: ") + e.what());
        }
    }

    ds.kg.temporal = temporal;
    for (const auto& r : train_rows) ds.kg.facts.push_back(to_fact(v, r, temporal));
    std::vector<Fact> valid_facts, test_facts;
    for (const auto& r : valid_rows) valid_facts.push_back(to_fact(v, r, temporal));
    for (const auto& r : test_rows) test_facts.push_back(to_fact(v, r, temporal));

    ds.kg.build_adjacency();
    ds.queries.train = to_queries(ds.kg.facts, v, scenario);
    ds.queries.valid = to_queries(valid_facts, v, scenario);
    ds.queries.test = to_queries(test_facts, v, scenario);
    return ds;
}

}  // namespace

double parse_timestamp(const std::string& text) {
    // Try plain integer first, then ISO date.
    {
        long long value = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec == std::errc() && p == text.data() + text.size()) return static_cast<double>(value);
    }
    int y = 0, m = 0, d = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%d", &y, &m, &d) == 3 && m >= 1 && m <= 12 && d >= 1 &&
        d <= 31) {
        // Howard Hinnant's days-from-civil.
        y -= m <= 2;
        const int era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return static_cast<double>(era * 146097LL + static_cast<long long>(doe) - 719468LL);
    }
    throw std::invalid_argument("unparseable timestamp: " + text);
}

Dataset load_static_kg(const std::string& train_path, const std::string& valid_path,
                       const std::string& test_path, Scenario scenario) {
    return load_splits(train_path, valid_path, test_path, scenario, false, nullptr);
}

Dataset load_temporal_kg(const std::string& train_path, const std::string& valid_path,
                         const std::string& test_path, Scenario scenario) {
    return load_splits(train_path, valid_path, test_path, scenario, true, nullptr);
}

Dataset load_dataset(const std::string& dir, Scenario scenario) {
    namespace fs = std::filesystem;
    auto p = [&](const char* name) { return (fs::path(dir) / name).string(); };
    Dataset ds = is_temporal(scenario)
                     ? load_temporal_kg(p("train.txt"), p("valid.txt"), p("test.txt"), scenario)
                     : load_static_kg(p("train.txt"), p("valid.txt"), p("test.txt"), scenario);

    if (scenario == Scenario::SkgI) {
        fs::path ind = fs::path(dir) / "inductive";
        Dataset sub = load_splits((ind / "train.txt").string(), (ind / "valid.txt").string(),
                                  (ind / "test.txt").string(), scenario, false, &ds.kg.vocab);
        for (const auto& name : sub.kg.vocab.entity_names)
            if (ds.kg.vocab.entity_ids.contains(name))
                throw ParseError("inductive entity also present in training graph: " + name);
        ds.has_inductive = true;
        ds.ind_kg = std::move(sub.kg);
        ds.ind_valid = std::move(sub.queries.valid);
        ds.ind_test = std::move(sub.queries.test);
    }
    return ds;
}

}  // namespace kgr
