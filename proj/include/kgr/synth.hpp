#pragma once

#include "kgr/dataset.hpp"
#include "kgr/rules.hpp"

namespace kgr {

// Builds a Vocab directly (entities and base relations in the given order;
// reverse relations and `self` are appended). Times, when given, must be
// strictly increasing raw values.
Vocab build_vocab(const std::vector<std::string>& entities,
                  const std::vector<std::string>& base_relations,
                  const std::vector<double>& time_values = {});

struct SynthSpec {
    int n_entities = 50;
    int n_relations = 8;  // base relations; rule heads must be among them
    std::vector<std::pair<int, std::vector<int>>> rules;  // head, body chain
    double noise_ratio = 0.1;
    bool temporal = false;
    int facts_per_entity = 6;
    int n_times = 16;  // temporal only
    double test_fraction = 0.25;
    double valid_fraction = 0.05;
    uint64_t seed = 7;
};

struct SynthResult {
    Dataset dataset;  // train facts indexed; eval queries are held-out entailed facts
    std::vector<Fact> train_facts, valid_facts, test_facts;
    std::vector<Rule> planted;  // ground truth, confidence 1
};

// Random base facts plus facts entailed by the planted rules (bodies ground
// over the base facts only), plus uniform noise. A fraction of the entailed
// facts is held out as valid/test queries; their body witnesses stay in the
// graph, so every held-out answer is derivable via its planted rule. Temporal
// mode plants TEH rules: body times non-decreasing, head time strictly later.
SynthResult synth_kg(const SynthSpec& spec);

// Writes train/valid/test.txt plus rules.txt into `dir`.
void write_synth_dataset(const std::string& dir, const SynthResult& synth);

}  // namespace kgr
