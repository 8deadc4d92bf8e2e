#pragma once

#include <string>
#include <vector>

#include "kgr/kg.hpp"

namespace kgr {

struct QuerySplits {
    std::vector<Query> train;
    std::vector<Query> valid;
    std::vector<Query> test;
};

// A loaded dataset: the training graph plus query splits. For SKG_I an extra
// disjoint-entity graph (same relation vocab) carries its own eval queries.
struct Dataset {
    Scenario scenario = Scenario::SkgT;
    KnowledgeGraph kg;
    QuerySplits queries;

    bool has_inductive = false;
    KnowledgeGraph ind_kg;
    std::vector<Query> ind_valid;
    std::vector<Query> ind_test;
};

// TSV loaders. Lines are `s<TAB>r<TAB>o` (static) or `s<TAB>r<TAB>o<TAB>t`
// (temporal, timestamps ISO dates or integers); `#` lines are comments.
// Vocab is built from the union of splits; only train facts are indexed.
// Each split row yields two queries (tail direction, and head via r^-1).
Dataset load_static_kg(const std::string& train_path, const std::string& valid_path,
                       const std::string& test_path, Scenario scenario = Scenario::SkgT);

Dataset load_temporal_kg(const std::string& train_path, const std::string& valid_path,
                         const std::string& test_path, Scenario scenario = Scenario::TkgI);

// Directory layout: train.txt/valid.txt/test.txt, plus inductive/{train,valid,test}.txt
// for SKG_I (inductive entities must be disjoint from training entities).
Dataset load_dataset(const std::string& dir, Scenario scenario);

// ISO date (days since 1970-01-01) or plain integer.
double parse_timestamp(const std::string& text);

}  // namespace kgr
