// kgreason: train, evaluate and inspect reasoning models over knowledge
// graphs (static or temporal), induce Horn rules from a trained model, and
// generate synthetic datasets with planted rules.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <thread>

#include "kgr/dataset.hpp"
#include "kgr/explain.hpp"
#include "kgr/fari.hpp"
#include "kgr/grounding.hpp"
#include "kgr/synth.hpp"
#include "kgr/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    kgr::Scenario scenario = kgr::Scenario::SkgT;
    bool scenario_set = false;
    std::string dataset;
    std::string out = "out";
    kgr::TrainConfig train;
};

struct Overrides {
    std::string config_path;
    std::string scenario, lambda_mode, dataset, out;
    int64_t seed = -1;
    int threads = -1;
    int L = -1, M = -1, N = -1;
};

RunConfig load_run_config(const Overrides& ov) {
    RunConfig rc;
    if (!ov.config_path.empty()) {
        std::ifstream in(ov.config_path);
        if (!in) throw ConfigError("cannot open config: " + ov.config_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError("bad config " + ov.config_path + ": " + e.what());
        }
        if (j.contains("scenario")) {
            rc.scenario = kgr::scenario_from_string(j["scenario"].get<std::string>());
            rc.scenario_set = true;
        }
        rc.dataset = j.value("dataset", rc.dataset);
        rc.out = j.value("out", rc.out);
        if (j.contains("model")) {
            const auto& m = j["model"];
            rc.train.d = m.value("d", rc.train.d);
            rc.train.d_t = m.value("d_t", rc.train.d_t);
        }
        if (j.contains("train")) {
            const auto& t = j["train"];
            auto& c = rc.train;
            c.epochs = t.value("epochs", c.epochs);
            c.batch_size = t.value("batch_size", c.batch_size);
            c.lr = t.value("lr", c.lr);
            c.adam_beta1 = t.value("adam_beta1", c.adam_beta1);
            c.adam_beta2 = t.value("adam_beta2", c.adam_beta2);
            c.adam_eps = t.value("adam_eps", c.adam_eps);
            c.L = t.value("L", c.L);
            c.M = t.value("M", c.M);
            c.N = t.value("N", c.N);
            c.seed = t.value("seed", c.seed);
            c.float32 = t.value("float32", c.float32);
            c.threads = t.value("threads", c.threads);
            c.queries_per_epoch = t.value("queries_per_epoch", c.queries_per_epoch);
            if (t.contains("lambda_mode"))
                c.lambda_mode = kgr::lambda_mode_from_string(t["lambda_mode"].get<std::string>());
        }
    }
    if (!ov.scenario.empty()) {
        rc.scenario = kgr::scenario_from_string(ov.scenario);
        rc.scenario_set = true;
    }
    if (!ov.lambda_mode.empty())
        rc.train.lambda_mode = kgr::lambda_mode_from_string(ov.lambda_mode);
    if (!ov.dataset.empty()) rc.dataset = ov.dataset;
    if (!ov.out.empty()) rc.out = ov.out;
    if (ov.seed >= 0) rc.train.seed = static_cast<uint64_t>(ov.seed);
    if (ov.threads >= 0) rc.train.threads = ov.threads;
    if (ov.L > 0) rc.train.L = ov.L;
    if (ov.M >= 0) rc.train.M = ov.M;
    if (ov.N >= 0) rc.train.N = ov.N;
    if (rc.train.threads <= 0)
        rc.train.threads = std::max(1u, std::thread::hardware_concurrency());
    return rc;
}

kgr::Dataset load_checked(const RunConfig& rc) {
    if (!rc.scenario_set) throw ConfigError("scenario not set (config or --scenario)");
    if (rc.dataset.empty()) throw ConfigError("dataset path not set (config or --data)");
    if (!fs::exists(rc.dataset)) throw ConfigError("dataset path does not exist: " + rc.dataset);
    if (rc.scenario == kgr::Scenario::SkgI && rc.train.lambda_mode != kgr::LambdaMode::Fixed1)
        throw ConfigError("SKG_I requires --lambda-mode fixed-1");
    try {
        return kgr::load_dataset(rc.dataset, rc.scenario);
    } catch (const kgr::ParseError& e) {
        throw ConfigError(std::string("dataset/scenario mismatch: ") + e.what());
    }
}

kgr::ModelDims dims_for(const kgr::Dataset& ds, const RunConfig& rc) {
    kgr::ModelDims dims;
    dims.d = rc.train.d;
    dims.d_t = rc.train.d_t;
    dims.L = rc.train.L;
    dims.temporal = kgr::is_temporal(rc.scenario);
    dims.inductive = rc.scenario == kgr::Scenario::SkgI;
    dims.n_entities = ds.kg.vocab.n_entities();
    dims.n_relations = ds.kg.vocab.n_relations();
    return dims;
}

kgr::FilterIndex build_filter(const kgr::Dataset& ds, bool inductive) {
    kgr::FilterIndex fi;
    if (inductive) {
        const kgr::Vocab& v = ds.ind_kg.vocab;
        for (const kgr::Fact& f : ds.ind_kg.facts) {
            fi.add(f.s, f.r, f.t, f.o);
            fi.add(f.o, v.inverse(f.r), f.t, f.s);
        }
        fi.add_queries(ds.ind_valid);
        fi.add_queries(ds.ind_test);
    } else {
        fi.add_queries(ds.queries.train);
        fi.add_queries(ds.queries.valid);
        fi.add_queries(ds.queries.test);
    }
    return fi;
}

json metrics_json(const kgr::RankingMetrics& m) {
    return {{"mrr", m.mrr},
            {"hits1", m.hits1},
            {"hits3", m.hits3},
            {"hits10", m.hits10},
            {"n_queries", m.n_queries}};
}

void print_metrics(const kgr::RankingMetrics& m) {
    std::printf("queries  MRR      Hits@1   Hits@3   Hits@10\n");
    std::printf("%-8lld %-8.4f %-8.4f %-8.4f %-8.4f\n", static_cast<long long>(m.n_queries),
                m.mrr, m.hits1, m.hits3, m.hits10);
}

kgr::RankingMetrics eval_split(const kgr::Dataset& ds, const kgr::ModelParams<double>& params,
                               const kgr::InferenceConfig& icfg, const std::string& split) {
    const bool inductive = ds.scenario == kgr::Scenario::SkgI;
    const kgr::KnowledgeGraph& kg = inductive ? ds.ind_kg : ds.kg;
    const std::vector<kgr::Query>* queries = nullptr;
    if (split == "train") queries = &ds.queries.train;
    else if (split == "valid") queries = inductive ? &ds.ind_valid : &ds.queries.valid;
    else if (split == "test") queries = inductive ? &ds.ind_test : &ds.queries.test;
    else throw ConfigError("unknown split: " + split);
    if (inductive && split == "train") throw ConfigError("SKG_I has no train-split evaluation");
    if (queries->empty()) throw std::runtime_error("no queries in split " + split);
    kgr::InferenceConfig cfg = icfg;
    cfg.mask_known_fact = split == "train";  // those facts sit in the background graph
    return evaluate(kg, *queries, params, cfg, build_filter(ds, inductive));
}

void validate_params(const kgr::ModelParams<double>& p, const kgr::Dataset& ds) {
    const kgr::Vocab& v = ds.kg.vocab;
    if (p.dims.n_relations != v.n_relations())
        throw std::runtime_error("checkpoint/dataset mismatch: relation count");
    if (!p.dims.inductive && p.dims.n_entities != v.n_entities())
        throw std::runtime_error("checkpoint/dataset mismatch: entity count");
    if (p.dims.temporal != kgr::is_temporal(ds.scenario))
        throw std::runtime_error("checkpoint/dataset mismatch: temporal flavor");
}

int cmd_train(const Overrides& ov) {
    RunConfig rc = load_run_config(ov);
    kgr::Dataset ds = load_checked(rc);
    kgr::ModelDims dims = dims_for(ds, rc);
    fs::create_directories(rc.out);
    const std::string ckpt_path = (fs::path(rc.out) / "checkpoint.json").string();
    std::ofstream loss_csv(fs::path(rc.out) / "loss.csv");
    loss_csv << "epoch,loss\n";

    auto run = [&](auto tag) {
        using S = decltype(tag);
        auto res = kgr::train<S>(
            ds.kg, ds.queries.train, dims, rc.train,
            [&](int epoch, const kgr::ModelParams<S>& p, double loss) {
                loss_csv << epoch << ',' << std::setprecision(17) << loss << '\n';
                loss_csv.flush();
                kgr::ModelParams<double> pd = kgr::ModelParams<double>::make(p.dims, 0);
                for (size_t i = 0; i < p.store.size(); ++i)
                    pd.store.values[i] = p.store.values[i].template cast<double>();
                kgr::save_checkpoint(ckpt_path, pd, rc.train.lambda_mode, rc.scenario);
                std::printf("epoch %d  loss %.6f\n", epoch, loss);
                std::fflush(stdout);
            });
        return res.epoch_loss;
    };
    if (rc.train.float32) run(float{});
    else run(double{});

    kgr::ModelParams<double> params = kgr::load_checkpoint(ckpt_path);
    const bool inductive = rc.scenario == kgr::Scenario::SkgI;
    const std::vector<kgr::Query>& vq = inductive ? ds.ind_valid : ds.queries.valid;
    if (!vq.empty()) {
        auto m = eval_split(ds, params, rc.train.inference(), "valid");
        print_metrics(m);
        std::ofstream((fs::path(rc.out) / "metrics.json")) << metrics_json(m).dump(2) << '\n';
    }
    std::printf("checkpoint: %s\n", ckpt_path.c_str());
    return 0;
}

int cmd_eval(const Overrides& ov, const std::string& checkpoint, const std::string& split) {
    RunConfig rc = load_run_config(ov);
    kgr::LambdaMode mode;
    kgr::Scenario ckpt_scenario;
    kgr::ModelParams<double> params = kgr::load_checkpoint(checkpoint, &mode, &ckpt_scenario);
    if (!rc.scenario_set) {
        rc.scenario = ckpt_scenario;
        rc.scenario_set = true;
    }
    if (!ov.lambda_mode.empty()) mode = kgr::lambda_mode_from_string(ov.lambda_mode);
    rc.train.lambda_mode = mode;
    kgr::Dataset ds = load_checked(rc);
    validate_params(params, ds);
    kgr::InferenceConfig icfg = rc.train.inference();
    icfg.L = params.dims.L;
    if (ov.L > 0) icfg.L = ov.L;
    auto m = eval_split(ds, params, icfg, split);
    print_metrics(m);
    fs::create_directories(rc.out);
    std::ofstream((fs::path(rc.out) / ("metrics_" + split + ".json")))
        << metrics_json(m).dump(2) << '\n';
    return 0;
}

int cmd_induce_rules(const Overrides& ov, const std::string& checkpoint,
                     const std::string& relation_filter, int top_k, int queries_per_relation,
                     const std::string& out_path) {
    RunConfig rc = load_run_config(ov);
    kgr::LambdaMode mode;
    kgr::Scenario ckpt_scenario;
    kgr::ModelParams<double> params = kgr::load_checkpoint(checkpoint, &mode, &ckpt_scenario);
    if (!rc.scenario_set) {
        rc.scenario = ckpt_scenario;
        rc.scenario_set = true;
    }
    rc.train.lambda_mode = mode;
    if (mode == kgr::LambdaMode::Fixed0)
        throw std::runtime_error("induce-rules: checkpoint has no FOL channel (fixed-0)");
    kgr::Dataset ds = load_checked(rc);
    validate_params(params, ds);
    const kgr::Vocab& vocab = ds.kg.vocab;

    std::map<kgr::RelationId, std::vector<kgr::Query>> by_head;
    for (const kgr::Query& q : ds.queries.train) by_head[q.r].push_back(q);
    std::optional<kgr::RelationId> only;
    if (!relation_filter.empty()) only = vocab.relation(relation_filter);

    std::mt19937_64 rng(rc.train.seed);
    std::vector<kgr::Rule> all_rules;
    kgr::Tape<double> tape(params.store);
    for (auto& [head, qs] : by_head) {
        if (only && head != *only) continue;
        std::shuffle(qs.begin(), qs.end(), rng);
        const size_t n = std::min(qs.size(), static_cast<size_t>(queries_per_relation));
        if (n == 0) continue;
        std::map<std::pair<std::vector<kgr::RuleAtom>, kgr::RuleClass>, double> acc;
        for (size_t i = 0; i < n; ++i) {
            const kgr::Query& q = qs[i];
            tape.clear();
            kgr::FactMask mask{q.s, q.r, q.label, vocab.inverse(q.r), q.t};
            kgr::ExpansionConfig ec{params.dims.L, rc.train.M, rc.train.N,
                                    kgr::mix_seed(rc.train.seed, i)};
            auto fr = forward(tape, ds.kg, q, params, ec, mode, &mask);
            kgr::FariOptions fo;
            fo.max_bodies_per_node = 128;
            for (const kgr::Rule& r : induce_rules(fr.rg, fr.edge_beta, vocab, fo))
                acc[{r.body, r.cls}] += r.confidence;
        }
        std::vector<kgr::Rule> rules;
        for (auto& [key, conf] : acc)
            rules.push_back({head, key.first, conf / static_cast<double>(n), key.second});
        kgr::sort_rules(rules);
        if (static_cast<int>(rules.size()) > top_k) rules.resize(top_k);
        all_rules.insert(all_rules.end(), rules.begin(), rules.end());
    }
    kgr::sort_rules(all_rules);
    kgr::write_rules(out_path, all_rules, vocab);
    std::printf("wrote %zu rules to %s\n", all_rules.size(), out_path.c_str());
    return 0;
}

int cmd_explain(const Overrides& ov, const std::string& checkpoint, const std::string& entity,
                const std::string& relation, const std::string& time, int top_k) {
    RunConfig rc = load_run_config(ov);
    kgr::LambdaMode mode;
    kgr::Scenario ckpt_scenario;
    kgr::ModelParams<double> params = kgr::load_checkpoint(checkpoint, &mode, &ckpt_scenario);
    if (!rc.scenario_set) {
        rc.scenario = ckpt_scenario;
        rc.scenario_set = true;
    }
    rc.train.lambda_mode = mode;
    kgr::Dataset ds = load_checked(rc);
    validate_params(params, ds);
    const bool inductive = ds.scenario == kgr::Scenario::SkgI;
    const kgr::KnowledgeGraph& kg = inductive ? ds.ind_kg : ds.kg;

    kgr::Query q;
    q.scenario = rc.scenario;
    q.s = kg.vocab.entity(entity);
    q.r = kg.vocab.relation(relation);
    if (kgr::is_temporal(rc.scenario)) {
        if (time.empty()) throw ConfigError("temporal scenario needs --time");
        auto it = kg.vocab.time_ids.find(time);
        if (it == kg.vocab.time_ids.end())
            throw std::out_of_range("unknown timestamp: " + time);
        q.t = it->second;
    }

    kgr::Tape<double> tape(params.store);
    kgr::ExpansionConfig ec{params.dims.L, rc.train.M, rc.train.N,
                            kgr::mix_seed(rc.train.seed, 0)};
    auto fr = forward(tape, kg, q, params, ec, mode);
    std::vector<kgr::Rule> rules;
    if (mode != kgr::LambdaMode::Fixed0) {
        kgr::FariOptions fo;
        fo.max_bodies_per_node = 128;
        rules = induce_rules(fr.rg, fr.edge_beta, kg.vocab, fo);
        if (static_cast<int>(rules.size()) > top_k) rules.resize(top_k);
    }
    std::cout << render_explanation(fr.rg, kg.vocab, fr.node_alpha, fr.node_beta, fr.edge_alpha,
                                    fr.edge_beta, rules);
    return 0;
}

int cmd_synth(const Overrides& ov, const std::string& out_dir, int entities, int relations,
              const std::string& rules_text, double noise, bool temporal, int facts_per_entity,
              int times) {
    kgr::SynthSpec spec;
    spec.n_entities = entities;
    spec.n_relations = relations;
    spec.noise_ratio = noise;
    spec.temporal = temporal;
    spec.facts_per_entity = facts_per_entity;
    spec.n_times = times;
    if (ov.seed >= 0) spec.seed = static_cast<uint64_t>(ov.seed);

    // "head<-b1,b2;head<-b1" with relation indices.
    size_t at = 0;
    while (at < rules_text.size()) {
        size_t semi = rules_text.find(';', at);
        std::string part = rules_text.substr(at, semi == std::string::npos ? semi : semi - at);
        at = semi == std::string::npos ? rules_text.size() : semi + 1;
        size_t arrow = part.find("<-");
        if (arrow == std::string::npos) throw ConfigError("bad rule spec: " + part);
        std::pair<int, std::vector<int>> rule;
        rule.first = std::stoi(part.substr(0, arrow));
        std::string body = part.substr(arrow + 2);
        size_t b = 0;
        while (b < body.size()) {
            size_t comma = body.find(',', b);
            rule.second.push_back(
                std::stoi(body.substr(b, comma == std::string::npos ? comma : comma - b)));
            b = comma == std::string::npos ? body.size() : comma + 1;
        }
        spec.rules.push_back(std::move(rule));
    }
    if (spec.rules.empty()) throw ConfigError("synth: no rules given");

    try {
        kgr::SynthResult synth = kgr::synth_kg(spec);
        kgr::write_synth_dataset(out_dir, synth);
        std::printf("wrote %s: %zu train / %zu valid / %zu test facts, %zu rules\n",
                    out_dir.c_str(), synth.train_facts.size(), synth.valid_facts.size(),
                    synth.test_facts.size(), synth.planted.size());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-graph reasoning engine"};
    app.require_subcommand(1);

    Overrides ov;
    app.add_option("--config", ov.config_path, "JSON config file");
    app.add_option("--scenario", ov.scenario, "SKG_T | SKG_I | TKG_I | TKG_E");
    app.add_option("--seed", ov.seed, "RNG seed");
    app.add_option("--threads", ov.threads, "worker threads (0 = cores)");
    app.add_option("--lambda-mode", ov.lambda_mode, "dynamic | fixed-0 | fixed-1 | global-scalar");
    app.add_option("--L", ov.L, "reasoning iterations");
    app.add_option("--M", ov.M, "max sampled neighbors per node (TKG_E)");
    app.add_option("--N", ov.N, "top-N edges kept per layer (TKG_E)");
    app.add_option("--data", ov.dataset, "dataset directory");
    app.add_option("--out", ov.out, "output directory");

    auto* train_cmd = app.add_subcommand("train", "train a model");
    train_cmd->fallthrough();

    std::string checkpoint, split = "test";
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->fallthrough();
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
    eval_cmd->add_option("--split", split, "train | valid | test");

    std::string relation_filter, rules_out = "rules.txt";
    int top_k = 10, queries_per_relation = 25;
    auto* induce_cmd = app.add_subcommand("induce-rules", "induce FOL rules from a checkpoint");
    induce_cmd->fallthrough();
    induce_cmd->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
    induce_cmd->add_option("--relation", relation_filter, "restrict to one head relation");
    induce_cmd->add_option("--top-k", top_k, "rules kept per head relation");
    induce_cmd->add_option("--queries", queries_per_relation, "sampled queries per head relation");
    induce_cmd->add_option("--rules-out", rules_out, "output rule file");

    std::string entity, relation, time;
    int explain_top_k = 5;
    auto* explain_cmd = app.add_subcommand("explain", "render one query's reasoning graph");
    explain_cmd->fallthrough();
    explain_cmd->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
    explain_cmd->add_option("--entity", entity, "query subject")->required();
    explain_cmd->add_option("--relation", relation, "query relation")->required();
    explain_cmd->add_option("--time", time, "query timestamp (temporal)");
    explain_cmd->add_option("--top-k", explain_top_k, "rules shown");

    std::string synth_out = "synth";
    int synth_entities = 50, synth_relations = 8, synth_fpe = 6, synth_times = 16;
    double synth_noise = 0.1;
    bool synth_temporal = false;
    std::string synth_rules = "5<-0,1;6<-2,3;7<-0,4";
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth_cmd->fallthrough();
    synth_cmd->add_option("--out-dir", synth_out, "output dataset directory");
    synth_cmd->add_option("--entities", synth_entities, "entity count");
    synth_cmd->add_option("--relations", synth_relations, "base relation count");
    synth_cmd->add_option("--rules", synth_rules, "planted rules, e.g. 5<-0,1;6<-2,3");
    synth_cmd->add_option("--noise", synth_noise, "noise fact ratio");
    synth_cmd->add_flag("--temporal", synth_temporal, "temporal (TEH) dataset");
    synth_cmd->add_option("--facts-per-entity", synth_fpe, "base facts per entity");
    synth_cmd->add_option("--times", synth_times, "timestamp count (temporal)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(ov);
        if (eval_cmd->parsed()) return cmd_eval(ov, checkpoint, split);
        if (induce_cmd->parsed())
            return cmd_induce_rules(ov, checkpoint, relation_filter, top_k, queries_per_relation,
                                    rules_out);
        if (explain_cmd->parsed())
            return cmd_explain(ov, checkpoint, entity, relation, time, explain_top_k);
        if (synth_cmd->parsed())
            return cmd_synth(ov, synth_out, synth_entities, synth_relations, synth_rules,
                             synth_noise, synth_temporal, synth_fpe, synth_times);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
