#include "kgr/fari.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kgr {
namespace {

struct BodyEntry {
    double eps;
    std::vector<std::pair<RelationId, TimeId>> atoms;  // relation + source-fact time
};

std::vector<double> softmax_weights(const std::vector<double>& w) {
    double m = *std::max_element(w.begin(), w.end());
    std::vector<double> out(w.size());
    double sum = 0;
    for (size_t i = 0; i < w.size(); ++i) {
        out[i] = std::exp(w[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

}  // namespace

std::vector<Rule> induce_rules(const ReasoningGraph& rg,
                               const std::vector<std::vector<double>>& edge_beta,
                               const Vocab& vocab, const FariOptions& opt, FariTrace* trace) {
    const int L = rg.n_layers() - 1;
    if (static_cast<int>(edge_beta.size()) < L + 1)
        throw std::invalid_argument("induce_rules: FOL attentions missing");

    std::vector<std::vector<BodyEntry>> dict(1);
    dict[0] = {{1.0, {}}};
    if (trace) {
        trace->node_weights.clear();
        trace->node_weights.push_back({1.0});
    }

    for (int l = 1; l <= L; ++l) {
        const Layer& layer = rg.layers[l];
        if (edge_beta[l].size() != layer.edges.size())
            throw std::invalid_argument("induce_rules: attention/edge mismatch at layer " +
                                        std::to_string(l));
        std::vector<std::vector<BodyEntry>> next(layer.nodes.size());
        for (size_t e = 0; e < layer.edges.size(); ++e) {
            const LayerEdge& edge = layer.edges[e];
            const double beta = edge_beta[l][e];
            for (const BodyEntry& prior : dict[edge.prior]) {
                BodyEntry ext{prior.eps * beta, prior.atoms};
                ext.atoms.emplace_back(edge.rel, edge.fact_time);
                next[edge.post].push_back(std::move(ext));
            }
        }

        std::vector<double> weights(next.size(), 0.0);
        for (size_t j = 0; j < next.size(); ++j)
            for (const BodyEntry& b : next[j]) weights[j] += b.eps;
        if (opt.normalize) {
            std::vector<double> norm = softmax_weights(weights);
            for (size_t j = 0; j < next.size(); ++j) {
                const double scale = weights[j] > 0 ? norm[j] / weights[j] : 0.0;
                for (BodyEntry& b : next[j]) b.eps *= scale;
            }
            weights = std::move(norm);
        }
        if (opt.max_bodies_per_node > 0) {
            for (auto& bodies : next)
                if (static_cast<int>(bodies.size()) > opt.max_bodies_per_node) {
                    std::stable_sort(bodies.begin(), bodies.end(),
                                     [](const BodyEntry& a, const BodyEntry& b) {
                                         return a.eps > b.eps;
                                     });
                    bodies.resize(opt.max_bodies_per_node);
                }
        }
        if (trace) trace->node_weights.push_back(weights);
        dict = std::move(next);
    }

    if (trace) {
        trace->final_body_sums.assign(dict.size(), 0.0);
        for (size_t j = 0; j < dict.size(); ++j)
            for (const BodyEntry& b : dict[j]) trace->final_body_sums[j] += b.eps;
    }

    const Scenario sc = rg.query.scenario;
    const RuleClass cls = sc == Scenario::TkgE   ? RuleClass::TEH
                          : sc == Scenario::TkgI ? RuleClass::TIH
                                                 : RuleClass::CCH;

    std::map<std::vector<RuleAtom>, double> merged;
    for (const auto& bodies : dict)
        for (const BodyEntry& b : bodies) {
            std::vector<RuleAtom> atoms;
            TimeId prev_time = kNoTime;
            for (const auto& [rel, time] : b.atoms) {
                if (vocab.is_self(rel)) continue;
                OrderTag tag = OrderTag::None;
                if (cls == RuleClass::TIH) {
                    if (atoms.empty() || prev_time == kNoTime || time == kNoTime)
                        tag = OrderTag::Any;
                    else
                        tag = time > prev_time ? OrderTag::GePrev : OrderTag::LePrev;
                }
                atoms.push_back({rel, tag});
                prev_time = time;
            }
            if (atoms.empty()) continue;  // all-self body
            merged[std::move(atoms)] += b.eps;
        }

    std::vector<Rule> rules;
    rules.reserve(merged.size());
    for (auto& [atoms, eps] : merged)
        rules.push_back({rg.query.r, atoms, std::min(eps, 1.0), cls});
    sort_rules(rules);
    return rules;
}

std::vector<std::vector<double>> path_sum_oracle(const ReasoningGraph& rg,
                                                 const std::vector<std::vector<double>>& edge_beta,
                                                 bool normalize, size_t max_paths) {
    struct Path {
        double weight;
        int node;  // index in the current layer
    };
    std::vector<Path> paths = {{1.0, 0}};
    std::vector<std::vector<double>> all_weights = {{1.0}};

    for (int l = 1; l < rg.n_layers(); ++l) {
        const Layer& layer = rg.layers[l];
        std::vector<Path> next;
        for (size_t e = 0; e < layer.edges.size(); ++e) {
            const LayerEdge& edge = layer.edges[e];
            for (const Path& p : paths) {
                if (p.node != edge.prior) continue;
                next.push_back({p.weight * edge_beta[l][e], edge.post});
                if (next.size() > max_paths)
                    throw std::runtime_error("path_sum_oracle: too many paths");
            }
        }
        std::vector<double> weights(layer.nodes.size(), 0.0);
        for (const Path& p : next) weights[p.node] += p.weight;
        if (normalize) {
            std::vector<double> norm = softmax_weights(weights);
            for (Path& p : next) {
                const double scale = weights[p.node] > 0 ? norm[p.node] / weights[p.node] : 0.0;
                p.weight *= scale;
            }
            weights = std::move(norm);
        }
        all_weights.push_back(weights);
        paths = std::move(next);
    }
    return all_weights;
}

}  // namespace kgr
