#pragma once

#include <string>

#include "kgr/kg.hpp"
#include "kgr/tape.hpp"

namespace kgr {

enum class LambdaMode { Dynamic, Fixed0, Fixed1, GlobalScalar };

LambdaMode lambda_mode_from_string(std::string_view s);
std::string to_string(LambdaMode m);

struct ModelDims {
    int d = 32;       // embedding dimension
    int d_t = 16;     // time encoding dimension (temporal only)
    int L = 3;        // reasoning iterations
    bool temporal = false;
    bool inductive = false;  // SKG_I: anonymous entity embedding, FOL only
    int n_entities = 0;
    int n_relations = 0;

    int node_width() const { return temporal ? d + d_t : d; }
    int query_width() const { return temporal ? 2 * d + d_t : 2 * d; }
};

struct GruIdx {
    int Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
};

// All trainable tensors of the model. Entity table `h` collapses to a single
// shared anonymous row in the inductive setting (test entities are unseen, so
// per-entity rows cannot exist).
template <class S>
struct ModelParams {
    ModelDims dims;
    ParamStore<S> store;

    int h = -1;       // entity embeddings (|E| x d), or (1 x d) anonymous
    int g = -1;       // relation embeddings (|R| x d), incl. reverses and self
    int time_w = -1, time_b = -1;
    int Wn = -1;      // node input projection d x node_width
    int Wq = -1;      // query projection d x query_width
    std::vector<int> W1, W2, W3, W4, W5;  // per layer
    GruIdx gru{};
    int y0 = -1;          // root FOL hidden state
    int Wlambda = -1;     // combination head 1 x 3d
    int Wout = -1;        // final score projection 1 x d
    int lambda_scalar = -1;

    static ModelParams make(const ModelDims& dims, uint64_t seed) {
        ModelParams p;
        p.dims = dims;
        auto& st = p.store;
        const int d = dims.d;
        p.h = st.add("h", dims.inductive ? 1 : dims.n_entities, d);
        p.g = st.add("g", dims.n_relations, d);
        if (dims.temporal) {
            p.time_w = st.add("time.w", dims.d_t, 1);
            p.time_b = st.add("time.b", dims.d_t, 1);
        }
        p.Wn = st.add("Wn", d, dims.node_width());
        p.Wq = st.add("Wq", d, dims.query_width());
        for (int l = 0; l < dims.L; ++l) {
            const std::string suffix = "." + std::to_string(l);
            p.W1.push_back(st.add("W1" + suffix, d, d));
            p.W2.push_back(st.add("W2" + suffix, d, d));
            p.W3.push_back(st.add("W3" + suffix, d, 3 * d));
            p.W4.push_back(st.add("W4" + suffix, 1, 2 * d));
            p.W5.push_back(st.add("W5" + suffix, 1, d));
        }
        p.gru.Wz = st.add("gru.Wz", d, d);
        p.gru.Uz = st.add("gru.Uz", d, d);
        p.gru.bz = st.add("gru.bz", d, 1);
        p.gru.Wr = st.add("gru.Wr", d, d);
        p.gru.Ur = st.add("gru.Ur", d, d);
        p.gru.br = st.add("gru.br", d, 1);
        p.gru.Wh = st.add("gru.Wh", d, d);
        p.gru.Uh = st.add("gru.Uh", d, d);
        p.gru.bh = st.add("gru.bh", d, 1);
        p.y0 = st.add("y0", d, 1);
        p.Wlambda = st.add("Wlambda", 1, 3 * d);
        p.Wout = st.add("Wout", 1, d);
        p.lambda_scalar = st.add("lambda_scalar", 1, 1);
        st.init_uniform(seed);
        return p;
    }

    Eigen::Index entity_row(EntityId e) const { return dims.inductive ? 0 : e; }
};

// Standard GRU update: z = σ(Wz u + Uz h + bz), r = σ(Wr u + Ur h + br),
// h̃ = tanh(Wh u + Uh (r⊙h) + bh), h' = (1−z)⊙h + z⊙h̃. One fused tape node.
template <class S>
VarId gru_cell(Tape<S>& t, const GruIdx& p, VarId u, VarId h) {
    const std::array<int, 9> params{p.Wz, p.Uz, p.bz, p.Wr, p.Ur, p.br, p.Wh, p.Uh, p.bh};
    const int d = static_cast<int>(t.val(h).size());
    return t.segment(t.gru(params, u, h), 0, d);
}

// e_t = sqrt(1/d_t) [cos(w_1 t + b_1), ..., cos(w_dt t + b_dt)].
template <class S>
VarId time_encode(Tape<S>& t, const ModelParams<S>& p, S time_value) {
    const S c = std::sqrt(S(1) / static_cast<S>(p.dims.d_t));
    return t.cos_affine(p.time_w, p.time_b, time_value, c);
}

// Softmax over explicit index groups; every group must be non-empty.
template <class S>
VarId grouped_softmax(Tape<S>& t, VarId values, const std::vector<std::vector<int>>& groups) {
    std::vector<int> group_of(t.val(values).size(), -1);
    for (size_t gi = 0; gi < groups.size(); ++gi) {
        if (groups[gi].empty()) throw std::invalid_argument("grouped_softmax: empty group");
        for (int i : groups[gi]) group_of[i] = static_cast<int>(gi);
    }
    for (int g : group_of)
        if (g < 0) throw std::invalid_argument("grouped_softmax: groups do not cover all indices");
    return t.grouped_softmax(values, group_of);
}

// Checkpoint I/O (JSON, versioned). Loading validates every shape.
void save_checkpoint(const std::string& path, const ModelParams<double>& params,
                     LambdaMode lambda_mode, Scenario scenario);
ModelParams<double> load_checkpoint(const std::string& path, LambdaMode* lambda_mode = nullptr,
                                    Scenario* scenario = nullptr);

}  // namespace kgr
