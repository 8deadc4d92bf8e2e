#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgr {

// Named dense parameters (vectors stored as n x 1). Gradients live in a
// parallel store so several workers can accumulate independently.
template <class S>
struct ParamStore {
    using Mat = Eigen::MatrixX<S>;

    std::vector<std::string> names;
    std::vector<Mat> values;
    std::unordered_map<std::string, int> by_name;

    int add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
        if (by_name.contains(name)) throw std::logic_error("duplicate parameter: " + name);
        by_name.emplace(name, static_cast<int>(values.size()));
        names.push_back(name);
        values.emplace_back(Mat::Zero(rows, cols));
        return static_cast<int>(values.size()) - 1;
    }

    int index_of(const std::string& name) const {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw std::out_of_range("unknown parameter: " + name);
        return it->second;
    }

    Mat& operator[](int i) { return values[i]; }
    const Mat& operator[](int i) const { return values[i]; }
    size_t size() const { return values.size(); }

    // Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], fan_in = cols for
    // matrices and length for column vectors. Draw order follows
    // registration order, so a fixed seed is reproducible.
    void init_uniform(uint64_t seed) {
        std::mt19937_64 rng(seed);
        for (Mat& m : values) {
            const double fan_in = static_cast<double>(m.cols() == 1 ? m.rows() : m.cols());
            const double bound = 1.0 / std::sqrt(std::max(1.0, fan_in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<S>(dist(rng));
        }
    }
};

template <class S>
struct GradStore {
    using Mat = Eigen::MatrixX<S>;
    std::vector<Mat> grads;

    explicit GradStore(const ParamStore<S>& params) {
        grads.reserve(params.size());
        for (const auto& v : params.values) grads.emplace_back(Mat::Zero(v.rows(), v.cols()));
    }
    void zero() {
        for (auto& g : grads) g.setZero();
    }
    void add(const GradStore& other) {
        for (size_t i = 0; i < grads.size(); ++i) grads[i] += other.grads[i];
    }
    Mat& operator[](int i) { return grads[i]; }
    const Mat& operator[](int i) const { return grads[i]; }
};

using VarId = int32_t;

// Reverse-mode tape over dense vector values. Nodes are created in
// topological order by construction; backward() walks them once in reverse.
// Matrix-valued parameters participate only through MatVec and Row.
template <class S>
class Tape {
  public:
    using Vec = Eigen::VectorX<S>;
    using Mat = Eigen::MatrixX<S>;

    enum class Op : uint8_t {
        Constant,
        ParamVec,      // whole n x 1 parameter
        ParamRow,      // one row of a parameter table
        MatVec,        // parameter matrix times vector
        Add,           // n-ary sum of equal-sized vectors
        Concat,
        Sigmoid,
        Tanh,
        Hadamard,
        OneMinus,      // 1 - x, elementwise
        Scale,         // constant * x
        ScalarMul,     // scalar (size-1) times vector
        DivScalar,     // vector / scalar (size-1)
        StackScalars,  // k size-1 nodes -> one k-vector
        Pick,          // one coordinate -> size-1
        SumSelect,     // sum of selected coordinates -> size-1
        GroupedSoftmax,
        WeightedSumSelect,  // sum_i coeffs[idx_i] * vec_i
        CosAffine,          // c * cos(w * t + b), w and b parameter vectors
        LogSumExpZeros,     // log(sum exp(x_i) + n_zero * exp(0)) -> size-1
        Segment,            // contiguous slice of a vector
        Gru,                // fused GRU cell; value layout [h' | z | r | c]
    };

    using CVecMap = Eigen::Map<const Vec>;
    using VecMap = Eigen::Map<Vec>;

    explicit Tape(const ParamStore<S>& params) : params_(&params) {}

    void clear() {
        nodes_.clear();
        buf_.clear();
        pool_.clear();
    }

    CVecMap val(VarId v) const {
        const Node& n = nodes_[v];
        return {buf_.data() + n.voff, n.vlen};
    }
    S scalar(VarId v) const { return buf_[nodes_[v].voff]; }
    size_t size() const { return nodes_.size(); }
    const ParamStore<S>& params() const { return *params_; }

    VarId constant(Vec v) { return push(Op::Constant, std::move(v), {}, {}); }

    VarId constant_scalar(S x) {
        Vec v(1);
        v[0] = x;
        return constant(std::move(v));
    }

    VarId param_vec(int p) {
        const Mat& m = (*params_)[p];
        VarId id = push(Op::ParamVec, m.col(0), {}, {});
        nodes_[id].a = p;
        return id;
    }

    VarId param_row(int p, Eigen::Index row) {
        const Mat& m = (*params_)[p];
        VarId id = push(Op::ParamRow, m.row(row).transpose(), {}, {});
        nodes_[id].a = p;
        nodes_[id].b = static_cast<int>(row);
        return id;
    }

    VarId matvec(int p, VarId x) {
        const Mat& m = (*params_)[p];
        if (m.cols() != val(x).size()) throw std::invalid_argument("matvec: shape mismatch");
        VarId id = push(Op::MatVec, m * val(x), std::array{x}, {});
        nodes_[id].a = p;
        return id;
    }

    VarId add(std::span<const VarId> xs) {
        if (xs.empty()) throw std::invalid_argument("add: no operands");
        Vec v = val(xs[0]);
        for (size_t i = 1; i < xs.size(); ++i) {
            if (val(xs[i]).size() != v.size()) throw std::invalid_argument("add: size mismatch");
            v += val(xs[i]);
        }
        return push(Op::Add, std::move(v), xs, {});
    }
    VarId add(VarId a, VarId b) { return add(std::array{a, b}); }
    VarId add(VarId a, VarId b, VarId c) { return add(std::array{a, b, c}); }

    VarId concat(std::span<const VarId> xs) {
        Eigen::Index n = 0;
        for (VarId x : xs) n += val(x).size();
        Vec v(n);
        Eigen::Index at = 0;
        for (VarId x : xs) {
            v.segment(at, val(x).size()) = val(x);
            at += val(x).size();
        }
        return push(Op::Concat, std::move(v), xs, {});
    }
    VarId concat(VarId a, VarId b) { return concat(std::array{a, b}); }
    VarId concat(VarId a, VarId b, VarId c) { return concat(std::array{a, b, c}); }

    VarId sigmoid(VarId x) {
        Vec v = val(x).unaryExpr([](S a) {
            return a >= S(0) ? S(1) / (S(1) + std::exp(-a))
                             : std::exp(a) / (S(1) + std::exp(a));
        });
        return push(Op::Sigmoid, std::move(v), std::array{x}, {});
    }

    VarId tanh_(VarId x) {
        Vec v = val(x).array().tanh();
        return push(Op::Tanh, std::move(v), std::array{x}, {});
    }

    VarId hadamard(VarId a, VarId b) {
        return push(Op::Hadamard, val(a).cwiseProduct(val(b)), std::array{a, b}, {});
    }

    VarId one_minus(VarId x) {
        return push(Op::OneMinus, (S(1) - val(x).array()).matrix(), std::array{x}, {});
    }

    VarId scale(VarId x, S c) {
        VarId id = push(Op::Scale, val(x) * c, std::array{x}, {});
        nodes_[id].c = c;
        return id;
    }

    VarId scalar_mul(VarId s, VarId v) {
        if (val(s).size() != 1) throw std::invalid_argument("scalar_mul: scalar not size 1");
        return push(Op::ScalarMul, scalar(s) * val(v), std::array{s, v}, {});
    }

    VarId div_scalar(VarId v, VarId s) {
        if (val(s).size() != 1) throw std::invalid_argument("div_scalar: scalar not size 1");
        return push(Op::DivScalar, val(v) / scalar(s), std::array{v, s}, {});
    }

    VarId stack_scalars(std::span<const VarId> xs) {
        Vec v(static_cast<Eigen::Index>(xs.size()));
        for (size_t i = 0; i < xs.size(); ++i) {
            if (val(xs[i]).size() != 1)
                throw std::invalid_argument("stack_scalars: operand not size 1");
            v[static_cast<Eigen::Index>(i)] = val(xs[i])[0];
        }
        return push(Op::StackScalars, std::move(v), xs, {});
    }

    VarId pick(VarId v, int i) {
        Vec out(1);
        out[0] = val(v)[i];
        VarId id = push(Op::Pick, std::move(out), std::array{v}, {});
        nodes_[id].a = i;
        return id;
    }

    VarId sum_select(VarId v, std::span<const int> idx) {
        Vec out = Vec::Zero(1);
        for (int i : idx) out[0] += val(v)[i];
        return push(Op::SumSelect, std::move(out), std::array{v}, idx);
    }

    // Softmax within each group of coordinates; `group_of[i]` assigns
    // coordinate i to a group. Every group must be non-empty by construction.
    VarId grouped_softmax(VarId x, std::span<const int> group_of) {
        const Vec& in = val(x);
        if (static_cast<size_t>(in.size()) != group_of.size())
            throw std::invalid_argument("grouped_softmax: group map size mismatch");
        if (in.size() == 0) throw std::invalid_argument("grouped_softmax: empty input");
        int n_groups = 0;
        for (int g : group_of) n_groups = std::max(n_groups, g + 1);
        std::vector<S> gmax(n_groups, -std::numeric_limits<S>::infinity());
        for (Eigen::Index i = 0; i < in.size(); ++i)
            gmax[group_of[i]] = std::max(gmax[group_of[i]], in[i]);
        std::vector<S> gsum(n_groups, S(0));
        Vec v(in.size());
        for (Eigen::Index i = 0; i < in.size(); ++i) {
            v[i] = std::exp(in[i] - gmax[group_of[i]]);
            gsum[group_of[i]] += v[i];
        }
        for (Eigen::Index i = 0; i < in.size(); ++i) v[i] /= gsum[group_of[i]];
        return push(Op::GroupedSoftmax, std::move(v), std::array{x}, group_of);
    }

    VarId softmax(VarId x) {
        std::vector<int> groups(val(x).size(), 0);
        return grouped_softmax(x, groups);
    }

    // sum_i coeffs[idx[i]] * vecs[i]; parents are [coeffs, vecs...].
    VarId weighted_sum_select(VarId coeffs, std::span<const int> idx,
                              std::span<const VarId> vecs) {
        if (idx.size() != vecs.size())
            throw std::invalid_argument("weighted_sum_select: arity mismatch");
        Vec v = Vec::Zero(val(vecs[0]).size());
        for (size_t i = 0; i < vecs.size(); ++i) v += val(coeffs)[idx[i]] * val(vecs[i]);
        std::vector<VarId> parents;
        parents.reserve(vecs.size() + 1);
        parents.push_back(coeffs);
        parents.insert(parents.end(), vecs.begin(), vecs.end());
        return push(Op::WeightedSumSelect, std::move(v), parents, idx);
    }

    // c * cos(w * t + b) with trainable w, b.
    VarId cos_affine(int w_param, int b_param, S t, S c) {
        const Vec w = (*params_)[w_param].col(0);
        const Vec b = (*params_)[b_param].col(0);
        Vec v = (c * (w.array() * t + b.array()).cos()).matrix();
        VarId id = push(Op::CosAffine, std::move(v), {}, {});
        nodes_[id].a = w_param;
        nodes_[id].b = b_param;
        nodes_[id].c = t;
        nodes_[id].c2 = c;
        return id;
    }

    VarId segment(VarId x, int offset, int len) {
        VarId id = push(Op::Segment, val(x).segment(offset, len), std::array{x}, {});
        nodes_[id].a = offset;
        return id;
    }

    // Fused GRU cell. `params` are the nine parameter indices
    // {Wz,Uz,bz,Wr,Ur,br,Wh,Uh,bh}; u is the input, h the previous hidden
    // state. The node value stacks [h' | z | r | c] so backward can reuse the
    // gate activations; callers take segment(id, 0, d).
    VarId gru(std::span<const int> params, VarId u, VarId h) {
        const Mat& Wz = (*params_)[params[0]];
        const Mat& Uz = (*params_)[params[1]];
        const Mat& bz = (*params_)[params[2]];
        const Mat& Wr = (*params_)[params[3]];
        const Mat& Ur = (*params_)[params[4]];
        const Mat& br = (*params_)[params[5]];
        const Mat& Wh = (*params_)[params[6]];
        const Mat& Uh = (*params_)[params[7]];
        const Mat& bh = (*params_)[params[8]];
        const Vec& uv = val(u);
        const Vec& hv = val(h);
        const Eigen::Index d = hv.size();
        Vec z = Wz * uv + Uz * hv + bz.col(0);
        z = z.unaryExpr([](S a) {
            return a >= S(0) ? S(1) / (S(1) + std::exp(-a)) : std::exp(a) / (S(1) + std::exp(a));
        });
        Vec r = Wr * uv + Ur * hv + br.col(0);
        r = r.unaryExpr([](S a) {
            return a >= S(0) ? S(1) / (S(1) + std::exp(-a)) : std::exp(a) / (S(1) + std::exp(a));
        });
        Vec c = (Wh * uv + Uh * r.cwiseProduct(hv) + bh.col(0)).array().tanh();
        Vec out(4 * d);
        out.segment(0, d) = (S(1) - z.array()).matrix().cwiseProduct(hv) + z.cwiseProduct(c);
        out.segment(d, d) = z;
        out.segment(2 * d, d) = r;
        out.segment(3 * d, d) = c;
        return push(Op::Gru, std::move(out), std::array{u, h}, params);
    }

    // log( sum_i exp(x_i) + n_zero ), max-shifted. Covers entities whose
    // score is pinned at exactly zero without materializing them.
    VarId log_sum_exp_zeros(VarId x, int64_t n_zero) {
        const Vec& in = val(x);
        S m = n_zero > 0 ? S(0) : -std::numeric_limits<S>::infinity();
        for (Eigen::Index i = 0; i < in.size(); ++i) m = std::max(m, in[i]);
        S acc = n_zero > 0 ? static_cast<S>(n_zero) * std::exp(-m) : S(0);
        for (Eigen::Index i = 0; i < in.size(); ++i) acc += std::exp(in[i] - m);
        const S lse = m + std::log(acc);
        Vec out(1);
        out[0] = lse;
        VarId id = push(Op::LogSumExpZeros, std::move(out), std::array{x}, {});
        nodes_[id].c = lse;
        return id;
    }

    // Accumulates d(seed)/d(param) into `grads`. Node gradient buffers are
    // reused across calls (stamped per pass); the tape itself is reusable.
    void backward(VarId seed, GradStore<S>& grads) const {
        if (val(seed).size() != 1) throw std::invalid_argument("backward: seed not a scalar");
        if (gbuf_.size() < buf_.size()) gbuf_.resize(buf_.size());
        if (gstamp_.size() < nodes_.size()) gstamp_.resize(nodes_.size(), 0);
        ++gpass_;

        auto bump = [&](VarId p) -> VecMap {
            const Node& np = nodes_[p];
            VecMap v(gbuf_.data() + np.voff, np.vlen);
            if (gstamp_[p] != gpass_) {
                gstamp_[p] = gpass_;
                v.setZero();
            }
            return v;
        };
        bump(seed)[0] = S(1);

        for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
            if (gstamp_[id] != gpass_) continue;  // not reached from the seed
            const Node& n = nodes_[id];
            const CVecMap gy(gbuf_.data() + n.voff, n.vlen);
            auto parents = pool_span(n.p0, n.p1);
            auto aux = pool_span(n.a0, n.a1);
            switch (n.op) {
                case Op::Constant:
                    break;
                case Op::ParamVec:
                    grads[n.a].col(0) += gy;
                    break;
                case Op::ParamRow:
                    grads[n.a].row(n.b) += gy.transpose();
                    break;
                case Op::MatVec: {
                    const Mat& W = (*params_)[n.a];
                    grads[n.a].noalias() += gy * val(parents[0]).transpose();
                    bump(parents[0]).noalias() += W.transpose() * gy;
                    break;
                }
                case Op::Add:
                    for (VarId p : parents) bump(p) += gy;
                    break;
                case Op::Concat: {
                    Eigen::Index at = 0;
                    for (VarId p : parents) {
                        bump(p) += gy.segment(at, val(p).size());
                        at += val(p).size();
                    }
                    break;
                }
                case Op::Sigmoid:
                    bump(parents[0]).array() +=
                        gy.array() * val(id).array() * (S(1) - val(id).array());
                    break;
                case Op::Tanh:
                    bump(parents[0]).array() +=
                        gy.array() * (S(1) - val(id).array().square());
                    break;
                case Op::Hadamard:
                    bump(parents[0]).array() += gy.array() * val(parents[1]).array();
                    bump(parents[1]).array() += gy.array() * val(parents[0]).array();
                    break;
                case Op::OneMinus:
                    bump(parents[0]) -= gy;
                    break;
                case Op::Scale:
                    bump(parents[0]) += n.c * gy;
                    break;
                case Op::ScalarMul:
                    bump(parents[0])[0] += gy.dot(val(parents[1]));
                    bump(parents[1]) += scalar(parents[0]) * gy;
                    break;
                case Op::DivScalar: {
                    const S s = scalar(parents[1]);
                    bump(parents[0]) += gy / s;
                    bump(parents[1])[0] -= gy.dot(val(id)) / s;
                    break;
                }
                case Op::StackScalars:
                    for (size_t i = 0; i < parents.size(); ++i)
                        bump(parents[i])[0] += gy[static_cast<Eigen::Index>(i)];
                    break;
                case Op::Pick:
                    bump(parents[0])[n.a] += gy[0];
                    break;
                case Op::SumSelect: {
                    VecMap gp = bump(parents[0]);
                    for (int i : aux) gp[i] += gy[0];
                    break;
                }
                case Op::GroupedSoftmax: {
                    int n_groups = 0;
                    for (int gr : aux) n_groups = std::max(n_groups, gr + 1);
                    std::vector<S> dot(n_groups, S(0));
                    for (Eigen::Index i = 0; i < gy.size(); ++i)
                        dot[aux[i]] += gy[i] * val(id)[i];
                    VecMap gp = bump(parents[0]);
                    for (Eigen::Index i = 0; i < gy.size(); ++i)
                        gp[i] += val(id)[i] * (gy[i] - dot[aux[i]]);
                    break;
                }
                case Op::WeightedSumSelect: {
                    VecMap gc = bump(parents[0]);
                    for (size_t i = 0; i < aux.size(); ++i) {
                        VarId v = parents[i + 1];
                        gc[aux[i]] += gy.dot(val(v));
                        bump(v) += val(parents[0])[aux[i]] * gy;
                    }
                    break;
                }
                case Op::CosAffine: {
                    const Vec w = (*params_)[n.a].col(0);
                    const Vec b = (*params_)[n.b].col(0);
                    Vec dsin = (-n.c2 * (w.array() * n.c + b.array()).sin()).matrix();
                    grads[n.a].col(0).array() += gy.array() * dsin.array() * n.c;
                    grads[n.b].col(0).array() += gy.array() * dsin.array();
                    break;
                }
                case Op::LogSumExpZeros: {
                    const CVecMap in = val(parents[0]);
                    VecMap gp = bump(parents[0]);
                    for (Eigen::Index i = 0; i < in.size(); ++i)
                        gp[i] += gy[0] * std::exp(in[i] - n.c);
                    break;
                }
                case Op::Segment:
                    bump(parents[0]).segment(n.a, gy.size()) += gy;
                    break;
                case Op::Gru: {
                    const CVecMap uv = val(parents[0]);
                    const CVecMap hv = val(parents[1]);
                    const Eigen::Index d = hv.size();
                    const CVecMap gval = val(id);
                    const auto z = gval.segment(d, d);
                    const auto r = gval.segment(2 * d, d);
                    const auto c = gval.segment(3 * d, d);
                    const auto gh_out = gy.segment(0, d);
                    // consumers only read the h' slice; ignore the aux slices
                    Vec dz = gh_out.cwiseProduct(c - hv);
                    Vec dc = gh_out.cwiseProduct(z);
                    Vec dh = gh_out.cwiseProduct((S(1) - z.array()).matrix());
                    Vec du = Vec::Zero(uv.size());

                    Vec dac = dc.array() * (S(1) - c.array().square());
                    const Mat& Uh = (*params_)[aux[7]];
                    grads[aux[6]].noalias() += dac * uv.transpose();
                    grads[aux[7]].noalias() += dac * r.cwiseProduct(hv).transpose();
                    grads[aux[8]].col(0) += dac;
                    Vec drh = Uh.transpose() * dac;
                    Vec dr = drh.cwiseProduct(hv);
                    dh += drh.cwiseProduct(r);
                    du.noalias() += (*params_)[aux[6]].transpose() * dac;

                    Vec dar = dr.array() * r.array() * (S(1) - r.array());
                    grads[aux[3]].noalias() += dar * uv.transpose();
                    grads[aux[4]].noalias() += dar * hv.transpose();
                    grads[aux[5]].col(0) += dar;
                    dh.noalias() += (*params_)[aux[4]].transpose() * dar;
                    du.noalias() += (*params_)[aux[3]].transpose() * dar;

                    Vec daz = dz.array() * z.array() * (S(1) - z.array());
                    grads[aux[0]].noalias() += daz * uv.transpose();
                    grads[aux[1]].noalias() += daz * hv.transpose();
                    grads[aux[2]].col(0) += daz;
                    dh.noalias() += (*params_)[aux[1]].transpose() * daz;
                    du.noalias() += (*params_)[aux[0]].transpose() * daz;

                    bump(parents[0]) += du;
                    bump(parents[1]) += dh;
                    break;
                }
            }
        }
    }

  private:
    struct Node {
        Op op;
        int a = -1, b = -1;    // param index / row / pick index
        S c = S(0), c2 = S(0);  // constants (scale factor, time, ...)
        int32_t p0 = 0, p1 = 0;  // parent range in the pool
        int32_t a0 = 0, a1 = 0;  // aux-int range in the pool
        int64_t voff = 0;        // value range in the arena
        int32_t vlen = 0;
    };

    std::span<const int> pool_span(int32_t lo, int32_t hi) const {
        return {pool_.data() + lo, pool_.data() + hi};
    }

    VarId push(Op op, const Vec& value, std::span<const VarId> parents,
               std::span<const int> aux) {
        Node n;
        n.op = op;
        n.p0 = static_cast<int32_t>(pool_.size());
        for (VarId p : parents) pool_.push_back(p);
        n.p1 = static_cast<int32_t>(pool_.size());
        n.a0 = static_cast<int32_t>(pool_.size());
        for (int x : aux) pool_.push_back(x);
        n.a1 = static_cast<int32_t>(pool_.size());
        n.voff = static_cast<int64_t>(buf_.size());
        n.vlen = static_cast<int32_t>(value.size());
        buf_.insert(buf_.end(), value.data(), value.data() + value.size());
        nodes_.push_back(n);
        return static_cast<VarId>(nodes_.size()) - 1;
    }

    const ParamStore<S>* params_;
    std::vector<Node> nodes_;
    std::vector<S> buf_;   // value arena; node i owns [voff, voff+vlen)
    std::vector<int> pool_;
    mutable std::vector<S> gbuf_;  // gradient arena, mirrors buf_ offsets
    mutable std::vector<uint64_t> gstamp_;
    mutable uint64_t gpass_ = 0;
};

}  // namespace kgr
