// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include "ssgsim/error.hpp"
#include "ssgsim/metrics.hpp"
#include "ssgsim/random.hpp"
#include "ssgsim/ssg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ssgsim {

// --- attribute encoding -----------------------------------------------------

// Feature layout: node type, control category, opcode, data kind, payload.
inline constexpr Eigen::Index kNodeTypeOffset = 0;
inline constexpr Eigen::Index kCategoryOffset = 2;
inline constexpr Eigen::Index kOpcodeOffset = 6;
inline constexpr Eigen::Index kDataKindOffset = 262;
inline constexpr Eigen::Index kPayloadOffset = 271;
inline constexpr Eigen::Index kFeatureDim = 527;

/// Binary node feature stored as its set bit positions (ascending).
struct NodeFeature {
    std::vector<std::uint16_t> active;

    template <typename Scalar>
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dense() const
    {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(kFeatureDim);
        for (auto i : active)
            x(i) = Scalar(1);
        return x;
    }
};

/// 256-bit payload from big-endian bytes: shorter values are left-padded,
/// longer ones keep their first 32 bytes.
std::array<std::uint8_t, 32> crop_or_pad(std::span<const std::uint8_t> bytes);

NodeFeature encode_attributes(const ControlNode& node);
NodeFeature encode_attributes(const DataNode& node);

enum RelationIndex : std::size_t { kCC = 0, kDD = 1, kCD = 2, kRelationCount = 3 };

/// An SSG reduced to what the network reads: node features and, per
/// relation, the in-neighbours of every node.
struct GraphInput {
    std::vector<NodeFeature> features;
    std::array<std::vector<std::vector<std::uint32_t>>, kRelationCount> in;

    std::size_t size() const noexcept { return features.size(); }
};

GraphInput prepare(const Ssg& g);

// --- model ------------------------------------------------------------------

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct EmbeddingModel {
    int depth = 1;
    std::uint64_t seed = 0;
    MatrixX<Scalar> w_in;  // p x d_in
    std::array<MatrixX<Scalar>, kRelationCount> w_rel;  // p x p each, order CC, DD, CD
    MatrixX<Scalar> w_out;  // p x p

    Eigen::Index dim() const noexcept { return w_out.rows(); }

    /// Parameters in a fixed order: w_in, w_cc, w_dd, w_cd, w_out.
    template <typename F>
    void for_each(F&& f)
    {
        f(w_in);
        for (auto& w : w_rel)
            f(w);
        f(w_out);
    }
    template <typename F>
    void for_each(F&& f) const
    {
        f(w_in);
        for (const auto& w : w_rel)
            f(w);
        f(w_out);
    }

    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for_each([&](const MatrixX<Scalar>& m) { n += static_cast<std::size_t>(m.size()); });
        return n;
    }

    bool all_finite() const
    {
        bool ok = true;
        for_each([&](const MatrixX<Scalar>& m) { ok = ok && m.allFinite(); });
        return ok;
    }

    friend bool operator==(const EmbeddingModel& a, const EmbeddingModel& b)
    {
        auto same = [](const MatrixX<Scalar>& x, const MatrixX<Scalar>& y) {
            return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
        };
        if (a.depth != b.depth || a.seed != b.seed || !same(a.w_in, b.w_in) || !same(a.w_out, b.w_out))
            return false;
        for (std::size_t r = 0; r < kRelationCount; ++r) {
            if (!same(a.w_rel[r], b.w_rel[r]))
                return false;
        }
        return true;
    }
};

/// All-zero model of the same shape (gradient accumulator, Adam moments).
template <typename Scalar>
EmbeddingModel<Scalar> zeros_like(const EmbeddingModel<Scalar>& m)
{
    EmbeddingModel<Scalar> z;
    z.depth = m.depth;
    z.seed = m.seed;
    z.w_in = MatrixX<Scalar>::Zero(m.w_in.rows(), m.w_in.cols());
    for (std::size_t r = 0; r < kRelationCount; ++r)
        z.w_rel[r] = MatrixX<Scalar>::Zero(m.w_rel[r].rows(), m.w_rel[r].cols());
    z.w_out = MatrixX<Scalar>::Zero(m.w_out.rows(), m.w_out.cols());
    return z;
}

/// Uniform in [-1/sqrt(p), 1/sqrt(p)], drawn in parameter order.
template <typename Scalar>
EmbeddingModel<Scalar> init_model(int p, int depth, std::uint64_t seed)
{
    if (p <= 0 || depth < 0)
        throw Error(ErrorCode::InvalidConfig, "embedding size must be positive and depth non-negative");
    EmbeddingModel<Scalar> m;
    m.depth = depth;
    m.seed = seed;
    m.w_in.resize(p, kFeatureDim);
    for (auto& w : m.w_rel)
        w.resize(p, p);
    m.w_out.resize(p, p);
    auto rng = sub_generator(seed, "init");
    const Scalar a = Scalar(1) / std::sqrt(static_cast<Scalar>(p));
    std::uniform_real_distribution<Scalar> u(-a, a);
    m.for_each([&](MatrixX<Scalar>& w) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                w(r, c) = u(rng);
        }
    });
    return m;
}

namespace detail {

template <typename Scalar>
VectorX<Scalar> tanh(const VectorX<Scalar>& z)
{
    return z.unaryExpr([](Scalar x) { return std::tanh(x); });
}

/// Sum of the given columns of h, added in lexicographic order of the
/// column values so the result does not depend on node numbering.
template <typename Scalar>
VectorX<Scalar> canonical_sum(const MatrixX<Scalar>& h, std::vector<std::uint32_t> cols)
{
    std::sort(cols.begin(), cols.end(), [&](std::uint32_t a, std::uint32_t b) {
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
            if (h(i, a) != h(i, b))
                return h(i, a) < h(i, b);
        }
        return false;
    });
    VectorX<Scalar> acc = VectorX<Scalar>::Zero(h.rows());
    for (auto c : cols)
        acc += h.col(c);
    return acc;
}

}  // namespace detail

/// Intermediate values of one forward pass, kept for backpropagation.
template <typename Scalar>
struct ForwardTrace {
    std::vector<MatrixX<Scalar>> h;  // h[t] is p x N, t = 0..depth
    std::vector<std::array<MatrixX<Scalar>, kRelationCount>> s;  // aggregated in-messages of round t
    VectorX<Scalar> pooled;
    VectorX<Scalar> out;
    VectorX<Scalar> mu;
    Scalar norm = 0;
};

template <typename Scalar>
ForwardTrace<Scalar> forward(const GraphInput& g, const EmbeddingModel<Scalar>& m)
{
    const Eigen::Index p = m.dim();
    const auto n = static_cast<Eigen::Index>(g.size());
    ForwardTrace<Scalar> tr;
    tr.h.resize(static_cast<std::size_t>(m.depth) + 1);
    tr.s.resize(static_cast<std::size_t>(m.depth));

    MatrixX<Scalar>& h0 = tr.h[0];
    h0.resize(p, n);
    for (Eigen::Index v = 0; v < n; ++v) {
        VectorX<Scalar> z = VectorX<Scalar>::Zero(p);
        for (auto i : g.features[static_cast<std::size_t>(v)].active)
            z += m.w_in.col(i);
        h0.col(v) = detail::tanh<Scalar>(z);
    }

    std::vector<std::uint32_t> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0u);
    for (int t = 0; t < m.depth; ++t) {
        const MatrixX<Scalar>& h = tr.h[static_cast<std::size_t>(t)];
        auto& s = tr.s[static_cast<std::size_t>(t)];
        MatrixX<Scalar>& next = tr.h[static_cast<std::size_t>(t) + 1];
        next.resize(p, n);
        for (auto& sr : s)
            sr.resize(p, n);
        for (Eigen::Index v = 0; v < n; ++v) {
            VectorX<Scalar> z = h.col(v);
            for (std::size_t r = 0; r < kRelationCount; ++r) {
                VectorX<Scalar> agg = detail::canonical_sum<Scalar>(h, g.in[r][static_cast<std::size_t>(v)]);
                VectorX<Scalar> msg = m.w_rel[r] * agg;
                z += msg;
                s[r].col(v) = agg;
            }
            next.col(v) = detail::tanh<Scalar>(z);
        }
    }

    tr.pooled = detail::canonical_sum<Scalar>(tr.h.back(), all);
    tr.out = m.w_out * tr.pooled;
    tr.norm = tr.out.norm();
    tr.mu = n == 0 || tr.norm == Scalar(0) ? VectorX<Scalar>(VectorX<Scalar>::Zero(p)) : VectorX<Scalar>(tr.out / tr.norm);
    return tr;
}

/// Adds dL/dtheta to grad given dL/dmu for the graph traced in tr.
template <typename Scalar>
void backward(const GraphInput& g, const EmbeddingModel<Scalar>& m, const ForwardTrace<Scalar>& tr,
              const VectorX<Scalar>& dmu, EmbeddingModel<Scalar>& grad)
{
    const auto n = static_cast<Eigen::Index>(g.size());
    if (n == 0 || tr.norm == Scalar(0))
        return;
    const VectorX<Scalar> dout = (dmu - tr.mu * tr.mu.dot(dmu)) / tr.norm;
    grad.w_out.noalias() += dout * tr.pooled.transpose();
    const VectorX<Scalar> dpooled = m.w_out.transpose() * dout;

    MatrixX<Scalar> dh = dpooled.replicate(1, n);
    for (int t = m.depth; t > 0; --t) {
        const MatrixX<Scalar>& h = tr.h[static_cast<std::size_t>(t)];
        const auto& s = tr.s[static_cast<std::size_t>(t) - 1];
        const MatrixX<Scalar> dz = dh.array() * (Scalar(1) - h.array().square());
        MatrixX<Scalar> dprev = dz;  // residual path
        for (std::size_t r = 0; r < kRelationCount; ++r) {
            grad.w_rel[r].noalias() += dz * s[r].transpose();
            const MatrixX<Scalar> ds = m.w_rel[r].transpose() * dz;
            for (Eigen::Index v = 0; v < n; ++v) {
                for (auto u : g.in[r][static_cast<std::size_t>(v)])
                    dprev.col(u) += ds.col(v);
            }
        }
        dh = std::move(dprev);
    }
    const MatrixX<Scalar> dz0 = dh.array() * (Scalar(1) - tr.h[0].array().square());
    for (Eigen::Index v = 0; v < n; ++v) {
        for (auto i : g.features[static_cast<std::size_t>(v)].active)
            grad.w_in.col(i) += dz0.col(v);
    }
}

/// Graph embedding mu: unit length, or zero for an empty graph.
template <typename Scalar>
VectorX<Scalar> embed(const GraphInput& g, const EmbeddingModel<Scalar>& m)
{
    return forward(g, m).mu;
}

template <typename Scalar>
VectorX<Scalar> embed_ssg(const Ssg& g, const EmbeddingModel<Scalar>& m)
{
    return embed(prepare(g), m);
}

/// Cosine similarity; 0 when either vector is zero.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
{
    using Scalar = typename DerivedA::Scalar;
    if (a.size() != b.size())
        throw Error(ErrorCode::DimensionMismatch, "similarity of vectors with different sizes");
    const Scalar na = a.norm();
    const Scalar nb = b.norm();
    if (na == Scalar(0) || nb == Scalar(0))
        return Scalar(0);
    const Scalar c = a.dot(b) / (na * nb);
    return std::clamp(c, Scalar(-1), Scalar(1));
}

// --- loss -------------------------------------------------------------------

/// -(mean over similar pairs of Sim + mean over dissimilar pairs of (1 - Sim)).
/// A mean whose pair set is empty is dropped. Throws Error{EmptyBatch}.
template <typename Scalar>
Scalar siamese_loss(std::span<const Scalar> sims, std::span<const int> labels)
{
    if (sims.empty() || sims.size() != labels.size())
        throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");
    Scalar pos = 0;
    Scalar neg = 0;
    std::size_t np = 0;
    std::size_t nn = 0;
    for (std::size_t i = 0; i < sims.size(); ++i) {
        if (labels[i] > 0) {
            pos += sims[i];
            ++np;
        } else {
            neg += Scalar(1) - sims[i];
            ++nn;
        }
    }
    Scalar loss = 0;
    if (np > 0)
        loss -= pos / static_cast<Scalar>(np);
    if (nn > 0)
        loss -= neg / static_cast<Scalar>(nn);
    return loss;
}

struct GraphPair {
    std::size_t a = 0;
    std::size_t b = 0;
    int y = 1;
};

/// Loss of a batch; when grad is given, adds dL/dtheta to it. Each distinct
/// graph is forwarded once, so both towers share one parameter set.
template <typename Scalar>
Scalar batch_loss(const EmbeddingModel<Scalar>& m, std::span<const GraphInput> graphs, std::span<const GraphPair> batch,
                  EmbeddingModel<Scalar>* grad = nullptr)
{
    if (batch.empty())
        throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");
    std::map<std::size_t, ForwardTrace<Scalar>> traces;
    for (const auto& pr : batch) {
        for (std::size_t idx : {pr.a, pr.b}) {
            if (!traces.contains(idx))
                traces.emplace(idx, forward(graphs[idx], m));
        }
    }
    std::vector<Scalar> sims;
    std::vector<int> labels;
    std::size_t np = 0;
    for (const auto& pr : batch) {
        sims.push_back(traces.at(pr.a).mu.dot(traces.at(pr.b).mu));
        labels.push_back(pr.y);
        np += pr.y > 0 ? 1 : 0;
    }
    const Scalar loss = siamese_loss<Scalar>(sims, labels);
    if (!grad)
        return loss;

    const std::size_t nn = batch.size() - np;
    std::map<std::size_t, VectorX<Scalar>> dmu;
    for (const auto& [idx, tr] : traces)
        dmu.emplace(idx, VectorX<Scalar>::Zero(m.dim()));
    for (const auto& pr : batch) {
        // dL/dSim: -1/|E+| for similar pairs, +1/|E-| for dissimilar ones.
        const Scalar w = pr.y > 0 ? -Scalar(1) / static_cast<Scalar>(np) : Scalar(1) / static_cast<Scalar>(nn);
        const auto& ma = traces.at(pr.a).mu;
        const auto& mb = traces.at(pr.b).mu;
        dmu.at(pr.a) += w * mb;
        dmu.at(pr.b) += w * ma;
    }
    for (const auto& [idx, tr] : traces)
        backward(graphs[idx], m, tr, dmu.at(idx), *grad);
    return loss;
}

// --- gradient check ---------------------------------------------------------

struct GradCheckResult {
    double max_rel_error = 0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // both gradients zero
};

/// Compares analytic gradients with central differences on `samples`
/// random coordinates. Relative error is |a - n| / max(|a|, |n|, floor).
/// grad_scale multiplies the analytic gradient (fault injection).
template <typename Scalar>
GradCheckResult gradient_check(const EmbeddingModel<Scalar>& m, std::span<const GraphInput> graphs,
                               std::span<const GraphPair> batch, Scalar h = Scalar(1e-5), std::size_t samples = 200,
                               std::uint64_t seed = 0, Scalar grad_scale = Scalar(1), Scalar floor = Scalar(1e-6))
{
    EmbeddingModel<Scalar> grad = zeros_like(m);
    batch_loss(m, graphs, batch, &grad);

    std::vector<MatrixX<Scalar>*> params;
    std::vector<const MatrixX<Scalar>*> grads;
    EmbeddingModel<Scalar> probe = m;
    probe.for_each([&](MatrixX<Scalar>& w) { params.push_back(&w); });
    grad.for_each([&](const MatrixX<Scalar>& w) { grads.push_back(&w); });
    std::vector<std::size_t> offsets{0};
    for (auto* w : params)
        offsets.push_back(offsets.back() + static_cast<std::size_t>(w->size()));

    auto rng = sub_generator(seed, "gradcheck");
    std::uniform_int_distribution<std::size_t> pick(0, offsets.back() - 1);
    GradCheckResult res;
    for (std::size_t k = 0; k < samples; ++k) {
        const std::size_t flat = pick(rng);
        const auto which = static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin() - 1);
        const auto local = static_cast<Eigen::Index>(flat - offsets[which]);
        Scalar& theta = params[which]->data()[local];
        const Scalar saved = theta;
        theta = saved + h;
        const Scalar up = batch_loss(probe, graphs, batch);
        theta = saved - h;
        const Scalar down = batch_loss(probe, graphs, batch);
        theta = saved;

        const Scalar numeric = (up - down) / (Scalar(2) * h);
        const Scalar analytic = grad_scale * grads[which]->data()[local];
        if (numeric == Scalar(0) && analytic == Scalar(0)) {
            ++res.skipped;
            continue;
        }
        const Scalar denom = std::max({std::abs(analytic), std::abs(numeric), floor});
        res.max_rel_error = std::max(res.max_rel_error, static_cast<double>(std::abs(analytic - numeric) / denom));
        ++res.checked;
    }
    return res;
}

// --- training ---------------------------------------------------------------

struct TrainingConfig {
    double learning_rate = 0.001;
    std::size_t batch_pairs = 100;
    std::size_t epochs = 50;
    int embed_size = 64;
    int depth = 1;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    std::optional<double> val_auc;
};

template <typename Scalar>
struct TrainResult {
    EmbeddingModel<Scalar> model;  // lowest validation loss seen, initialization included
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;  // 0 = initialization
};

template <typename Scalar>
struct Adam {
    EmbeddingModel<Scalar> m1, m2;
    std::size_t t = 0;

    explicit Adam(const EmbeddingModel<Scalar>& model) : m1(zeros_like(model)), m2(zeros_like(model)) {}

    void step(EmbeddingModel<Scalar>& model, const EmbeddingModel<Scalar>& grad, const TrainingConfig& cfg)
    {
        ++t;
        const Scalar b1 = static_cast<Scalar>(cfg.beta1);
        const Scalar b2 = static_cast<Scalar>(cfg.beta2);
        const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
        const Scalar eps = static_cast<Scalar>(cfg.adam_eps);
        const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(t));
        const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(t));
        std::vector<MatrixX<Scalar>*> w, a, b;
        std::vector<const MatrixX<Scalar>*> g;
        model.for_each([&](MatrixX<Scalar>& x) { w.push_back(&x); });
        m1.for_each([&](MatrixX<Scalar>& x) { a.push_back(&x); });
        m2.for_each([&](MatrixX<Scalar>& x) { b.push_back(&x); });
        grad.for_each([&](const MatrixX<Scalar>& x) { g.push_back(&x); });
        for (std::size_t i = 0; i < w.size(); ++i) {
            *a[i] = b1 * *a[i] + (Scalar(1) - b1) * *g[i];
            *b[i] = b2 * *b[i] + (Scalar(1) - b2) * g[i]->cwiseProduct(*g[i]);
            w[i]->array() -= lr * (a[i]->array() / c1) / ((b[i]->array() / c2).sqrt() + eps);
        }
    }
};

template <typename Scalar>
std::vector<Scalar> pair_scores(const EmbeddingModel<Scalar>& m, std::span<const GraphInput> graphs,
                                std::span<const GraphPair> pairs)
{
    std::map<std::size_t, VectorX<Scalar>> cache;
    auto mu = [&](std::size_t i) -> const VectorX<Scalar>& {
        auto it = cache.find(i);
        if (it == cache.end())
            it = cache.emplace(i, embed(graphs[i], m)).first;
        return it->second;
    };
    std::vector<Scalar> out;
    out.reserve(pairs.size());
    for (const auto& pr : pairs)
        out.push_back(similarity(mu(pr.a), mu(pr.b)));
    return out;
}

/// AUC of the model's pair similarities, nullopt when one label is missing.
template <typename Scalar>
std::optional<double> pair_auc(const EmbeddingModel<Scalar>& m, std::span<const GraphInput> graphs,
                               std::span<const GraphPair> pairs)
{
    auto s = pair_scores(m, graphs, pairs);
    std::vector<double> scores(s.begin(), s.end());
    std::vector<int> labels;
    for (const auto& pr : pairs)
        labels.push_back(pr.y);
    bool pos = std::any_of(labels.begin(), labels.end(), [](int y) { return y > 0; });
    bool neg = std::any_of(labels.begin(), labels.end(), [](int y) { return y < 0; });
    if (!pos || !neg)
        return std::nullopt;
    return compute_auc(scores, labels);
}

/// Mini-batch Adam on the Siamese loss. Pairs are shuffled every epoch
/// with the "shuffle" sub-generator; the model is initialized from "init".
/// With an empty validation set the training loss selects the best model.
/// Throws Error{DivergedLoss} on a non-finite loss.
template <typename Scalar>
TrainResult<Scalar> train(std::span<const GraphInput> graphs, std::span<const GraphPair> train_pairs,
                          std::span<const GraphPair> val_pairs, const TrainingConfig& cfg,
                          const std::function<void(const EpochLog&)>& on_epoch = {})
{
    if (!(cfg.learning_rate >= 0) || cfg.batch_pairs == 0)
        throw Error(ErrorCode::InvalidConfig, "learning rate must be non-negative and batch size at least 1");
    if (train_pairs.empty())
        throw Error(ErrorCode::EmptyBatch, "no training pairs");

    TrainResult<Scalar> res;
    EmbeddingModel<Scalar> model = init_model<Scalar>(cfg.embed_size, cfg.depth, cfg.seed);
    Adam<Scalar> adam(model);
    auto shuffle_rng = sub_generator(cfg.seed, "shuffle");

    auto selection_loss = [&](const EmbeddingModel<Scalar>& m) {
        return static_cast<double>(val_pairs.empty() ? batch_loss(m, graphs, train_pairs) : batch_loss(m, graphs, val_pairs));
    };
    res.model = model;
    double best = selection_loss(model);

    std::vector<GraphPair> order(train_pairs.begin(), train_pairs.end());
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double sum = 0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_pairs) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_pairs);
            std::span<const GraphPair> batch(order.data() + start, end - start);
            EmbeddingModel<Scalar> grad = zeros_like(model);
            const Scalar loss = batch_loss(model, graphs, batch, &grad);
            if (!std::isfinite(static_cast<double>(loss)) || !grad.all_finite())
                throw Error(ErrorCode::DivergedLoss, "non-finite loss in epoch " + std::to_string(epoch));
            adam.step(model, grad, cfg);
            sum += static_cast<double>(loss);
            ++batches;
        }
        EpochLog row;
        row.epoch = epoch;
        row.train_loss = sum / static_cast<double>(batches);
        row.val_loss = val_pairs.empty() ? row.train_loss : selection_loss(model);
        if (!val_pairs.empty())
            row.val_auc = pair_auc(model, graphs, val_pairs);
        if (!std::isfinite(row.val_loss))
            throw Error(ErrorCode::DivergedLoss, "non-finite validation loss in epoch " + std::to_string(epoch));
        const double sel = val_pairs.empty() ? selection_loss(model) : row.val_loss;
        if (sel < best) {
            best = sel;
            res.model = model;
            res.best_epoch = epoch;
        }
        res.log.push_back(row);
        if (on_epoch)
            on_epoch(row);
    }
    return res;
}

// --- files ------------------------------------------------------------------

/// JSON container: format tag, version, shapes, seed and row-major payloads.
nlohmann::json model_to_json(const EmbeddingModel<double>& m);
/// Validates the format tag, version and shapes. Throws Error{CorruptModel}.
EmbeddingModel<double> model_from_json(const nlohmann::json& j);
void save_model(const EmbeddingModel<double>& m, const std::string& path);
EmbeddingModel<double> load_model(const std::string& path);

}  // namespace ssgsim
