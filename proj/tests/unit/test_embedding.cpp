// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "fixtures.hpp"
#include "ssgsim/dataset.hpp"
#include "ssgsim/embedding.hpp"
#include "ssgsim/error.hpp"
#include "ssgsim/io.hpp"
#include "ssgsim/opcodes.hpp"
#include "ssgsim/random.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace ssgsim;

namespace {

std::vector<GraphInput> fixture_graphs()
{
    std::vector<GraphInput> out;
    for (const auto& fx : fixtures::all_fixtures())
        for (const auto& [fn, g] : extract_ssgs(fx.code))
            if (!g.degenerate())
                out.push_back(prepare(g));
    return out;
}

/// Relabels nodes: new id of old node v is perm[v].
GraphInput permute(const GraphInput& g, const std::vector<std::uint32_t>& perm)
{
    GraphInput out;
    out.features.resize(g.size());
    for (auto& lists : out.in)
        lists.assign(g.size(), {});
    for (std::size_t v = 0; v < g.size(); ++v) {
        out.features[perm[v]] = g.features[v];
        for (std::size_t r = 0; r < kRelationCount; ++r)
            for (auto u : g.in[r][v])
                out.in[r][perm[v]].push_back(perm[u]);
    }
    return out;
}

std::vector<GraphPair> mixed_batch(std::size_t graphs, std::uint64_t seed, std::size_t n = 12)
{
    auto rng = sub_generator(seed, "batch");
    std::vector<GraphPair> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({rng() % graphs, rng() % graphs, i % 2 == 0 ? 1 : -1});
    return out;
}

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("ssgsim_test_" + name);
}

// --- encoding ---

TEST(Encoding, ControlNode)
{
    ControlNode c;
    c.category = StableCategory::Storage;
    c.opcode = OP_SSTORE;
    auto f = encode_attributes(c);
    std::vector<std::uint16_t> want = {static_cast<std::uint16_t>(kNodeTypeOffset),
                                       static_cast<std::uint16_t>(kCategoryOffset + 0),
                                       static_cast<std::uint16_t>(kOpcodeOffset + 0x55)};
    EXPECT_EQ(f.active, want);
    auto dense = f.dense<double>();
    EXPECT_EQ(dense.size(), kFeatureDim);
    EXPECT_EQ(dense.sum(), 3.0);
    EXPECT_EQ(dense.segment(kDataKindOffset, kFeatureDim - kDataKindOffset).sum(), 0.0);
}

TEST(Encoding, ConstantOneSetsLowestPayloadBit)
{
    DataNode d;
    d.kind = DataKind::Constant;
    d.attrs.value = Word{1};
    auto f = encode_attributes(d);
    std::vector<std::uint16_t> want = {static_cast<std::uint16_t>(kNodeTypeOffset + 1),
                                       static_cast<std::uint16_t>(kDataKindOffset + 0),
                                       static_cast<std::uint16_t>(kFeatureDim - 1)};
    EXPECT_EQ(f.active, want);
}

TEST(Encoding, SegmentsAreOneHot)
{
    for (const auto& fx : fixtures::all_fixtures()) {
        for (const auto& [fn, g] : extract_ssgs(fx.code)) {
            auto in = prepare(g);
            for (std::size_t v = 0; v < in.size(); ++v) {
                auto x = in.features[v].dense<double>();
                EXPECT_EQ(x.segment(kNodeTypeOffset, 2).sum(), 1.0);
                const bool control = v < g.control_nodes.size();
                EXPECT_EQ(x.segment(kCategoryOffset, 4).sum(), control ? 1.0 : 0.0);
                EXPECT_EQ(x.segment(kDataKindOffset, 9).sum(), control ? 0.0 : 1.0);
                EXPECT_LE(x.segment(kOpcodeOffset, 256).sum(), 1.0);
            }
        }
    }
}

TEST(Encoding, CropOrPad)
{
    std::vector<std::uint8_t> text(40);
    for (std::size_t i = 0; i < text.size(); ++i)
        text[i] = static_cast<std::uint8_t>('a' + i % 26);
    auto c = crop_or_pad(text);
    EXPECT_TRUE(std::equal(c.begin(), c.end(), text.begin()));

    std::vector<std::uint8_t> small = {0x12, 0x34};
    auto p = crop_or_pad(small);
    EXPECT_EQ(p[30], 0x12);
    EXPECT_EQ(p[31], 0x34);
    EXPECT_EQ(std::count(p.begin(), p.end(), 0), 30);
}

// --- embedding ---

TEST(Embed, UnitNormAndEmptyGraph)
{
    auto m = init_model<double>(32, 1, 3);
    for (const auto& g : fixture_graphs())
        EXPECT_NEAR(embed(g, m).norm(), 1.0, 1e-12);
    auto zero = embed(GraphInput{}, m);
    EXPECT_EQ(zero.size(), 32);
    EXPECT_EQ(zero.norm(), 0.0);
}

TEST(Embed, PermutationInvariantBitwise)
{
    for (int depth : {1, 2}) {
        auto m = init_model<double>(32, depth, 9);
        auto rng = sub_generator(depth, "perm");
        for (const auto& g : fixture_graphs()) {
            std::vector<std::uint32_t> perm(g.size());
            std::iota(perm.begin(), perm.end(), 0u);
            std::shuffle(perm.begin(), perm.end(), rng);
            auto a = embed(g, m);
            auto b = embed(permute(g, perm), m);
            EXPECT_TRUE(a == b) << (a - b).norm();
        }
    }
}

TEST(Embed, FloatAndDoubleAgree)
{
    auto md = init_model<double>(16, 1, 4);
    auto mf = init_model<float>(16, 1, 4);
    for (const auto& g : fixture_graphs())
        EXPECT_LT((embed(g, md).cast<float>() - embed(g, mf)).norm(), 1e-4f);
}

// --- similarity ---

TEST(Similarity, Examples)
{
    Eigen::VectorXd a(3), b(3);
    a << 1, 2, 3;
    b << -3, 0, 1;
    EXPECT_DOUBLE_EQ(similarity(a, a), 1.0);
    EXPECT_DOUBLE_EQ(similarity(a, -a), -1.0);
    EXPECT_DOUBLE_EQ(similarity(a, b), 0.0);
    EXPECT_EQ(similarity(a, Eigen::VectorXd::Zero(3)), 0.0);
}

TEST(Similarity, SymmetricAndBounded)
{
    auto rng = sub_generator(2, "sim");
    std::normal_distribution<double> n(0, 1);
    for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd a(8), b(8);
        for (int k = 0; k < 8; ++k) {
            a(k) = n(rng) * std::pow(10.0, (i % 7) - 3);
            b(k) = n(rng);
        }
        const double s = similarity(a, b);
        EXPECT_EQ(s, similarity(b, a));
        EXPECT_GE(s, -1.0);
        EXPECT_LE(s, 1.0);
    }
}

// --- loss ---

TEST(Loss, Examples)
{
    std::vector<double> s1 = {1, 1, -1, -1};
    std::vector<int> y = {1, 1, -1, -1};
    EXPECT_DOUBLE_EQ(siamese_loss<double>(s1, y), -3.0);
    std::vector<double> s0 = {0, 0, 0, 0};
    EXPECT_DOUBLE_EQ(siamese_loss<double>(s0, y), -1.0);
    std::vector<double> half = {0.5, 0.5};
    std::vector<int> y2 = {1, -1};
    EXPECT_DOUBLE_EQ(siamese_loss<double>(half, y2), -1.0);
}

TEST(Loss, MissingClassDropsItsTerm)
{
    std::vector<double> s = {0.25, 0.75};
    std::vector<int> pos = {1, 1};
    std::vector<int> neg = {-1, -1};
    EXPECT_DOUBLE_EQ(siamese_loss<double>(s, pos), -0.5);
    EXPECT_DOUBLE_EQ(siamese_loss<double>(s, neg), -0.5);
}

TEST(Loss, EmptyBatch)
{
    try {
        siamese_loss<double>({}, {});
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyBatch);
    }
}

TEST(Loss, MatchesDirectRecomputation)
{
    auto rng = sub_generator(5, "loss");
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 50;
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = u(rng);
            y[i] = i < 1 ? 1 : i < 2 ? -1 : (rng() % 2 ? 1 : -1);
        }
        double pos = 0, neg = 0;
        int np = 0, nn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (y[i] > 0) {
                pos += s[i];
                ++np;
            } else {
                neg += 1 - s[i];
                ++nn;
            }
        }
        EXPECT_NEAR(siamese_loss<double>(s, y), -(pos / np + neg / nn), 1e-12);
    }
}

// --- gradients ---

TEST(Gradient, MatchesFiniteDifferences)
{
    auto graphs = fixture_graphs();
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        for (int depth : {1, 2}) {
            auto m = init_model<double>(16, depth, seed);
            auto batch = mixed_batch(graphs.size(), seed);
            auto r = gradient_check<double>(m, graphs, batch, 1e-5, 200, seed);
            EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " depth " << depth;
            EXPECT_EQ(r.checked + r.skipped, 200u);
        }
    }
}

TEST(Gradient, ScaledGradientIsDetected)
{
    auto graphs = fixture_graphs();
    auto m = init_model<double>(16, 1, 1);
    auto r = gradient_check<double>(m, graphs, mixed_batch(graphs.size(), 1), 1e-5, 200, 1, 2.0);
    EXPECT_NEAR(r.max_rel_error, 0.5, 0.05);  // |2a - a| / |2a|
    EXPECT_GT(r.max_rel_error, 1e-4);
}

TEST(Gradient, ZeroDirectionsAreSkipped)
{
    // w_in columns of features no node uses have zero gradient and no effect.
    auto graphs = fixture_graphs();
    auto m = init_model<double>(8, 1, 2);
    auto r = gradient_check<double>(m, graphs, mixed_batch(graphs.size(), 2), 1e-5, 400, 2);
    EXPECT_GT(r.skipped, 0u);
    EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(Training, UntrainedModelIsNearChance)
{
    auto entries = build_synthetic_corpus({.classes = 40, .variants = 4, .families = 1, .seed = 8});
    std::vector<std::size_t> all(entries.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<GraphInput> graphs;
    for (const auto& e : entries)
        graphs.push_back(prepare(e.ssg));
    std::vector<GraphPair> pairs;
    for (const auto& p : make_pairs(entries, all, 200, 200, 8))
        pairs.push_back({p.a, p.b, p.y});
    double mean = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed)
        mean += *pair_auc(init_model<double>(64, 1, seed), graphs, pairs) / 5;
    EXPECT_NEAR(mean, 0.5, 0.1);
}

// --- training ---

struct SmallCorpus {
    std::vector<GraphInput> graphs;
    std::vector<GraphPair> pairs;
};

SmallCorpus two_class_corpus()
{
    auto entries = build_synthetic_corpus({.classes = 2, .variants = 4, .families = 1, .seed = 3});
    SmallCorpus c;
    std::vector<std::size_t> all(entries.size());
    std::iota(all.begin(), all.end(), 0);
    for (const auto& e : entries)
        c.graphs.push_back(prepare(e.ssg));
    for (const auto& p : all_pairs(entries, all))
        c.pairs.push_back({p.a, p.b, p.y});
    return c;
}

TEST(Training, LossDecreases)
{
    auto c = two_class_corpus();
    TrainingConfig cfg;
    cfg.embed_size = 16;
    cfg.epochs = 10;
    cfg.batch_pairs = 8;
    cfg.learning_rate = 0.01;
    cfg.seed = 4;
    const double initial = batch_loss(init_model<double>(16, 1, 4), std::span<const GraphInput>(c.graphs), c.pairs);
    auto res = train<double>(c.graphs, c.pairs, {}, cfg);
    ASSERT_EQ(res.log.size(), 10u);
    EXPECT_LT(res.log.back().train_loss, initial);
    EXPECT_LT(batch_loss(res.model, std::span<const GraphInput>(c.graphs), c.pairs), initial);
}

TEST(Training, ZeroLearningRateKeepsParameters)
{
    auto c = two_class_corpus();
    TrainingConfig cfg;
    cfg.embed_size = 8;
    cfg.epochs = 3;
    cfg.learning_rate = 0;
    cfg.seed = 6;
    auto res = train<double>(c.graphs, c.pairs, {}, cfg);
    EXPECT_TRUE(res.model == init_model<double>(8, 1, 6));
}

TEST(Training, SameSeedSameModel)
{
    auto c = two_class_corpus();
    TrainingConfig cfg;
    cfg.embed_size = 8;
    cfg.epochs = 4;
    cfg.batch_pairs = 5;
    cfg.learning_rate = 0.01;
    cfg.seed = 7;
    auto a = train<double>(c.graphs, c.pairs, c.pairs, cfg);
    auto b = train<double>(c.graphs, c.pairs, c.pairs, cfg);
    EXPECT_TRUE(a.model == b.model);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i)
        EXPECT_EQ(a.log[i].val_loss, b.log[i].val_loss);
    cfg.seed = 8;
    EXPECT_FALSE(train<double>(c.graphs, c.pairs, c.pairs, cfg).model == a.model);
}

TEST(Training, InvalidConfig)
{
    auto c = two_class_corpus();
    TrainingConfig cfg;
    cfg.batch_pairs = 0;
    try {
        train<double>(c.graphs, c.pairs, {}, cfg);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
    cfg.batch_pairs = 10;
    try {
        train<double>(c.graphs, {}, {}, cfg);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyBatch);
    }
}

TEST(Training, DivergenceIsReported)
{
    auto c = two_class_corpus();
    TrainingConfig cfg;
    cfg.embed_size = 8;
    cfg.epochs = 1;
    cfg.batch_pairs = 4;
    cfg.learning_rate = std::numeric_limits<double>::infinity();
    try {
        train<double>(c.graphs, c.pairs, {}, cfg);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DivergedLoss);
    }
}

// --- model files ---

TEST(ModelIo, RoundTripIsExact)
{
    auto m = init_model<double>(16, 2, 42);
    const auto path = temp_path("model.json");
    save_model(m, path.string());
    auto back = load_model(path.string());
    EXPECT_TRUE(back == m);
    std::filesystem::remove(path);
}

TEST(ModelIo, CorruptModelsAreRejected)
{
    auto good = model_to_json(init_model<double>(4, 1, 1));
    std::vector<nlohmann::json> bad;
    bad.push_back(nlohmann::json::object());
    auto j = good;
    j["format"] = "other";
    bad.push_back(j);
    j = good;
    j["version"] = 99;
    bad.push_back(j);
    j = good;
    j["matrices"]["w_out"]["rows"] = 5;
    bad.push_back(j);
    j = good;
    j["matrices"]["w_out"]["data"].erase(0);
    bad.push_back(j);
    for (const auto& b : bad) {
        try {
            model_from_json(b);
            ADD_FAILURE() << b.dump().substr(0, 80);
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::CorruptModel);
        }
    }
    const auto path = temp_path("broken.json");
    write_file_atomic(path.string(), "{not json");
    try {
        load_model(path.string());
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CorruptModel);
    }
    std::filesystem::remove(path);
}

}  // namespace
