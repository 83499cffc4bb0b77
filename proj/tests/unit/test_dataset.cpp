// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "oracles.hpp"
#include "ssgsim/dataset.hpp"
#include "ssgsim/error.hpp"
#include "ssgsim/metrics.hpp"
#include "ssgsim/random.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace ssgsim;

namespace {

std::vector<CorpusEntry> toy_corpus(std::size_t classes, std::size_t variants)
{
    std::vector<CorpusEntry> out;
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t v = 0; v < variants; ++v)
            out.push_back({"c" + std::to_string(c), "v" + std::to_string(v), {}});
    return out;
}

std::vector<std::size_t> everything(const std::vector<CorpusEntry>& e)
{
    std::vector<std::size_t> idx(e.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

template <typename F>
void expect_error(ErrorCode code, F&& f)
{
    try {
        f();
        ADD_FAILURE() << "no error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

std::filesystem::path temp_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("ssgsim_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

// --- AUC ---

TEST(Auc, Examples)
{
    std::vector<double> s = {0.9, 0.8, 0.4, 0.7, 0.3, 0.1};
    std::vector<int> y = {1, 1, 1, -1, -1, -1};
    // .4 loses to .7, everything else wins: 8 of 9 comparisons.
    EXPECT_NEAR(compute_auc(s, y), 8.0 / 9.0, 1e-15);
    EXPECT_NEAR(compute_auc(s, y), oracle::pairwise_auc(s, y), 1e-15);
    // With .4 raised to tie .7 the tie adds one half.
    s[2] = 0.7;
    EXPECT_NEAR(compute_auc(s, y), 8.5 / 9.0, 1e-15);
    std::vector<double> sep = {3, 2, 1, 0};
    std::vector<int> ys = {1, 1, -1, -1};
    EXPECT_EQ(compute_auc(sep, ys), 1.0);
    std::vector<double> flat = {0.5, 0.5, 0.5, 0.5};
    EXPECT_EQ(compute_auc(flat, ys), 0.5);
}

TEST(Auc, SingleClass)
{
    std::vector<double> s = {0.1, 0.2};
    std::vector<int> y = {1, 1};
    expect_error(ErrorCode::SingleClass, [&] { compute_auc(s, y); });
}

TEST(Auc, MatchesPairwiseOracle)
{
    auto rng = sub_generator(1, "auc");
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng() % 999;
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse scores force plenty of ties.
            s[i] = trial % 2 ? std::round(u(rng) * 20) / 20 : u(rng);
            y[i] = i == 0 ? 1 : i == 1 ? -1 : (rng() % 3 == 0 ? 1 : -1);
        }
        EXPECT_NEAR(compute_auc(s, y), oracle::pairwise_auc(s, y), 1e-12);
    }
}

TEST(Auc, InvariantUnderMonotoneTransform)
{
    auto rng = sub_generator(2, "auc-monotone");
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<double> s(300), t(300);
    std::vector<int> y(300);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = u(rng);
        t[i] = std::exp(3 * s[i]) + 7;
        y[i] = rng() % 2 ? 1 : -1;
    }
    EXPECT_EQ(compute_auc(s, y), compute_auc(t, y));
}

// --- splits ---

TEST(Split, TenClassesGiveSevenTwoOne)
{
    auto e = toy_corpus(10, 3);
    auto s = split_corpus(e, 5);
    auto classes = [&](const std::vector<std::size_t>& idx) {
        std::set<std::string> out;
        for (auto i : idx)
            out.insert(e[i].source_function_id);
        return out;
    };
    EXPECT_EQ(classes(s.train).size(), 7u);
    EXPECT_EQ(classes(s.val).size(), 2u);
    EXPECT_EQ(classes(s.test).size(), 1u);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), e.size());
}

TEST(Split, DeterministicAndClassDisjoint)
{
    for (std::size_t n : {10u, 13u, 37u, 100u}) {
        auto e = toy_corpus(n, 2);
        auto a = split_corpus(e, 9);
        auto b = split_corpus(e, 9);
        EXPECT_EQ(a.train, b.train);
        EXPECT_EQ(a.val, b.val);
        EXPECT_EQ(a.test, b.test);
        std::map<std::string, int> where;
        for (auto i : a.train)
            where[e[i].source_function_id] |= 1;
        for (auto i : a.val)
            where[e[i].source_function_id] |= 2;
        for (auto i : a.test)
            where[e[i].source_function_id] |= 4;
        for (const auto& [cls, mask] : where)
            EXPECT_TRUE(mask == 1 || mask == 2 || mask == 4) << cls;
        EXPECT_EQ(a.val.size() / 2, n * 2 / 10);
        EXPECT_EQ(a.test.size() / 2, n / 10);
    }
}

TEST(Split, TooFewClasses)
{
    expect_error(ErrorCode::TooFewClasses, [] { split_corpus(toy_corpus(9, 5), 1); });
}

// --- pairs ---

TEST(Pairs, SinglePositive)
{
    auto e = toy_corpus(1, 2);
    auto p = make_pairs(e, everything(e), 1, 0, 3);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0].y, 1);
    EXPECT_EQ(std::minmax(p[0].a, p[0].b), std::minmax(std::size_t{0}, std::size_t{1}));
}

TEST(Pairs, LabelsFollowClassesWithoutRepeats)
{
    auto e = toy_corpus(8, 4);
    auto p = make_pairs(e, everything(e), 40, 60, 4);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::size_t pos = 0;
    for (const auto& pr : p) {
        EXPECT_NE(pr.a, pr.b);
        const bool same = e[pr.a].source_function_id == e[pr.b].source_function_id;
        EXPECT_EQ(pr.y, same ? 1 : -1);
        EXPECT_TRUE(seen.insert(std::minmax(pr.a, pr.b)).second);
        pos += pr.y > 0;
    }
    EXPECT_EQ(pos, 40u);
    EXPECT_EQ(p.size(), 100u);
    auto again = make_pairs(e, everything(e), 40, 60, 4);
    ASSERT_EQ(again.size(), p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        EXPECT_TRUE(again[i].a == p[i].a && again[i].b == p[i].b);
}

TEST(Pairs, ExactlyAllAvailablePairs)
{
    // 3 classes x 2 variants: 3 positive and 12 negative unordered pairs.
    auto e = toy_corpus(3, 2);
    EXPECT_EQ(make_pairs(e, everything(e), 3, 12, 1).size(), 15u);
    expect_error(ErrorCode::InsufficientVariants, [&] { make_pairs(e, everything(e), 4, 0, 1); });
    expect_error(ErrorCode::InsufficientVariants, [&] { make_pairs(e, everything(e), 0, 13, 1); });
    EXPECT_EQ(all_pairs(e, everything(e)).size(), 15u);
}

// --- files ---

TEST(Files, ManifestAndPairsRoundTrip)
{
    auto dir = temp_dir("files");
    std::vector<ManifestEntry> m = {{"a.v0", "a", "v0", "ssg/a.json"}, {"b.v1", "b", "v1", "/abs/b.json"}};
    write_manifest((dir / "manifest.json").string(), m);
    auto back = read_manifest((dir / "manifest.json").string());
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].ssg_path, "/abs/b.json");
    EXPECT_EQ(back[0].source_function_id, "a");

    std::vector<KeyedPair> pairs = {{"a.v0", "b.v1", -1}, {"a.v0", "a.v1", 1}};
    write_pairs((dir / "pairs.jsonl").string(), pairs);
    auto pb = read_pairs((dir / "pairs.jsonl").string());
    ASSERT_EQ(pb.size(), 2u);
    EXPECT_EQ(pb[0].b, "b.v1");
    EXPECT_EQ(pb[0].y, -1);
    EXPECT_EQ(pb[1].y, 1);
    std::filesystem::remove_all(dir);
}

TEST(Files, MalformedInputs)
{
    auto dir = temp_dir("bad_files");
    std::ofstream((dir / "pairs.jsonl")) << "{\"a\":\"x\",\"b\":\"y\",\"y\":3}\n";
    expect_error(ErrorCode::IoError, [&] { read_pairs((dir / "pairs.jsonl").string()); });
    expect_error(ErrorCode::IoError, [&] { read_manifest((dir / "missing.json").string()); });
    std::filesystem::remove_all(dir);
}

TEST(Files, LoadCorpusResolvesRelativePaths)
{
    auto dir = temp_dir("corpus");
    auto entries = build_synthetic_corpus({.classes = 2, .variants = 2, .families = 1, .seed = 1});
    std::filesystem::create_directories(dir / "ssg");
    std::vector<ManifestEntry> m;
    for (const auto& e : entries) {
        std::ofstream(dir / "ssg" / (e.key() + ".json")) << to_canonical_json(e.ssg);
        m.push_back({e.key(), e.source_function_id, e.variant_id, "ssg/" + e.key() + ".json"});
    }
    write_manifest((dir / "manifest.json").string(), m);
    auto loaded = load_corpus((dir / "manifest.json").string());
    ASSERT_EQ(loaded.size(), entries.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        EXPECT_EQ(loaded[i].key(), entries[i].key());
        EXPECT_EQ(to_canonical_json(loaded[i].ssg), to_canonical_json(entries[i].ssg));
    }
    std::filesystem::remove_all(dir);
}

// --- synthetic corpus ---

TEST(Synthetic, DeterministicAndWellFormed)
{
    SynthConfig cfg{.classes = 5, .variants = 4, .families = 2, .seed = 17};
    auto a = generate_synthetic(cfg);
    auto b = generate_synthetic(cfg);
    ASSERT_EQ(a.size(), 20u);
    std::set<std::pair<std::string, std::string>> ids;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].code.bytes, b[i].code.bytes);
        EXPECT_TRUE(ids.insert({a[i].source_function_id, a[i].variant_id}).second);
        EXPECT_LE(a[i].code.size(), kMaxCodeSize);
        auto fns = get_functions(a[i].code);
        EXPECT_TRUE(fns.contains(FunctionId::of(a[i].selector)));
    }
    cfg.seed = 18;
    EXPECT_NE(generate_synthetic(cfg)[0].code.bytes, a[0].code.bytes);
}

TEST(Synthetic, VariantsOfAClassDifferInBytes)
{
    auto c = generate_synthetic({.classes = 3, .variants = 4, .families = 1, .seed = 2});
    std::set<std::vector<std::uint8_t>> distinct;
    for (const auto& x : c)
        distinct.insert(x.code.bytes);
    EXPECT_EQ(distinct.size(), c.size());
}

TEST(Synthetic, CorpusGraphsAreValid)
{
    for (const auto& e : build_synthetic_corpus({.classes = 6, .variants = 3, .families = 2, .seed = 8})) {
        EXPECT_FALSE(e.ssg.degenerate()) << e.key();
        EXPECT_TRUE(check_invariants(e.ssg).empty()) << e.key();
    }
}

}  // namespace
