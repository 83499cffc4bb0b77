// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "oracles.hpp"
#include "ssgsim/error.hpp"
#include "ssgsim/index.hpp"
#include "ssgsim/io.hpp"
#include "ssgsim/random.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>

using namespace ssgsim;

namespace {

template <typename F>
void expect_error(ErrorCode code, F&& f, const std::string& detail = {})
{
    try {
        f();
        ADD_FAILURE() << "no error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
        if (!detail.empty()) {
            EXPECT_NE(std::string(e.what()).find(detail), std::string::npos) << e.what();
        }
    }
}

IndexKey key(std::size_t i, std::uint32_t sel = 0x01020304)
{
    return {"contract" + std::to_string(i), FunctionId::of(sel)};
}

Eigen::VectorXf random_vector(std::mt19937_64& rng, Eigen::Index p)
{
    std::normal_distribution<float> n(0, 1);
    Eigen::VectorXf v(p);
    for (Eigen::Index i = 0; i < p; ++i)
        v(i) = n(rng);
    return v;
}

VectorIndex random_index(std::size_t n, Eigen::Index p, std::uint64_t seed)
{
    auto rng = sub_generator(seed, "index");
    VectorIndex idx(p);
    for (std::size_t i = 0; i < n; ++i)
        idx.add(key(i, static_cast<std::uint32_t>(i % 3 == 0 ? 7 : i)), random_vector(rng, p));
    return idx;
}

/// Scores every entry with a plain loop, then sorts everything.
std::vector<std::pair<IndexKey, double>> oracle_search(const VectorIndex& idx, const Eigen::VectorXf& query, std::size_t k)
{
    Eigen::VectorXd q = query.cast<double>();
    q /= q.norm();
    std::vector<std::pair<IndexKey, double>> all;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        double s = 0;
        for (Eigen::Index j = 0; j < idx.dim(); ++j)
            s += static_cast<double>(idx.vector(i)(j)) * q(j);
        all.emplace_back(idx.keys()[i], s);
    }
    return oracle::brute_top_k(std::move(all), k);
}

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("ssgsim_test_" + name);
}

// --- keys ---

TEST(IndexKey, Validation)
{
    EXPECT_NO_THROW(validate_key({"0xabc", FunctionId::fallback()}));
    expect_error(ErrorCode::InvalidKey, [] { validate_key({"", FunctionId::fallback()}); });
    expect_error(ErrorCode::InvalidKey, [] { validate_key({std::string(121, 'a'), FunctionId::fallback()}); });
    expect_error(ErrorCode::InvalidKey, [] { validate_key({std::string("a\0b", 3), FunctionId::fallback()}); });
    EXPECT_NO_THROW(validate_key({std::string(kMaxOriginBytes, 'a'), FunctionId::of(1)}));
    EXPECT_EQ((IndexKey{"c", FunctionId::of(0x095ea7b3)}.to_string()), "c:0x095ea7b3");
}

// --- add ---

TEST(IndexAdd, StoresUnitVectors)
{
    VectorIndex idx(4);
    Eigen::Vector4f v(3, 0, 4, 0);
    idx.add(key(1), v);
    ASSERT_EQ(idx.size(), 1u);
    auto i = idx.find(key(1));
    ASSERT_TRUE(i);
    Eigen::Vector4f want(0.6f, 0, 0.8f, 0);
    EXPECT_LT((idx.vector(*i) - want).norm(), 1e-7f);
}

TEST(IndexAdd, ReAddReplaces)
{
    VectorIndex idx(2);
    idx.add(key(1), Eigen::Vector2f(1, 0));
    idx.add(key(2), Eigen::Vector2f(0, 1));
    idx.add(key(1), Eigen::Vector2f(0, -2));
    EXPECT_EQ(idx.size(), 2u);
    EXPECT_EQ(idx.vector(*idx.find(key(1))), Eigen::Vector2f(0, -1));
}

TEST(IndexAdd, Errors)
{
    VectorIndex idx(64);
    expect_error(ErrorCode::DimensionMismatch, [&] { idx.add(key(1), Eigen::VectorXf::Ones(32)); });
    Eigen::VectorXf bad = Eigen::VectorXf::Ones(64);
    bad(3) = std::numeric_limits<float>::quiet_NaN();
    expect_error(ErrorCode::NonFiniteVector, [&] { idx.add(key(1), bad); });
    expect_error(ErrorCode::NonFiniteVector, [&] { idx.add(key(1), Eigen::VectorXf::Zero(64)); });
    expect_error(ErrorCode::InvalidKey, [&] { idx.add({"", FunctionId::of(1)}, Eigen::VectorXf::Ones(64)); });
    EXPECT_TRUE(idx.empty());
}

// --- search ---

TEST(Search, Examples)
{
    VectorIndex idx(3);
    Eigen::Vector3f v(1, 2, 3);
    idx.add(key(0), v);
    auto hits = search(idx, v, 10);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].key, key(0));
    EXPECT_NEAR(hits[0].score, 1.0, 1e-7);

    idx.add(key(1), Eigen::Vector3f(1, 0, 0));
    idx.add(key(2), Eigen::Vector3f(0, 1, 0));
    EXPECT_EQ(search(idx, v, 10).size(), 3u);
    EXPECT_TRUE(search(idx, v, 0).empty());
    EXPECT_TRUE(search(VectorIndex(3), v, 5).empty());
    expect_error(ErrorCode::DimensionMismatch, [&] { search(idx, Eigen::Vector2f(1, 1), 1); });
}

TEST(Search, TiesBreakByKey)
{
    VectorIndex idx(2);
    idx.add(key(3), Eigen::Vector2f(1, 0));
    idx.add(key(1), Eigen::Vector2f(2, 0));
    idx.add(key(2), Eigen::Vector2f(0, 1));
    auto hits = search(idx, Eigen::Vector2f(1, 0), 3);
    ASSERT_EQ(hits.size(), 3u);
    EXPECT_EQ(hits[0].key, key(1));
    EXPECT_EQ(hits[1].key, key(3));
    EXPECT_EQ(hits[2].key, key(2));
}

TEST(Search, MatchesSortEverythingOracle)
{
    auto idx = random_index(10'000, 64, 1);
    auto rng = sub_generator(2, "queries");
    for (int q = 0; q < 5; ++q) {
        Eigen::VectorXf query = random_vector(rng, 64);
        for (std::size_t k : {1u, 25u, 10'000u, 20'000u}) {
            auto got = search(idx, query, k);
            auto want = oracle_search(idx, query, k);
            ASSERT_EQ(got.size(), want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                EXPECT_EQ(got[i].key, want[i].first) << i;
                EXPECT_EQ(got[i].score, want[i].second) << i;
            }
        }
    }
}

TEST(Search, LatencyGrowsWithSize)
{
    auto rng = sub_generator(3, "latency");
    Eigen::VectorXf query = random_vector(rng, 64);
    std::vector<double> seconds;
    for (std::size_t n : {1'000u, 10'000u, 100'000u}) {
        auto idx = random_index(n, 64, n);
        double best = 1e9;
        for (int rep = 0; rep < 3; ++rep) {
            auto t0 = std::chrono::steady_clock::now();
            auto hits = search(idx, query, 10);
            best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            ASSERT_EQ(hits.size(), 10u);
        }
        seconds.push_back(best);
    }
    EXPECT_LT(seconds[0], seconds[2]);
    EXPECT_LT(seconds[1], seconds[2]);
    EXPECT_LT(seconds[2], 5.0);
}

// --- persistence ---

TEST(IndexFile, RoundTripIsBitIdentical)
{
    auto idx = random_index(1'000, 64, 4);
    idx.add({"fallback-owner", FunctionId::fallback()}, Eigen::VectorXf::Ones(64));
    const auto path = temp_path("index.bin");
    save_index(idx, path.string());
    auto back = load_index(path.string());
    EXPECT_TRUE(back == idx);
    ASSERT_EQ(back.size(), idx.size());
    EXPECT_EQ(std::memcmp(back.vectors().data(), idx.vectors().data(), sizeof(float) * idx.vectors().size()), 0);
    std::filesystem::remove(path);
}

TEST(IndexFile, Layout)
{
    VectorIndex idx(2);
    idx.add(key(1), Eigen::Vector2f(1, 0));
    auto bytes = serialize_index(idx);
    // magic, u16 version, u32 dim, u64 count, 120 + 8 + 2 * 4 record bytes, u32 crc
    EXPECT_EQ(bytes.size(), 4u + 2 + 4 + 8 + 120 + 8 + 8 + 4);
    EXPECT_EQ(bytes.substr(0, 4), "ESIM");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), kIndexVersion);
    EXPECT_EQ(bytes[5], 0);
}

TEST(IndexFile, CorruptFilesAreRejected)
{
    auto good = serialize_index(random_index(10, 8, 5));
    expect_error(ErrorCode::CorruptIndex, [&] { deserialize_index(good.substr(0, good.size() - 7)); });
    expect_error(ErrorCode::CorruptIndex, [&] { deserialize_index(good.substr(0, 3)); });

    auto version = good;
    version[4] = 9;
    expect_error(ErrorCode::CorruptIndex, [&] { deserialize_index(version); }, "version 9");

    auto flipped = good;
    flipped[good.size() / 2] ^= 0x10;
    expect_error(ErrorCode::CorruptIndex, [&] { deserialize_index(flipped); }, "checksum");

    auto magic = good;
    magic[0] = 'X';
    expect_error(ErrorCode::CorruptIndex, [&] { deserialize_index(magic); });

    expect_error(ErrorCode::IoError, [&] { load_index(temp_path("does_not_exist.bin").string()); });
}

TEST(IndexFile, JsonExport)
{
    VectorIndex idx(2);
    idx.add({"a", FunctionId::fallback()}, Eigen::Vector2f(0, 3));
    auto j = index_to_json(idx);
    EXPECT_EQ(j.at("dim"), 2);
    ASSERT_EQ(j.at("entries").size(), 1u);
    EXPECT_EQ(j["entries"][0]["origin"], "a");
    EXPECT_EQ(j["entries"][0]["function"], "fallback");
    EXPECT_EQ(j["entries"][0]["vector"][1].get<double>(), 1.0);
}

}  // namespace
