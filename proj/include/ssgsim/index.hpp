// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include "ssgsim/cfg.hpp"
#include "ssgsim/error.hpp"

#include <Eigen/Core>
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace ssgsim {

/// Origin ids are stored in fixed 120-byte fields.
inline constexpr std::size_t kMaxOriginBytes = 120;

struct IndexKey {
    std::string origin_id;
    FunctionId function;

    friend bool operator==(const IndexKey&, const IndexKey&) = default;
    friend bool operator<(const IndexKey& a, const IndexKey& b) noexcept
    {
        if (a.origin_id != b.origin_id)
            return a.origin_id < b.origin_id;
        return a.function < b.function;
    }
    /// "<origin>:<selector>"
    std::string to_string() const { return origin_id + ":" + function.to_string(); }
};

/// Throws Error{InvalidKey} for empty or over-long origins and embedded NULs.
void validate_key(const IndexKey& key);

struct SearchHit {
    IndexKey key;
    double score = 0;
};

/// Unit vectors keyed by (origin, function), stored as columns of a p x n
/// matrix. Const members may be called from many threads at once; mutation
/// needs exclusive access.
template <typename Scalar>
class BasicVectorIndex {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    explicit BasicVectorIndex(Eigen::Index dim = 0) : dim_(dim), vectors_(dim, 0)
    {
        if (dim < 0)
            throw Error(ErrorCode::DimensionMismatch, "negative dimension");
    }

    Eigen::Index dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return keys_.size(); }
    bool empty() const noexcept { return keys_.empty(); }
    const std::vector<IndexKey>& keys() const noexcept { return keys_; }
    const Matrix& vectors() const noexcept { return vectors_; }
    auto vector(std::size_t i) const { return vectors_.col(static_cast<Eigen::Index>(i)); }

    std::optional<std::size_t> find(const IndexKey& key) const
    {
        auto it = slot_.find(key);
        if (it == slot_.end())
            return std::nullopt;
        return it->second;
    }

    /// Stores v / |v|, replacing any vector already under key.
    template <typename Derived>
    void add(const IndexKey& key, const Eigen::MatrixBase<Derived>& v)
    {
        validate_key(key);
        if (v.size() != dim_)
            throw Error(ErrorCode::DimensionMismatch, "vector has dimension " + std::to_string(v.size()) +
                                                          ", index expects " + std::to_string(dim_));
        const Eigen::VectorXd d = v.template cast<double>();
        if (!d.allFinite())
            throw Error(ErrorCode::NonFiniteVector, "vector for " + key.to_string() + " has non-finite entries");
        const double norm = d.norm();
        if (norm == 0)
            throw Error(ErrorCode::NonFiniteVector, "vector for " + key.to_string() + " is zero");
        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> unit = (d / norm).template cast<Scalar>();
        insert_raw(key, unit);
    }

    /// Stores v as given. Used by loaders, which must preserve bits.
    template <typename Derived>
    void insert_raw(const IndexKey& key, const Eigen::MatrixBase<Derived>& v)
    {
        if (auto at = find(key)) {
            vectors_.col(static_cast<Eigen::Index>(*at)) = v;
            return;
        }
        const Eigen::Index n = vectors_.cols();
        vectors_.conservativeResize(dim_, n + 1);
        vectors_.col(n) = v;
        slot_.emplace(key, keys_.size());
        keys_.push_back(key);
    }

    friend bool operator==(const BasicVectorIndex& a, const BasicVectorIndex& b)
    {
        return a.dim_ == b.dim_ && a.keys_ == b.keys_ && a.vectors_ == b.vectors_;
    }

private:
    Eigen::Index dim_;
    Matrix vectors_;
    std::vector<IndexKey> keys_;
    std::map<IndexKey, std::size_t> slot_;
};

using VectorIndex = BasicVectorIndex<float>;

/// Cosine score of stored column i against a unit query: a sequential
/// double-precision dot product, so results do not depend on vectorization.
template <typename Scalar>
double score_at(const BasicVectorIndex<Scalar>& idx, std::size_t i, const Eigen::VectorXd& unit_query)
{
    const Scalar* col = idx.vectors().data() + static_cast<Eigen::Index>(i) * idx.dim();
    double s = 0;
    for (Eigen::Index j = 0; j < idx.dim(); ++j)
        s += static_cast<double>(col[j]) * unit_query[j];
    return s;
}

/// Top-k by descending cosine score over a full scan; ties go to the smaller
/// key. An empty index gives no hits, a zero query scores 0 everywhere.
template <typename Scalar, typename Derived>
std::vector<SearchHit> search(const BasicVectorIndex<Scalar>& idx, const Eigen::MatrixBase<Derived>& query,
                              std::size_t k)
{
    if (query.size() != idx.dim())
        throw Error(ErrorCode::DimensionMismatch, "query has dimension " + std::to_string(query.size()) +
                                                      ", index expects " + std::to_string(idx.dim()));
    Eigen::VectorXd q = query.template cast<double>();
    if (!q.allFinite())
        throw Error(ErrorCode::NonFiniteVector, "query has non-finite entries");
    if (const double n = q.norm(); n > 0)
        q /= n;

    const std::size_t n = idx.size();
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i)
        scores[i] = score_at(idx, i, q);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t top = std::min(k, n);
    const auto& keys = idx.keys();
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b])
                              return scores[a] > scores[b];
                          return keys[a] < keys[b];
                      });
    std::vector<SearchHit> hits;
    hits.reserve(top);
    for (std::size_t i = 0; i < top; ++i)
        hits.push_back({keys[order[i]], scores[order[i]]});
    return hits;
}

// --- files ------------------------------------------------------------------

inline constexpr std::uint16_t kIndexVersion = 1;

/// Little-endian: "ESIM", u16 version, u32 p, u64 count, then per entry a
/// NUL-padded 120-byte origin, a u64 selector (all ones for the fallback) and
/// p f32 values; a trailing CRC32 covers everything before it.
std::string serialize_index(const VectorIndex& idx);
/// Throws Error{CorruptIndex}.
VectorIndex deserialize_index(std::string_view bytes);

void save_index(const VectorIndex& idx, const std::string& path);
VectorIndex load_index(const std::string& path);

nlohmann::json index_to_json(const VectorIndex& idx);

}  // namespace ssgsim
