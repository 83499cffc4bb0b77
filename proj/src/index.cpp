// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/index.hpp"

#include "ssgsim/io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>

namespace ssgsim {

namespace {

constexpr char kMagic[4] = {'E', 'S', 'I', 'M'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 8;
constexpr std::uint64_t kFallbackSelector = ~std::uint64_t{0};

static_assert(std::endian::native == std::endian::little, "index files assume a little-endian host");

template <typename T>
void put(std::string& out, T v)
{
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t& pos)
{
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

std::uint32_t crc32_of(std::string_view bytes)
{
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1U << 30);
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), static_cast<uInt>(n));
        pos += n;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

void validate_key(const IndexKey& key)
{
    if (key.origin_id.empty())
        throw Error(ErrorCode::InvalidKey, "empty origin id");
    if (key.origin_id.size() > kMaxOriginBytes)
        throw Error(ErrorCode::InvalidKey, "origin id longer than 120 bytes: " + key.origin_id);
    if (key.origin_id.find('\0') != std::string::npos)
        throw Error(ErrorCode::InvalidKey, "origin id contains NUL");
}

std::string serialize_index(const VectorIndex& idx)
{
    const std::size_t p = static_cast<std::size_t>(idx.dim());
    std::string out;
    out.reserve(kHeaderBytes + idx.size() * (kMaxOriginBytes + 8 + 4 * p) + 4);
    out.append(kMagic, 4);
    put<std::uint16_t>(out, kIndexVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p));
    put<std::uint64_t>(out, idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const IndexKey& key = idx.keys()[i];
        std::string origin = key.origin_id;
        origin.resize(kMaxOriginBytes, '\0');
        out += origin;
        put<std::uint64_t>(out, key.function.selector ? *key.function.selector : kFallbackSelector);
        const float* col = idx.vectors().data() + static_cast<Eigen::Index>(i) * idx.dim();
        out.append(reinterpret_cast<const char*>(col), 4 * p);
    }
    put<std::uint32_t>(out, crc32_of(out));
    return out;
}

VectorIndex deserialize_index(std::string_view bytes)
{
    if (bytes.size() < kHeaderBytes + 4)
        throw Error(ErrorCode::CorruptIndex, "file too short for an index header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw Error(ErrorCode::CorruptIndex, "bad magic");
    std::size_t pos = 4;
    const auto version = get<std::uint16_t>(bytes, pos);
    if (version != kIndexVersion)
        throw Error(ErrorCode::CorruptIndex, "unsupported index version " + std::to_string(version) + " (expected " +
                                                 std::to_string(kIndexVersion) + ")");
    const auto p = get<std::uint32_t>(bytes, pos);
    const auto count = get<std::uint64_t>(bytes, pos);
    const std::uint64_t record = kMaxOriginBytes + 8 + 4ULL * p;
    if (record != 0 && count > (bytes.size() - kHeaderBytes - 4) / record)
        throw Error(ErrorCode::CorruptIndex, "entry count exceeds file size");
    if (bytes.size() != kHeaderBytes + count * record + 4)
        throw Error(ErrorCode::CorruptIndex, "file size does not match entry count");
    std::size_t crc_pos = bytes.size() - 4;
    const auto stored_crc = get<std::uint32_t>(bytes, crc_pos);
    if (stored_crc != crc32_of(bytes.substr(0, bytes.size() - 4)))
        throw Error(ErrorCode::CorruptIndex, "checksum mismatch");

    VectorIndex idx(static_cast<Eigen::Index>(p));
    Eigen::VectorXf v(p);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string_view field = bytes.substr(pos, kMaxOriginBytes);
        pos += kMaxOriginBytes;
        IndexKey key{std::string(field.substr(0, std::min(field.find('\0'), field.size()))), {}};
        const auto sel = get<std::uint64_t>(bytes, pos);
        if (sel == kFallbackSelector)
            key.function = FunctionId::fallback();
        else if (sel <= 0xffffffffULL)
            key.function = FunctionId::of(static_cast<std::uint32_t>(sel));
        else
            throw Error(ErrorCode::CorruptIndex, "selector out of range in entry " + std::to_string(i));
        std::memcpy(v.data(), bytes.data() + pos, 4ULL * p);
        pos += 4ULL * p;
        try {
            validate_key(key);
        } catch (const Error& e) {
            throw Error(ErrorCode::CorruptIndex, e.what());
        }
        if (idx.find(key))
            throw Error(ErrorCode::CorruptIndex, "duplicate key " + key.to_string());
        idx.insert_raw(key, v);
    }
    return idx;
}

void save_index(const VectorIndex& idx, const std::string& path)
{
    write_file_atomic(path, serialize_index(idx));
}

VectorIndex load_index(const std::string& path)
{
    return deserialize_index(read_file(path));
}

nlohmann::json index_to_json(const VectorIndex& idx)
{
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto col = idx.vector(i);
        std::vector<float> v(col.data(), col.data() + col.size());
        entries.push_back({{"origin", idx.keys()[i].origin_id},
                           {"function", idx.keys()[i].function.to_string()},
                           {"vector", std::move(v)}});
    }
    return {{"version", kIndexVersion}, {"dim", idx.dim()}, {"entries", std::move(entries)}};
}

}  // namespace ssgsim
