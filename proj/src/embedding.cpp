// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/embedding.hpp"

#include "ssgsim/io.hpp"

namespace ssgsim {

namespace {

constexpr int kModelVersion = 1;
constexpr const char* kModelFormat = "ssgsim-model";

void set_payload(NodeFeature& f, const std::array<std::uint8_t, 32>& bytes)
{
    // Bit j of the payload is bit (7 - j % 8) of byte j / 8: big-endian order.
    for (std::size_t j = 0; j < 256; ++j) {
        if ((bytes[j / 8] >> (7 - j % 8)) & 1U)
            f.active.push_back(static_cast<std::uint16_t>(kPayloadOffset + static_cast<Eigen::Index>(j)));
    }
}

}  // namespace

std::array<std::uint8_t, 32> crop_or_pad(std::span<const std::uint8_t> bytes)
{
    std::array<std::uint8_t, 32> out{};
    if (bytes.size() >= 32)
        std::copy_n(bytes.begin(), 32, out.begin());
    else
        std::copy(bytes.begin(), bytes.end(), out.end() - static_cast<std::ptrdiff_t>(bytes.size()));
    return out;
}

NodeFeature encode_attributes(const ControlNode& node)
{
    NodeFeature f;
    f.active.push_back(static_cast<std::uint16_t>(kNodeTypeOffset));
    f.active.push_back(static_cast<std::uint16_t>(kCategoryOffset + static_cast<Eigen::Index>(node.category)));
    f.active.push_back(static_cast<std::uint16_t>(kOpcodeOffset + node.opcode));
    return f;
}

NodeFeature encode_attributes(const DataNode& node)
{
    NodeFeature f;
    f.active.push_back(static_cast<std::uint16_t>(kNodeTypeOffset + 1));
    if (node.kind == DataKind::Information || node.kind == DataKind::Definition)
        f.active.push_back(static_cast<std::uint16_t>(kOpcodeOffset + node.attrs.opcode));
    f.active.push_back(static_cast<std::uint16_t>(kDataKindOffset + static_cast<Eigen::Index>(node.kind)));

    std::array<std::uint8_t, 32> payload{};
    switch (node.kind) {
    case DataKind::Constant:
    case DataKind::Calldata:
    case DataKind::ReturnData:
        if (node.attrs.value)
            payload = node.attrs.value->to_be_bytes();
        break;
    case DataKind::Information:
    case DataKind::Definition:
        break;
    case DataKind::StorageSink:
    case DataKind::LogSink:
    case DataKind::CallSink:
    case DataKind::ReturnSink:
        // role | index (u16) | low 29 bytes of the slot
        if (node.kind == DataKind::StorageSink && node.attrs.value)
            payload = node.attrs.value->to_be_bytes();
        payload[0] = static_cast<std::uint8_t>(node.attrs.role);
        payload[1] = static_cast<std::uint8_t>(node.attrs.index >> 8);
        payload[2] = static_cast<std::uint8_t>(node.attrs.index);
        break;
    }
    set_payload(f, payload);
    std::sort(f.active.begin(), f.active.end());
    return f;
}

GraphInput prepare(const Ssg& g)
{
    GraphInput in;
    const std::size_t n = g.node_count();
    in.features.reserve(n);
    for (const auto& c : g.control_nodes)
        in.features.push_back(encode_attributes(c));
    for (const auto& d : g.data_nodes)
        in.features.push_back(encode_attributes(d));
    for (auto& lists : in.in)
        lists.assign(n, {});
    for (const auto& e : g.edges) {
        if (e.from >= n || e.to >= n)
            throw Error(ErrorCode::InvalidSsg, "edge endpoint out of range");
        const std::size_t r = e.rel == Relation::CC ? kCC : e.rel == Relation::DD ? kDD : kCD;
        in.in[r][e.to].push_back(e.from);
    }
    return in;
}

// --- model files ------------------------------------------------------------

namespace {

nlohmann::json matrix_json(const MatrixX<double>& m)
{
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            data.push_back(m(r, c));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

MatrixX<double> matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* name)
{
    if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols)
        throw Error(ErrorCode::CorruptModel, std::string("matrix ") + name + " has the wrong shape");
    const auto& data = j.at("data");
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw Error(ErrorCode::CorruptModel, std::string("matrix ") + name + " has the wrong element count");
    MatrixX<double> m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = data[k++].get<double>();
    }
    if (!m.allFinite())
        throw Error(ErrorCode::CorruptModel, std::string("matrix ") + name + " has non-finite entries");
    return m;
}

constexpr std::array<const char*, kRelationCount> kRelNames = {"w_cc", "w_dd", "w_cd"};

}  // namespace

nlohmann::json model_to_json(const EmbeddingModel<double>& m)
{
    nlohmann::json mats;
    mats["w_in"] = matrix_json(m.w_in);
    for (std::size_t r = 0; r < kRelationCount; ++r)
        mats[kRelNames[r]] = matrix_json(m.w_rel[r]);
    mats["w_out"] = matrix_json(m.w_out);
    return {{"format", kModelFormat},
            {"version", kModelVersion},
            {"embed_size", m.dim()},
            {"feature_dim", kFeatureDim},
            {"depth", m.depth},
            {"seed", m.seed},
            {"matrices", std::move(mats)}};
}

EmbeddingModel<double> model_from_json(const nlohmann::json& j)
{
    try {
        if (j.at("format") != kModelFormat)
            throw Error(ErrorCode::CorruptModel, "not a model file");
        if (j.at("version").get<int>() != kModelVersion)
            throw Error(ErrorCode::CorruptModel,
                        "unsupported model version " + std::to_string(j.at("version").get<int>()));
        if (j.at("feature_dim").get<Eigen::Index>() != kFeatureDim)
            throw Error(ErrorCode::CorruptModel, "feature dimension mismatch");
        const auto p = j.at("embed_size").get<Eigen::Index>();
        if (p <= 0)
            throw Error(ErrorCode::CorruptModel, "embedding size must be positive");
        EmbeddingModel<double> m;
        m.depth = j.at("depth").get<int>();
        if (m.depth < 0)
            throw Error(ErrorCode::CorruptModel, "negative depth");
        m.seed = j.at("seed").get<std::uint64_t>();
        const auto& mats = j.at("matrices");
        m.w_in = matrix_from_json(mats.at("w_in"), p, kFeatureDim, "w_in");
        for (std::size_t r = 0; r < kRelationCount; ++r)
            m.w_rel[r] = matrix_from_json(mats.at(kRelNames[r]), p, p, kRelNames[r]);
        m.w_out = matrix_from_json(mats.at("w_out"), p, p, "w_out");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptModel, std::string("malformed model: ") + e.what());
    }
}

void save_model(const EmbeddingModel<double>& m, const std::string& path)
{
    write_file_atomic(path, model_to_json(m).dump() + "\n");
}

EmbeddingModel<double> load_model(const std::string& path)
{
    const std::string text = read_file(path);
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::CorruptModel, path + " is not valid JSON");
    return model_from_json(j);
}

}  // namespace ssgsim
