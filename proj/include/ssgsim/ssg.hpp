// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include "ssgsim/bytecode.hpp"
#include "ssgsim/cfg.hpp"
#include "ssgsim/dataflow.hpp"
#include "ssgsim/word.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace ssgsim {

using NodeId = std::uint32_t;

struct ControlNode {
    NodeId id = 0;
    StableCategory category = StableCategory::Return;
    std::uint8_t opcode = 0;
    Site site;
};

/// Source kinds first, then sink kinds; the order is the one-hot order used
/// by the attribute encoder.
enum class DataKind : std::uint8_t {
    Constant,
    Information,
    Calldata,
    ReturnData,
    Definition,
    LogSink,
    StorageSink,
    CallSink,
    ReturnSink,
};
inline constexpr std::size_t kDataKindCount = 9;

bool is_source(DataKind k) noexcept;
/// Constant, Information and Calldata.
bool is_path_insensitive(DataKind k) noexcept;
std::string to_string(DataKind k);
std::optional<DataKind> data_kind_from_string(std::string_view s);

enum class SinkRole : std::uint8_t {
    None,
    Slot,
    StoredValue,
    Topic,
    Data,
    Address,
    Value,
    Selector,
    Arg,
    ReturnWord,
};
std::string to_string(SinkRole r);
std::optional<SinkRole> sink_role_from_string(std::string_view s);

/// Data node attributes. Which fields are meaningful depends on the kind:
///   Constant: value; Information, Definition: opcode;
///   Calldata, ReturnData: value = offset (nullopt = unknown);
///   StorageSink: value = slot, role in {Slot, StoredValue};
///   LogSink: role in {Topic, Data}, index = topic or word index;
///   CallSink: role in {Address, Value, Selector, Arg}, index = arg index;
///   ReturnSink: role = ReturnWord, index = word index.
struct DataAttrs {
    std::optional<Word> value;
    std::uint8_t opcode = 0;
    SinkRole role = SinkRole::None;
    std::uint32_t index = 0;

    friend bool operator==(const DataAttrs&, const DataAttrs&) = default;
};

struct DataNode {
    NodeId id = 0;
    DataKind kind = DataKind::Constant;
    DataAttrs attrs;
    /// Defining site of path-sensitive sources (ReturnData, Definition).
    std::optional<Site> site;
};

enum class Relation : std::uint8_t { CC, DD, CD };
std::string to_string(Relation r);

struct Edge {
    NodeId from = 0;
    NodeId to = 0;
    Relation rel = Relation::CC;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Ssg {
    FunctionId selector;
    std::vector<ControlNode> control_nodes;  // ids 0..C-1
    std::vector<DataNode> data_nodes;  // ids C..C+D-1
    std::vector<Edge> edges;  // sorted, unique

    // diagnostics, not part of the graph
    std::size_t unresolved_jumps = 0;
    bool cfg_budget_exceeded = false;
    bool taint_budget_exceeded = false;

    std::size_t node_count() const noexcept { return control_nodes.size() + data_nodes.size(); }
    bool degenerate() const noexcept { return node_count() < 2; }
    bool is_control(NodeId id) const noexcept { return id < control_nodes.size(); }
    const DataNode& data(NodeId id) const { return data_nodes.at(id - control_nodes.size()); }
};

// --- SCFG -------------------------------------------------------------------

/// Stable instructions of a block in offset order.
std::vector<Instruction> get_stable_stmts(const BasicBlock& block);

/// Last stable statement of each nearest predecessor holding one, walking
/// backwards through blocks without stable statements. visited is shared
/// across the recursion.
std::set<Site> resolve_pre_stable_stmts(BlockRef block, const FunctionCfg& cfg, std::set<BlockRef>& visited);

/// Control part of the SSG of one function.
Ssg build_scfg(const FunctionCfg& cfg);

struct ExtractDiagnostics {
    bool no_dispatcher = false;
    std::vector<std::string> warnings;
};

/// SCFG of every function in the contract. Functions whose CFG fails are
/// skipped with a warning.
std::map<FunctionId, Ssg> construct_scfg(const Bytecode& code, ExtractDiagnostics* diag = nullptr);

// --- SDFG -------------------------------------------------------------------

inline constexpr std::size_t kTaintBudget = 512;
inline constexpr std::size_t kMaxSinkWords = 8;

/// Where a sink's data comes from: a stack operand or a memory region.
struct SinkOrigin {
    std::optional<Value> stack;
    std::optional<std::uint64_t> mem_offset;  // nullopt with mem_length set = unknown region
    std::optional<std::uint64_t> mem_length;
    bool memory = false;
};

struct Sink {
    DataNode node;  // id unset
    SinkOrigin origin;
    Site site;  // the control node's site
};

/// Sinks of a stable instruction given the operands it saw.
std::vector<Sink> locate_sink_nodes(const ControlNode& node, const ValueFlow& flow);

struct TaintResult {
    std::vector<DataNode> sources;  // ids unset
    std::vector<std::size_t> direct;  // indices of sources flowing into the sink
    std::vector<std::pair<std::size_t, std::size_t>> chains;  // source -> source (hash inputs)
    bool budget_exceeded = false;
};

TaintResult backward_taint(const Sink& sink, const ValueFlow& flow, std::size_t budget = kTaintBudget);

/// Adds sinks, sources, CD and DD edges to an SCFG.
Ssg integrate_sdfg(Ssg scfg, const FunctionCfg& cfg, const ValueFlow& flow);

/// Full SSG of one function.
Ssg extract_ssg(const Program& program, const DispatchInfo& dispatch, const FunctionId& fn);

/// Full SSGs of every function. A contract without dispatcher is analyzed
/// as a single fallback function.
std::map<FunctionId, Ssg> extract_ssgs(const Bytecode& code, ExtractDiagnostics* diag = nullptr);

// --- checks and IO ----------------------------------------------------------

/// Violated structural invariants, empty when the graph is well formed.
std::vector<std::string> check_invariants(const Ssg& g);

nlohmann::json to_json(const Ssg& g);
/// Throws Error{InvalidSsg}.
Ssg ssg_from_json(const nlohmann::json& j);
/// Canonical text form (sorted keys, two-space indent, trailing newline).
std::string to_canonical_json(const Ssg& g);

void write_dot(std::ostream& out, const Ssg& g);

}  // namespace ssgsim
