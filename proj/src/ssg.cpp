// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/ssg.hpp"

#include "ssgsim/error.hpp"
#include "ssgsim/opcodes.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <functional>
#include <tuple>

namespace ssgsim {

namespace {

constexpr std::array<const char*, kDataKindCount> kDataKindNames = {
    "constant", "information", "calldata", "returndata", "definition", "log", "storage", "call", "return",
};

constexpr std::array<const char*, 10> kSinkRoleNames = {
    "none", "slot", "stored_value", "topic", "data", "address", "value", "selector", "arg", "word",
};

}  // namespace

bool is_source(DataKind k) noexcept
{
    return k <= DataKind::Definition;
}

bool is_path_insensitive(DataKind k) noexcept
{
    return k == DataKind::Constant || k == DataKind::Information || k == DataKind::Calldata;
}

std::string to_string(DataKind k)
{
    return kDataKindNames[static_cast<std::size_t>(k)];
}

std::optional<DataKind> data_kind_from_string(std::string_view s)
{
    for (std::size_t i = 0; i < kDataKindNames.size(); ++i) {
        if (s == kDataKindNames[i])
            return static_cast<DataKind>(i);
    }
    return std::nullopt;
}

std::string to_string(SinkRole r)
{
    return kSinkRoleNames[static_cast<std::size_t>(r)];
}

std::optional<SinkRole> sink_role_from_string(std::string_view s)
{
    for (std::size_t i = 0; i < kSinkRoleNames.size(); ++i) {
        if (s == kSinkRoleNames[i])
            return static_cast<SinkRole>(i);
    }
    return std::nullopt;
}

std::string to_string(Relation r)
{
    switch (r) {
    case Relation::CC: return "cc";
    case Relation::DD: return "dd";
    case Relation::CD: return "cd";
    }
    return "?";
}

// --- SCFG -------------------------------------------------------------------

std::vector<Instruction> get_stable_stmts(const BasicBlock& block)
{
    std::vector<Instruction> out;
    for (const auto& ins : block.instructions) {
        if (classify_stable(ins.opcode))
            out.push_back(ins);
    }
    return out;
}

namespace {

using PredLists = std::vector<std::vector<BlockRef>>;

PredLists reverse_adjacency(const FunctionCfg& cfg)
{
    PredLists preds(cfg.nodes.size());
    for (const auto& [from, to] : cfg.edges)
        preds[to].push_back(from);
    return preds;
}

std::optional<std::size_t> last_stable_offset(const BasicBlock& block)
{
    for (auto it = block.instructions.rbegin(); it != block.instructions.rend(); ++it) {
        if (classify_stable(it->opcode))
            return it->offset;
    }
    return std::nullopt;
}

void resolve_pre(BlockRef block, const FunctionCfg& cfg, const PredLists& preds, std::set<BlockRef>& visited,
                 std::set<Site>& out)
{
    for (BlockRef pb : preds[block]) {
        if (auto last = last_stable_offset(cfg.nodes[pb].block)) {
            out.insert(Site{pb, *last});
        } else if (!visited.contains(pb)) {
            visited.insert(pb);
            resolve_pre(pb, cfg, preds, visited, out);
        }
    }
}

}  // namespace

std::set<Site> resolve_pre_stable_stmts(BlockRef block, const FunctionCfg& cfg, std::set<BlockRef>& visited)
{
    if (block >= cfg.nodes.size())
        throw Error(ErrorCode::BlockNotInCfg, "block " + std::to_string(block) + " is not in the CFG");
    std::set<Site> out;
    resolve_pre(block, cfg, reverse_adjacency(cfg), visited, out);
    return out;
}

Ssg build_scfg(const FunctionCfg& cfg)
{
    Ssg g;
    g.selector = cfg.selector;
    g.unresolved_jumps = cfg.unresolved_jumps;
    g.cfg_budget_exceeded = cfg.budget_exceeded;

    for (BlockRef b = 0; b < cfg.nodes.size(); ++b) {
        for (const auto& ins : get_stable_stmts(cfg.nodes[b].block))
            g.control_nodes.push_back(ControlNode{0, *classify_stable(ins.opcode), ins.opcode, Site{b, ins.offset}});
    }
    std::sort(g.control_nodes.begin(), g.control_nodes.end(), [](const ControlNode& a, const ControlNode& b) {
        return std::tie(a.site.offset, a.site.block) < std::tie(b.site.offset, b.site.block);
    });
    std::map<Site, NodeId> id_of;
    for (std::size_t i = 0; i < g.control_nodes.size(); ++i) {
        g.control_nodes[i].id = static_cast<NodeId>(i);
        id_of[g.control_nodes[i].site] = static_cast<NodeId>(i);
    }

    const PredLists preds = reverse_adjacency(cfg);
    for (BlockRef b = 0; b < cfg.nodes.size(); ++b) {
        auto stmts = get_stable_stmts(cfg.nodes[b].block);
        if (stmts.empty())
            continue;
        std::set<BlockRef> visited;
        std::set<Site> prev;
        resolve_pre(b, cfg, preds, visited, prev);
        for (const auto& stmt : stmts) {
            NodeId to = id_of.at(Site{b, stmt.offset});
            for (const auto& p : prev)
                g.edges.push_back(Edge{id_of.at(p), to, Relation::CC});
            prev = {Site{b, stmt.offset}};
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

std::map<FunctionId, Ssg> construct_scfg(const Bytecode& code, ExtractDiagnostics* diag)
{
    Program program(code);
    DispatchInfo dispatch = analyze_dispatcher(program);
    if (diag)
        diag->no_dispatcher = !dispatch.has_dispatcher;
    std::map<FunctionId, Ssg> out;
    for (const auto& [fn, entry] : dispatch.functions) {
        try {
            out.emplace(fn, build_scfg(get_cfg(program, dispatch, fn)));
        } catch (const Error& e) {
            if (diag)
                diag->warnings.push_back(fn.to_string() + ": " + e.what());
        }
    }
    return out;
}

// --- sinks ------------------------------------------------------------------

namespace {

std::optional<std::uint64_t> small_const(const Value& v)
{
    if (v.constant && v.constant->fits_u64())
        return v.constant->low_u64();
    return std::nullopt;
}

DataNode sink_node(DataKind kind, SinkRole role, std::uint32_t index = 0, std::optional<Word> value = std::nullopt)
{
    DataNode n;
    n.kind = kind;
    n.attrs.role = role;
    n.attrs.index = index;
    n.attrs.value = value;
    return n;
}

Sink stack_sink(DataNode node, const Value& v, const Site& site)
{
    Sink s{std::move(node), {}, site};
    s.origin.stack = v;
    return s;
}

Sink memory_sink(DataNode node, std::optional<std::uint64_t> offset, std::optional<std::uint64_t> length,
                 const Site& site)
{
    Sink s{std::move(node), {}, site};
    s.origin.memory = true;
    s.origin.mem_offset = offset;
    s.origin.mem_length = length;
    return s;
}

/// Splits [offset, offset+length) into 32-byte word sinks, at most kMaxSinkWords.
void word_sinks(std::vector<Sink>& out, DataKind kind, SinkRole role, const Value& offset, const Value& length,
                const Site& site, std::uint64_t skip = 0, std::uint32_t first_index = 0)
{
    auto off = small_const(offset);
    auto len = small_const(length);
    if (len && off && *off > Memory::kMaxTrackedOffset)
        off.reset();
    if (!len) {
        out.push_back(memory_sink(sink_node(kind, role, first_index), off ? std::optional(*off + skip) : std::nullopt,
                                  std::nullopt, site));
        return;
    }
    if (*len <= skip)
        return;
    std::uint64_t n = *len - skip;
    std::uint64_t words = std::min<std::uint64_t>((n + 31) / 32, kMaxSinkWords);
    for (std::uint64_t j = 0; j < words; ++j) {
        std::optional<std::uint64_t> at;
        if (off)
            at = *off + skip + 32 * j;
        out.push_back(memory_sink(sink_node(kind, role, first_index + static_cast<std::uint32_t>(j)), at,
                                  std::min<std::uint64_t>(32, n - 32 * j), site));
    }
}

}  // namespace

std::vector<Sink> locate_sink_nodes(const ControlNode& node, const ValueFlow& flow)
{
    const SiteRecord* rec = flow.site_record(node.site);
    auto operand = [&](std::size_t i) { return rec && i < rec->operands.size() ? rec->operands[i] : Value{}; };
    const Site& site = node.site;
    std::vector<Sink> out;

    switch (node.opcode) {
    case OP_SSTORE: {
        auto slot = operand(0).constant;
        out.push_back(stack_sink(sink_node(DataKind::StorageSink, SinkRole::Slot, 0, slot), operand(0), site));
        out.push_back(stack_sink(sink_node(DataKind::StorageSink, SinkRole::StoredValue, 0, slot), operand(1), site));
        break;
    }
    case OP_SLOAD:
        out.push_back(
            stack_sink(sink_node(DataKind::StorageSink, SinkRole::Slot, 0, operand(0).constant), operand(0), site));
        break;
    case OP_LOG0:
    case OP_LOG1:
    case OP_LOG2:
    case OP_LOG3:
    case OP_LOG4: {
        unsigned k = node.opcode - OP_LOG0;
        for (unsigned i = 0; i < k; ++i)
            out.push_back(stack_sink(sink_node(DataKind::LogSink, SinkRole::Topic, i), operand(2 + i), site));
        word_sinks(out, DataKind::LogSink, SinkRole::Data, operand(0), operand(1), site);
        break;
    }
    case OP_CALL:
    case OP_STATICCALL:
    case OP_DELEGATECALL: {
        const bool has_value = node.opcode == OP_CALL;
        out.push_back(stack_sink(sink_node(DataKind::CallSink, SinkRole::Address), operand(1), site));
        if (has_value)
            out.push_back(stack_sink(sink_node(DataKind::CallSink, SinkRole::Value), operand(2), site));
        const Value args = operand(has_value ? 3 : 2);
        const Value args_len = operand(has_value ? 4 : 3);
        auto len = small_const(args_len);
        auto off = small_const(args);
        if (!len || *len > 0) {
            std::optional<std::uint64_t> sel_len = len ? std::optional(std::min<std::uint64_t>(*len, 4)) : 4;
            out.push_back(memory_sink(sink_node(DataKind::CallSink, SinkRole::Selector), off, sel_len, site));
        }
        if (len)
            word_sinks(out, DataKind::CallSink, SinkRole::Arg, args, args_len, site, 4);
        break;
    }
    case OP_BALANCE:
    case OP_SELFDESTRUCT: {
        DataKind kind = node.opcode == OP_BALANCE ? DataKind::CallSink : DataKind::ReturnSink;
        out.push_back(stack_sink(sink_node(kind, SinkRole::Address), operand(0), site));
        break;
    }
    case OP_RETURN:
    case OP_REVERT:
        word_sinks(out, DataKind::ReturnSink, SinkRole::ReturnWord, operand(0), operand(1), site);
        break;
    default:  // STOP, INVALID
        break;
    }
    return out;
}

// --- backward taint ---------------------------------------------------------

namespace {

bool is_information(std::uint8_t op)
{
    switch (op) {
    case OP_ADDRESS:
    case OP_ORIGIN:
    case OP_CALLER:
    case OP_CALLVALUE:
    case OP_CALLDATASIZE:
    case OP_CODESIZE:
    case OP_GASPRICE:
    case OP_COINBASE:
    case OP_TIMESTAMP:
    case OP_NUMBER:
    case OP_PREVRANDAO:
    case OP_GASLIMIT:
    case OP_CHAINID:
    case OP_BASEFEE:
    case OP_BLOBBASEFEE:
    case OP_SELFBALANCE:
        return true;
    default:
        return false;
    }
}

bool is_call(std::uint8_t op)
{
    return op == OP_CALL || op == OP_CALLCODE || op == OP_DELEGATECALL || op == OP_STATICCALL;
}

bool is_pure_op(std::uint8_t op)
{
    return (op >= OP_ADD && op <= OP_SIGNEXTEND) || (op >= OP_LT && op <= OP_SAR);
}

using SourceKey = std::tuple<DataKind, std::optional<Word>, std::uint8_t, std::optional<Site>>;

SourceKey key_of(const DataNode& n)
{
    return {n.kind, n.attrs.value, n.attrs.opcode, n.site};
}

class Tracer {
public:
    Tracer(const ValueFlow& flow, std::size_t budget, TaintResult& out) : flow_(flow), budget_(budget), out_(out) {}

    std::vector<std::size_t> value(const Value& v, bool nested)
    {
        if (v.constant)
            return {constant(*v.constant)};
        std::vector<std::size_t> found;
        for (DefId d : v.defs)
            merge(found, def(d, nested));
        return found;
    }

    std::vector<std::size_t> region(const MemoryRead& read, bool nested)
    {
        if (read.constant)
            return {constant(*read.constant)};
        std::vector<std::size_t> found;
        for (const auto& [w, first] : read.writers)
            merge(found, writer(w, first, nested));
        return found;
    }

private:
    std::size_t add(DataKind kind, std::optional<Word> value, std::uint8_t opcode, std::optional<Site> site)
    {
        DataNode n;
        n.kind = kind;
        n.attrs.value = value;
        n.attrs.opcode = opcode;
        if (!is_path_insensitive(kind))
            n.site = site;
        auto [it, inserted] = index_.try_emplace(key_of(n), out_.sources.size());
        if (inserted)
            out_.sources.push_back(std::move(n));
        return it->second;
    }

    std::size_t constant(const Word& w) { return add(DataKind::Constant, w, 0, std::nullopt); }

    static void merge(std::vector<std::size_t>& into, const std::vector<std::size_t>& from)
    {
        for (std::size_t i : from) {
            if (std::find(into.begin(), into.end(), i) == into.end())
                into.push_back(i);
        }
    }

    bool enter(DefId d, bool nested)
    {
        if (visited_.contains({d, nested}))
            return false;
        if (visited_.size() >= budget_) {
            out_.budget_exceeded = true;
            return false;
        }
        visited_.insert({d, nested});
        return true;
    }

    std::vector<std::size_t> def(DefId id, bool nested)
    {
        auto memo = memo_.find({id, nested});
        if (memo != memo_.end())
            return memo->second;
        if (!enter(id, nested))
            return {};
        const Def& d = flow_.def(id);
        std::vector<std::size_t> found = def_sources(d, nested);
        memo_[{id, nested}] = found;
        return found;
    }

    std::vector<std::size_t> def_sources(const Def& d, bool nested)
    {
        const std::uint8_t op = d.opcode;
        auto operand = [&](std::size_t i) { return i < d.operands.size() ? d.operands[i] : Value{}; };

        if (d.role == DefRole::MemoryWrite)
            return {};  // reached only through writer()
        if (op == OP_PUSH0 || is_push(op))
            return {constant(d.result.value_or(Word{}))};
        if (is_information(op))
            return {add(DataKind::Information, std::nullopt, op, std::nullopt)};
        if (op == OP_CALLDATALOAD)
            return {add(DataKind::Calldata, operand(0).constant, 0, std::nullopt)};
        if (is_call(op))
            return {add(DataKind::ReturnData, std::nullopt, 0, d.site)};
        if (op == OP_MLOAD) {
            if (!d.read || d.read->unknown) {
                std::vector<std::size_t> found = d.read ? region(*d.read, nested) : std::vector<std::size_t>{};
                merge(found, {add(DataKind::Definition, std::nullopt, op, d.site)});
                return found;
            }
            auto found = region(*d.read, nested);
            if (found.empty())
                found.push_back(add(DataKind::Definition, std::nullopt, op, d.site));
            return found;
        }
        if (op == OP_KECCAK256) {
            std::size_t k = add(DataKind::Definition, std::nullopt, op, d.site);
            if (!nested && d.read) {
                for (std::size_t s : region(*d.read, true)) {
                    if (s != k)
                        out_.chains.emplace_back(s, k);
                }
            }
            return {k};
        }
        if (is_pure_op(op)) {
            if (d.result)
                return {constant(*d.result)};
            std::vector<std::size_t> found;
            for (const auto& v : d.operands)
                merge(found, value(v, nested));
            if (found.empty())
                found.push_back(add(DataKind::Definition, std::nullopt, op, d.site));
            return found;
        }
        return {add(DataKind::Definition, std::nullopt, op, d.site)};
    }

    std::vector<std::size_t> writer(DefId id, std::uint64_t first, bool nested)
    {
        const Def& d = flow_.def(id);
        auto operand = [&](std::size_t i) { return i < d.operands.size() ? d.operands[i] : Value{}; };
        switch (d.opcode) {
        case OP_MSTORE:
        case OP_MSTORE8: {
            if (!enter(id, nested))
                return memo_writer(id, nested);
            auto found = value(operand(1), nested);
            memo_[{id, nested}] = found;
            return found;
        }
        case OP_CALLDATACOPY:
        case OP_RETURNDATACOPY: {
            std::optional<Word> offset;
            if (operand(0).constant && operand(1).constant)
                offset = *operand(1).constant + (Word{first} - *operand(0).constant);
            DataKind kind = d.opcode == OP_CALLDATACOPY ? DataKind::Calldata : DataKind::ReturnData;
            return {add(kind, offset, 0, d.site)};
        }
        case OP_CALL:
        case OP_CALLCODE:
        case OP_DELEGATECALL:
        case OP_STATICCALL: {
            const Value ret = operand(d.opcode == OP_CALL || d.opcode == OP_CALLCODE ? 5 : 4);
            std::optional<Word> offset;
            if (ret.constant)
                offset = Word{first} - *ret.constant;
            return {add(DataKind::ReturnData, offset, 0, d.site)};
        }
        default:
            return {add(DataKind::Definition, std::nullopt, d.opcode, d.site)};
        }
    }

    std::vector<std::size_t> memo_writer(DefId id, bool nested)
    {
        auto it = memo_.find({id, nested});
        return it == memo_.end() ? std::vector<std::size_t>{} : it->second;
    }

    const ValueFlow& flow_;
    std::size_t budget_;
    TaintResult& out_;
    std::set<std::pair<DefId, bool>> visited_;
    std::map<std::pair<DefId, bool>, std::vector<std::size_t>> memo_;
    std::map<SourceKey, std::size_t> index_;
};

}  // namespace

TaintResult backward_taint(const Sink& sink, const ValueFlow& flow, std::size_t budget)
{
    TaintResult out;
    Tracer tracer(flow, budget, out);
    if (sink.origin.stack) {
        out.direct = tracer.value(*sink.origin.stack, false);
    } else if (sink.origin.memory && sink.origin.mem_offset && sink.origin.mem_length) {
        if (const SiteRecord* rec = flow.site_record(sink.site))
            out.direct = tracer.region(rec->memory.read(*sink.origin.mem_offset, *sink.origin.mem_length), false);
    }
    std::sort(out.chains.begin(), out.chains.end());
    out.chains.erase(std::unique(out.chains.begin(), out.chains.end()), out.chains.end());
    return out;
}

Ssg integrate_sdfg(Ssg g, const FunctionCfg& /*cfg*/, const ValueFlow& flow)
{
    const NodeId c = static_cast<NodeId>(g.control_nodes.size());
    std::map<SourceKey, NodeId> sources;

    auto add_data = [&](DataNode n) {
        n.id = c + static_cast<NodeId>(g.data_nodes.size());
        g.data_nodes.push_back(std::move(n));
        return g.data_nodes.back().id;
    };

    for (const auto& ctrl : std::vector<ControlNode>(g.control_nodes)) {
        for (const auto& sink : locate_sink_nodes(ctrl, flow)) {
            NodeId sink_id = add_data(sink.node);
            g.edges.push_back(Edge{ctrl.id, sink_id, Relation::CD});

            TaintResult t = backward_taint(sink, flow);
            g.taint_budget_exceeded |= t.budget_exceeded;
            std::vector<NodeId> ids;
            ids.reserve(t.sources.size());
            for (const auto& s : t.sources) {
                auto it = sources.find(key_of(s));
                if (it == sources.end())
                    it = sources.emplace(key_of(s), add_data(s)).first;
                ids.push_back(it->second);
            }
            for (std::size_t i : t.direct)
                g.edges.push_back(Edge{ids[i], sink_id, Relation::DD});
            for (const auto& [from, to] : t.chains)
                g.edges.push_back(Edge{ids[from], ids[to], Relation::DD});
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

Ssg extract_ssg(const Program& program, const DispatchInfo& dispatch, const FunctionId& fn)
{
    FunctionCfg cfg = get_cfg(program, dispatch, fn);
    ValueFlow flow(cfg);
    return integrate_sdfg(build_scfg(cfg), cfg, flow);
}

std::map<FunctionId, Ssg> extract_ssgs(const Bytecode& code, ExtractDiagnostics* diag)
{
    Program program(code);
    DispatchInfo dispatch = analyze_dispatcher(program);
    if (diag)
        diag->no_dispatcher = !dispatch.has_dispatcher;
    std::map<FunctionId, Ssg> out;
    for (const auto& [fn, entry] : dispatch.functions) {
        try {
            Ssg g = extract_ssg(program, dispatch, fn);
            if (diag) {
                if (g.cfg_budget_exceeded)
                    diag->warnings.push_back(fn.to_string() + ": CFG visit budget exceeded");
                if (g.taint_budget_exceeded)
                    diag->warnings.push_back(fn.to_string() + ": taint budget exceeded");
            }
            out.emplace(fn, std::move(g));
        } catch (const Error& e) {
            if (diag)
                diag->warnings.push_back(fn.to_string() + ": " + e.what());
        }
    }
    return out;
}

// --- checks -----------------------------------------------------------------

std::vector<std::string> check_invariants(const Ssg& g)
{
    std::vector<std::string> bad;
    const std::size_t c = g.control_nodes.size();
    const std::size_t n = g.node_count();

    for (std::size_t i = 0; i < c; ++i) {
        const auto& node = g.control_nodes[i];
        if (node.id != i)
            bad.push_back("control node " + std::to_string(i) + " has id " + std::to_string(node.id));
        auto cat = classify_stable(node.opcode);
        if (!cat || *cat != node.category)
            bad.push_back("control node " + std::to_string(i) + " category does not match its opcode");
    }
    for (std::size_t i = 0; i < g.data_nodes.size(); ++i) {
        if (g.data_nodes[i].id != c + i)
            bad.push_back("data node " + std::to_string(c + i) + " has id " + std::to_string(g.data_nodes[i].id));
    }
    if (!std::is_sorted(g.edges.begin(), g.edges.end()) ||
        std::adjacent_find(g.edges.begin(), g.edges.end()) != g.edges.end())
        bad.push_back("edges are not sorted and unique");

    std::vector<int> cd_in(n, 0);
    std::vector<int> dd_out(n, 0);
    for (const auto& e : g.edges) {
        if (e.from >= n || e.to >= n) {
            bad.push_back("edge endpoint out of range");
            continue;
        }
        const bool fc = g.is_control(e.from);
        const bool tc = g.is_control(e.to);
        switch (e.rel) {
        case Relation::CC:
            if (!fc || !tc)
                bad.push_back("cc edge with a data endpoint");
            break;
        case Relation::CD:
            if (!fc || tc || is_source(g.data(e.to).kind))
                bad.push_back("cd edge not control -> sink");
            else
                ++cd_in[e.to];
            break;
        case Relation::DD:
            if (fc || tc || !is_source(g.data(e.from).kind))
                bad.push_back("dd edge not source -> data");
            else
                ++dd_out[e.from];
            break;
        }
    }
    for (const auto& d : g.data_nodes) {
        if (d.id >= n)
            continue;
        if (!is_source(d.kind) && cd_in[d.id] != 1)
            bad.push_back("sink " + std::to_string(d.id) + " has " + std::to_string(cd_in[d.id]) + " cd edges");
        if (is_source(d.kind) && dd_out[d.id] == 0)
            bad.push_back("source " + std::to_string(d.id) + " has no dd edge");
    }

    // Within a block clone the stable statements form a path in offset order.
    std::map<BlockRef, std::vector<const ControlNode*>> by_block;
    for (const auto& node : g.control_nodes)
        by_block[node.site.block].push_back(&node);
    auto has_edge = [&](NodeId a, NodeId b) {
        return std::binary_search(g.edges.begin(), g.edges.end(), Edge{a, b, Relation::CC});
    };
    for (auto& [block, nodes] : by_block) {
        std::sort(nodes.begin(), nodes.end(), [](auto* a, auto* b) { return a->site.offset < b->site.offset; });
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            if (!has_edge(nodes[i]->id, nodes[i + 1]->id))
                bad.push_back("missing in-block cc edge at offset " + std::to_string(nodes[i]->site.offset));
        }
    }
    for (const auto& e : g.edges) {
        if (e.rel != Relation::CC || e.from >= c || e.to >= c)
            continue;
        const auto& a = g.control_nodes[e.from];
        const auto& b = g.control_nodes[e.to];
        if (a.site.block != b.site.block || b.site.offset <= a.site.offset)
            continue;
        const auto& nodes = by_block[a.site.block];
        auto it = std::find(nodes.begin(), nodes.end(), &a);
        if (it + 1 == nodes.end() || *(it + 1) != &b)
            bad.push_back("in-block cc edge skips a statement at offset " + std::to_string(a.site.offset));
    }
    return bad;
}

// --- JSON -------------------------------------------------------------------

namespace {

std::string hex(std::uint64_t v)
{
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string opt_hex(const std::optional<Word>& w)
{
    return w ? w->to_hex() : "unknown";
}

std::string site_text(const Site& s)
{
    return (s.block == kPrefixBlock ? std::string("prefix") : std::to_string(s.block)) + ":" + hex(s.offset);
}

[[noreturn]] void invalid(const std::string& what)
{
    throw Error(ErrorCode::InvalidSsg, what);
}

std::uint64_t parse_hex_u64(const std::string& s)
{
    auto w = Word::from_hex(s);
    if (!w || !w->fits_u64())
        invalid("bad hex number '" + s + "'");
    return w->low_u64();
}

std::optional<Word> parse_opt_hex(const std::string& s)
{
    if (s == "unknown")
        return std::nullopt;
    auto w = Word::from_hex(s);
    if (!w)
        invalid("bad hex value '" + s + "'");
    return w;
}

Site parse_site(const std::string& s)
{
    auto colon = s.find(':');
    if (colon == std::string::npos)
        invalid("bad site '" + s + "'");
    Site site;
    std::string block = s.substr(0, colon);
    try {
        site.block = block == "prefix" ? kPrefixBlock : static_cast<BlockRef>(std::stoull(block));
    } catch (const std::exception&) {
        invalid("bad site '" + s + "'");
    }
    site.offset = static_cast<std::size_t>(parse_hex_u64(s.substr(colon + 1)));
    return site;
}

nlohmann::json data_attrs_json(const DataNode& d)
{
    nlohmann::json a = nlohmann::json::object();
    switch (d.kind) {
    case DataKind::Constant: a["value"] = opt_hex(d.attrs.value); break;
    case DataKind::Information:
    case DataKind::Definition: a["opcode"] = hex(d.attrs.opcode); break;
    case DataKind::Calldata:
    case DataKind::ReturnData: a["offset"] = opt_hex(d.attrs.value); break;
    case DataKind::StorageSink:
        a["slot"] = opt_hex(d.attrs.value);
        a["role"] = to_string(d.attrs.role);
        break;
    case DataKind::LogSink:
    case DataKind::CallSink:
    case DataKind::ReturnSink:
        a["role"] = to_string(d.attrs.role);
        a["index"] = hex(d.attrs.index);
        break;
    }
    if (d.site)
        a["site"] = site_text(*d.site);
    return a;
}

}  // namespace

nlohmann::json to_json(const Ssg& g)
{
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& c : g.control_nodes) {
        nodes.push_back({{"id", c.id},
                         {"kind", "control"},
                         {"category", to_string(c.category)},
                         {"opcode", c.opcode},
                         {"attrs", {{"site", site_text(c.site)}}}});
    }
    for (const auto& d : g.data_nodes) {
        nodes.push_back({{"id", d.id},
                         {"kind", "data"},
                         {"category", is_source(d.kind) ? "source" : "sink"},
                         {"data_kind", to_string(d.kind)},
                         {"attrs", data_attrs_json(d)}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges)
        edges.push_back({{"from", e.from}, {"to", e.to}, {"rel", to_string(e.rel)}});
    return {{"selector", g.selector.to_string()}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

Ssg ssg_from_json(const nlohmann::json& j)
{
    try {
        Ssg g;
        auto sel = FunctionId::parse(j.at("selector").get<std::string>());
        if (!sel)
            invalid("bad selector");
        g.selector = *sel;
        for (const auto& n : j.at("nodes")) {
            const auto id = n.at("id").get<NodeId>();
            const auto& attrs = n.at("attrs");
            if (id != g.node_count())
                invalid("node ids must be dense and ordered");
            if (n.at("kind") == "control") {
                if (!g.data_nodes.empty())
                    invalid("control nodes must precede data nodes");
                ControlNode c;
                c.id = id;
                c.opcode = n.at("opcode").get<std::uint8_t>();
                auto cat = stable_category_from_string(n.at("category").get<std::string>());
                if (!cat)
                    invalid("bad category");
                c.category = *cat;
                c.site = parse_site(attrs.at("site").get<std::string>());
                g.control_nodes.push_back(c);
                continue;
            }
            if (n.at("kind") != "data")
                invalid("bad node kind");
            DataNode d;
            d.id = id;
            auto kind = data_kind_from_string(n.at("data_kind").get<std::string>());
            if (!kind)
                invalid("bad data kind");
            d.kind = *kind;
            if (attrs.contains("site"))
                d.site = parse_site(attrs.at("site").get<std::string>());
            switch (d.kind) {
            case DataKind::Constant: d.attrs.value = parse_opt_hex(attrs.at("value").get<std::string>()); break;
            case DataKind::Information:
            case DataKind::Definition:
                d.attrs.opcode = static_cast<std::uint8_t>(parse_hex_u64(attrs.at("opcode").get<std::string>()));
                break;
            case DataKind::Calldata:
            case DataKind::ReturnData: d.attrs.value = parse_opt_hex(attrs.at("offset").get<std::string>()); break;
            case DataKind::StorageSink:
            case DataKind::LogSink:
            case DataKind::CallSink:
            case DataKind::ReturnSink: {
                auto role = sink_role_from_string(attrs.at("role").get<std::string>());
                if (!role)
                    invalid("bad sink role");
                d.attrs.role = *role;
                if (d.kind == DataKind::StorageSink)
                    d.attrs.value = parse_opt_hex(attrs.at("slot").get<std::string>());
                else
                    d.attrs.index = static_cast<std::uint32_t>(parse_hex_u64(attrs.at("index").get<std::string>()));
                break;
            }
            }
            g.data_nodes.push_back(d);
        }
        const std::size_t n = g.node_count();
        for (const auto& e : j.at("edges")) {
            Edge edge{e.at("from").get<NodeId>(), e.at("to").get<NodeId>(), Relation::CC};
            const auto rel = e.at("rel").get<std::string>();
            if (rel == "dd")
                edge.rel = Relation::DD;
            else if (rel == "cd")
                edge.rel = Relation::CD;
            else if (rel != "cc")
                invalid("bad relation '" + rel + "'");
            if (edge.from >= n || edge.to >= n)
                invalid("edge endpoint out of range");
            g.edges.push_back(edge);
        }
        std::sort(g.edges.begin(), g.edges.end());
        g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
        return g;
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("malformed SSG JSON: ") + e.what());
    }
}

std::string to_canonical_json(const Ssg& g)
{
    return to_json(g).dump(2) + "\n";
}

void write_dot(std::ostream& out, const Ssg& g)
{
    out << "digraph \"" << g.selector.to_string() << "\" {\n";
    for (const auto& c : g.control_nodes) {
        out << "  n" << c.id << " [shape=box, label=\"" << hex(c.site.offset) << " " << opcode_name(c.opcode)
            << "\"];\n";
    }
    for (const auto& d : g.data_nodes) {
        std::string label = to_string(d.kind);
        const auto attrs = data_attrs_json(d);
        for (auto it = attrs.begin(); it != attrs.end(); ++it) {
            if (it.key() != "site")
                label += "\\n" + it.key() + "=" + it.value().get<std::string>();
        }
        out << "  n" << d.id << " [shape=ellipse, label=\"" << label << "\"];\n";
    }
    for (const auto& e : g.edges)
        out << "  n" << e.from << " -> n" << e.to << " [label=\"" << to_string(e.rel) << "\"];\n";
    out << "}\n";
}

}  // namespace ssgsim
