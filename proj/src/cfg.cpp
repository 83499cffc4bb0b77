// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/cfg.hpp"

#include "ssgsim/error.hpp"
#include "ssgsim/opcodes.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <set>
#include <tuple>

namespace ssgsim {

// --- basic blocks ----------------------------------------------------------

std::vector<BasicBlock> find_basic_blocks(std::span<const Instruction> instructions)
{
    std::vector<BasicBlock> blocks;
    bool start_new = true;
    for (const auto& ins : instructions) {
        if (start_new || ins.opcode == OP_JUMPDEST)
            blocks.push_back(BasicBlock{ins.offset, {}, TerminatorKind::FallThrough});
        blocks.back().instructions.push_back(ins);
        start_new = false;
        if (is_block_terminator(ins.opcode)) {
            auto& b = blocks.back();
            if (ins.opcode == OP_JUMP)
                b.terminator_kind = TerminatorKind::Jump;
            else if (ins.opcode == OP_JUMPI)
                b.terminator_kind = TerminatorKind::JumpI;
            else
                b.terminator_kind = TerminatorKind::Terminal;
            start_new = true;
        }
    }
    return blocks;
}

// --- FunctionId ------------------------------------------------------------

std::string FunctionId::to_string() const
{
    if (!selector)
        return "fallback";
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", *selector);
    return buf;
}

std::optional<FunctionId> FunctionId::parse(std::string_view text)
{
    if (text == "fallback")
        return FunctionId::fallback();
    auto w = Word::from_hex(text);
    if (!w || !w->fits_u64() || w->low_u64() > 0xffffffffULL)
        return std::nullopt;
    return FunctionId::of(static_cast<std::uint32_t>(w->low_u64()));
}

// --- Program ---------------------------------------------------------------

Program::Program(const Bytecode& code)
    : code_(strip_metadata(code)), instructions_(disassemble(code_)), blocks_(find_basic_blocks(instructions_))
{
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        block_index_.emplace(blocks_[i].start_offset, i);
}

std::optional<std::size_t> Program::block_at(std::size_t offset) const
{
    auto it = block_index_.find(offset);
    if (it == block_index_.end())
        return std::nullopt;
    return it->second;
}

bool Program::is_jumpdest(std::size_t offset) const
{
    auto b = block_at(offset);
    return b && blocks_[*b].instructions.front().opcode == OP_JUMPDEST;
}

bool Program::is_jumpdest(const Word& target) const
{
    return target.fits_u64() && is_jumpdest(static_cast<std::size_t>(target.low_u64()));
}

namespace {

// --- abstract stack shared by the dispatcher and CFG interpreters ----------

template <class V>
class Stack {
public:
    static constexpr std::size_t kMaxDepth = 1024;

    Stack() = default;
    explicit Stack(std::vector<V> items) : items_(std::move(items)) {}

    V pop()
    {
        if (items_.empty())
            return V{};
        V v = std::move(items_.back());
        items_.pop_back();
        return v;
    }

    void push(V v)
    {
        if (items_.size() == kMaxDepth)
            items_.erase(items_.begin());
        items_.push_back(std::move(v));
    }

    const V& peek(std::size_t n) const
    {
        static const V unknown{};
        return n < items_.size() ? items_[items_.size() - 1 - n] : unknown;
    }

    void dup(std::size_t n) { push(peek(n - 1)); }

    void swap(std::size_t n)
    {
        while (items_.size() < n + 1)
            items_.insert(items_.begin(), V{});
        std::swap(items_.back(), items_[items_.size() - 1 - n]);
    }

    const std::vector<V>& items() const noexcept { return items_; }

    std::vector<V> top(std::size_t n) const
    {
        auto k = std::min(n, items_.size());
        return {items_.end() - static_cast<std::ptrdiff_t>(k), items_.end()};
    }

private:
    std::vector<V> items_;  // bottom first
};

// --- dispatcher recognition -------------------------------------------------

struct DVal {
    enum Kind : std::uint8_t { Unknown, Const, CalldataWord0, CalldataSize, Selector, SelectorEq, SelectorOrder, SizeLt4, SizeGe4 };
    Kind kind = Unknown;
    Word value{};

    static DVal constant(const Word& w) { return {Const, w}; }
    friend auto operator<=>(const DVal&, const DVal&) = default;
};

const Word kSelectorShift{224};
const Word kSelectorDivisor = Word{1} << 224;
const Word kSelectorMask{0xffffffffULL};

bool is_const(const DVal& v, const Word& w) { return v.kind == DVal::Const && v.value == w; }

// Returns the JUMPI/JUMP operands popped at the end of the block.
struct BlockExit {
    DVal target;
    DVal cond;
    bool compared_selector = false;
};

BlockExit run_dispatcher_block(const BasicBlock& block, Stack<DVal>& st)
{
    BlockExit exit;
    for (const auto& ins : block.instructions) {
        std::uint8_t op = ins.opcode;
        if (auto v = ins.push_value()) {
            st.push(DVal::constant(*v));
        } else if (is_dup(op)) {
            st.dup(op - OP_DUP1 + 1u);
        } else if (is_swap(op)) {
            st.swap(op - OP_SWAP1 + 1u);
        } else if (op == OP_POP) {
            st.pop();
        } else if (op == OP_CALLDATALOAD) {
            auto off = st.pop();
            st.push(is_const(off, Word{}) ? DVal{DVal::CalldataWord0, {}} : DVal{});
        } else if (op == OP_CALLDATASIZE) {
            st.push({DVal::CalldataSize, {}});
        } else if (op == OP_SHR) {
            auto shift = st.pop();
            auto value = st.pop();
            if (is_const(shift, kSelectorShift) && value.kind == DVal::CalldataWord0)
                st.push({DVal::Selector, {}});
            else if (shift.kind == DVal::Const && value.kind == DVal::Const)
                st.push(DVal::constant(shift.value.fits_u64() && shift.value.low_u64() < 256
                                           ? value.value >> static_cast<unsigned>(shift.value.low_u64())
                                           : Word{}));
            else
                st.push({});
        } else if (op == OP_DIV) {
            auto num = st.pop();
            auto den = st.pop();
            st.push(num.kind == DVal::CalldataWord0 && is_const(den, kSelectorDivisor) ? DVal{DVal::Selector, {}}
                                                                                        : DVal{});
        } else if (op == OP_AND) {
            auto a = st.pop();
            auto b = st.pop();
            if ((a.kind == DVal::Selector && is_const(b, kSelectorMask)) ||
                (b.kind == DVal::Selector && is_const(a, kSelectorMask)))
                st.push({DVal::Selector, {}});
            else if (a.kind == DVal::Const && b.kind == DVal::Const)
                st.push(DVal::constant(a.value & b.value));
            else
                st.push({});
        } else if (op == OP_EQ) {
            auto a = st.pop();
            auto b = st.pop();
            if (a.kind == DVal::Selector && b.kind == DVal::Const)
                st.push({DVal::SelectorEq, b.value});
            else if (b.kind == DVal::Selector && a.kind == DVal::Const)
                st.push({DVal::SelectorEq, a.value});
            else
                st.push({});
        } else if (op == OP_LT || op == OP_GT || op == OP_SLT || op == OP_SGT) {
            auto a = st.pop();
            auto b = st.pop();
            bool lt = op == OP_LT || op == OP_SLT;
            if ((a.kind == DVal::Selector && b.kind == DVal::Const) || (b.kind == DVal::Selector && a.kind == DVal::Const))
                st.push({DVal::SelectorOrder, {}});
            else if ((lt && a.kind == DVal::CalldataSize && is_const(b, Word{4})) ||
                     (!lt && b.kind == DVal::CalldataSize && is_const(a, Word{4})))
                st.push({DVal::SizeLt4, {}});
            else
                st.push({});
        } else if (op == OP_ISZERO) {
            auto a = st.pop();
            if (a.kind == DVal::SizeLt4)
                st.push({DVal::SizeGe4, {}});
            else if (a.kind == DVal::SizeGe4)
                st.push({DVal::SizeLt4, {}});
            else
                st.push({});
        } else if (op == OP_JUMP) {
            exit.target = st.pop();
        } else if (op == OP_JUMPI) {
            exit.target = st.pop();
            exit.cond = st.pop();
            exit.compared_selector = exit.cond.kind == DVal::SelectorEq || exit.cond.kind == DVal::SelectorOrder;
        } else {
            const auto& info = opcode_info(op);
            for (unsigned i = 0; i < info.pops; ++i)
                st.pop();
            for (unsigned i = 0; i < info.pushes; ++i)
                st.push({});
        }
    }
    return exit;
}

std::vector<AbstractStackValue> to_abstract(const std::vector<DVal>& items)
{
    std::vector<AbstractStackValue> out;
    out.reserve(items.size());
    for (const auto& v : items)
        out.push_back(v.kind == DVal::Const ? AbstractStackValue{v.value} : std::nullopt);
    return out;
}

bool has_selector(const std::vector<DVal>& items)
{
    return std::any_of(items.begin(), items.end(), [](const DVal& v) { return v.kind == DVal::Selector; });
}

// [JUMPDEST] PUSHn t JUMP
std::optional<std::size_t> trampoline_target(const Program& program, const BasicBlock& block)
{
    const auto& ins = block.instructions;
    std::size_t i = (!ins.empty() && ins[0].opcode == OP_JUMPDEST) ? 1 : 0;
    if (ins.size() != i + 2 || !is_push(ins[i].opcode) || ins[i + 1].opcode != OP_JUMP)
        return std::nullopt;
    auto t = *ins[i].push_value();
    if (!program.is_jumpdest(t))
        return std::nullopt;
    return static_cast<std::size_t>(t.low_u64());
}

}  // namespace

DispatchInfo analyze_dispatcher(const Program& program)
{
    DispatchInfo info;
    const auto& blocks = program.blocks();
    if (blocks.empty()) {
        info.functions.emplace(FunctionId::fallback(), FunctionEntry{});
        return info;
    }

    struct State {
        std::size_t block;
        std::vector<DVal> stack;
        std::vector<std::size_t> path;  // blocks executed before `block`
    };

    constexpr std::size_t kBudget = 4096;
    std::deque<State> work;
    std::set<std::pair<std::size_t, std::vector<DVal>>> seen;
    std::optional<FunctionEntry> size_check_fallback;
    std::optional<FunctionEntry> chain_end_fallback;

    auto enqueue = [&](std::size_t offset, const Stack<DVal>& st, std::vector<std::size_t> path) {
        auto b = program.block_at(offset);
        if (!b)
            return;
        if (seen.emplace(*b, st.top(kStateStackDepth)).second)
            work.push_back({*b, st.items(), std::move(path)});
    };
    enqueue(0, Stack<DVal>{}, {});

    std::size_t visits = 0;
    while (!work.empty() && visits++ < kBudget) {
        State s = std::move(work.front());
        work.pop_front();
        const auto& block = blocks[s.block];
        bool selector_known = has_selector(s.stack);

        Stack<DVal> st{s.stack};
        auto exit = run_dispatcher_block(block, st);
        auto path = s.path;
        path.push_back(s.block);

        // Past the selector extraction, the first block that does not compare
        // the selector is where unmatched calls go.
        if (selector_known && !exit.compared_selector) {
            if (!chain_end_fallback) {
                FunctionEntry fe{block.start_offset, s.path, to_abstract(s.stack)};
                if (auto t = trampoline_target(program, block))
                    fe = FunctionEntry{*t, path, to_abstract(st.items())};
                chain_end_fallback = std::move(fe);
            }
            continue;
        }

        auto target_offset = [&]() -> std::optional<std::size_t> {
            if (exit.target.kind == DVal::Const && program.is_jumpdest(exit.target.value))
                return static_cast<std::size_t>(exit.target.value.low_u64());
            return std::nullopt;
        }();

        switch (block.terminator_kind) {
        case TerminatorKind::Terminal:
            break;
        case TerminatorKind::FallThrough:
            enqueue(block.end_offset(), st, path);
            break;
        case TerminatorKind::Jump:
            if (target_offset)
                enqueue(*target_offset, st, path);
            break;
        case TerminatorKind::JumpI:
            if (exit.cond.kind == DVal::SelectorEq) {
                info.has_dispatcher = true;
                if (target_offset && exit.cond.value.fits_u64() && exit.cond.value.low_u64() <= 0xffffffffULL) {
                    auto id = FunctionId::of(static_cast<std::uint32_t>(exit.cond.value.low_u64()));
                    info.functions.try_emplace(id, FunctionEntry{*target_offset, path, to_abstract(st.items())});
                }
                enqueue(block.end_offset(), st, path);
            } else if (exit.cond.kind == DVal::SizeLt4) {
                if (target_offset && !size_check_fallback)
                    size_check_fallback = FunctionEntry{*target_offset, path, to_abstract(st.items())};
                enqueue(block.end_offset(), st, path);
            } else if (exit.cond.kind == DVal::SizeGe4) {
                if (!size_check_fallback)
                    size_check_fallback = FunctionEntry{block.end_offset(), path, to_abstract(st.items())};
                if (target_offset)
                    enqueue(*target_offset, st, path);
            } else {
                if (target_offset)
                    enqueue(*target_offset, st, path);
                enqueue(block.end_offset(), st, path);
            }
            break;
        }
    }

    if (!info.has_dispatcher) {
        info.functions.clear();
        info.functions.emplace(FunctionId::fallback(), FunctionEntry{});
        return info;
    }
    if (size_check_fallback)
        info.functions.emplace(FunctionId::fallback(), std::move(*size_check_fallback));
    else if (chain_end_fallback)
        info.functions.emplace(FunctionId::fallback(), std::move(*chain_end_fallback));
    return info;
}

std::map<FunctionId, std::size_t> get_functions(const Bytecode& code)
{
    Program program(code);
    auto info = analyze_dispatcher(program);
    if (!info.has_dispatcher)
        throw Error(ErrorCode::NoDispatcher, "no selector comparison found in " + code.origin_id);
    std::map<FunctionId, std::size_t> out;
    for (const auto& [id, fe] : info.functions)
        out.emplace(id, fe.offset);
    return out;
}

// --- per-function CFG ------------------------------------------------------

std::vector<BlockRef> FunctionCfg::successors(BlockRef b) const
{
    std::vector<BlockRef> out;
    auto lo = std::lower_bound(edges.begin(), edges.end(), std::pair<BlockRef, BlockRef>{b, 0});
    for (auto it = lo; it != edges.end() && it->first == b; ++it)
        out.push_back(it->second);
    return out;
}

namespace {

struct JumpOperands {
    AbstractStackValue target;
    AbstractStackValue cond;
};

JumpOperands run_cfg_block(const BasicBlock& block, Stack<AbstractStackValue>& st)
{
    JumpOperands j;
    for (const auto& ins : block.instructions) {
        std::uint8_t op = ins.opcode;
        if (auto v = ins.push_value()) {
            st.push(*v);
        } else if (is_dup(op)) {
            st.dup(op - OP_DUP1 + 1u);
        } else if (is_swap(op)) {
            st.swap(op - OP_SWAP1 + 1u);
        } else if (op == OP_POP) {
            st.pop();
        } else if (op == OP_AND) {
            auto a = st.pop();
            auto b = st.pop();
            st.push(a && b ? AbstractStackValue{*a & *b} : std::nullopt);
        } else if (op == OP_JUMP) {
            j.target = st.pop();
        } else if (op == OP_JUMPI) {
            j.target = st.pop();
            j.cond = st.pop();
        } else {
            const auto& info = opcode_info(op);
            for (unsigned i = 0; i < info.pops; ++i)
                st.pop();
            for (unsigned i = 0; i < info.pushes; ++i)
                st.push(std::nullopt);
        }
    }
    return j;
}

std::vector<std::size_t> clone_path_of(const Program& program, const std::vector<AbstractStackValue>& items)
{
    std::vector<std::size_t> path;
    for (auto it = items.rbegin(); it != items.rend() && path.size() < kCloneDepth; ++it) {
        if (*it && program.is_jumpdest(**it))
            path.push_back(static_cast<std::size_t>((*it)->low_u64()));
    }
    return path;
}

}  // namespace

FunctionCfg get_cfg(const Program& program, const DispatchInfo& dispatch, const FunctionId& fn)
{
    auto fit = dispatch.functions.find(fn);
    if (fit == dispatch.functions.end())
        throw Error(ErrorCode::UnknownFunction, fn.to_string() + " is not routed by the dispatcher");
    const FunctionEntry& entry = fit->second;

    FunctionCfg cfg;
    cfg.selector = fn;
    for (auto b : entry.prefix_blocks)
        cfg.prefix.push_back(program.blocks()[b]);

    auto entry_block = program.block_at(entry.offset);
    if (!entry_block)
        return cfg;

    using NodeKey = std::pair<std::size_t, std::vector<std::size_t>>;
    std::map<NodeKey, BlockRef> node_of;
    std::set<std::pair<BlockRef, BlockRef>> edges;

    auto node_for = [&](std::size_t block, const std::vector<AbstractStackValue>& stack) {
        NodeKey key{block, clone_path_of(program, stack)};
        auto [it, inserted] = node_of.try_emplace(key, cfg.nodes.size());
        if (inserted)
            cfg.nodes.push_back(CfgNode{program.blocks()[block], key.second, false});
        return it->second;
    };

    struct State {
        BlockRef node;
        std::size_t block;
        std::vector<AbstractStackValue> stack;
    };
    using StateKey = std::tuple<std::size_t, std::vector<std::size_t>, std::vector<AbstractStackValue>>;
    std::set<StateKey> seen;
    std::deque<State> work;

    auto enqueue = [&](BlockRef node, std::size_t block, const Stack<AbstractStackValue>& st) {
        StateKey key{block, cfg.nodes[node].clone_path, st.top(kStateStackDepth)};
        if (seen.insert(std::move(key)).second)
            work.push_back({node, block, st.items()});
    };

    {
        Stack<AbstractStackValue> st{entry.prefix_stack};
        cfg.entry = node_for(*entry_block, st.items());
        enqueue(cfg.entry, *entry_block, st);
    }

    std::set<BlockRef> unresolved;
    std::size_t visits = 0;
    while (!work.empty()) {
        if (visits++ >= kCfgVisitBudget) {
            cfg.budget_exceeded = true;
            break;
        }
        State s = std::move(work.front());
        work.pop_front();
        const auto& block = program.blocks()[s.block];
        Stack<AbstractStackValue> st{std::move(s.stack)};
        auto j = run_cfg_block(block, st);

        auto go = [&](std::size_t offset) {
            auto b = program.block_at(offset);
            if (!b)
                return;
            BlockRef succ = node_for(*b, st.items());
            edges.emplace(s.node, succ);
            enqueue(succ, *b, st);
        };
        auto jump_target = [&]() -> std::optional<std::size_t> {
            if (j.target && program.is_jumpdest(*j.target))
                return static_cast<std::size_t>(j.target->low_u64());
            return std::nullopt;
        };

        switch (block.terminator_kind) {
        case TerminatorKind::Terminal:
            break;
        case TerminatorKind::FallThrough:
            go(block.end_offset());
            break;
        case TerminatorKind::Jump:
            if (auto t = jump_target())
                go(*t);
            else
                unresolved.insert(s.node);
            break;
        case TerminatorKind::JumpI: {
            bool may_jump = !j.cond || !j.cond->is_zero();
            bool may_fall = !j.cond || j.cond->is_zero();
            if (may_jump) {
                if (auto t = jump_target())
                    go(*t);
                else
                    unresolved.insert(s.node);
            }
            if (may_fall)
                go(block.end_offset());
            break;
        }
        }
    }

    for (auto n : unresolved)
        cfg.nodes[n].unresolved = true;
    cfg.unresolved_jumps = unresolved.size();
    cfg.edges.assign(edges.begin(), edges.end());
    return cfg;
}

FunctionCfg get_cfg(const Bytecode& code, const FunctionId& fn)
{
    Program program(code);
    return get_cfg(program, analyze_dispatcher(program), fn);
}

std::set<BlockRef> get_predecessors(BlockRef block, const FunctionCfg& cfg)
{
    if (block >= cfg.nodes.size())
        throw Error(ErrorCode::BlockNotInCfg, "block " + std::to_string(block) + " of " + cfg.selector.to_string());
    std::set<BlockRef> preds;
    for (const auto& [from, to] : cfg.edges) {
        if (to == block)
            preds.insert(from);
    }
    return preds;
}

void write_dot(std::ostream& out, const FunctionCfg& cfg)
{
    out << "digraph \"" << cfg.selector.to_string() << "\" {\n";
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
        char label[32];
        std::snprintf(label, sizeof label, "0x%zx", cfg.nodes[i].block.start_offset);
        out << "  n" << i << " [label=\"" << label;
        if (!cfg.nodes[i].clone_path.empty())
            out << "#" << i;
        out << "\"" << (cfg.nodes[i].unresolved ? ", color=red" : "") << (i == cfg.entry ? ", shape=doublecircle" : "")
            << "];\n";
    }
    for (const auto& [from, to] : cfg.edges)
        out << "  n" << from << " -> n" << to << " [style=solid];\n";
    out << "}\n";
}

}  // namespace ssgsim
