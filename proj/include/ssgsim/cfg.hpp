// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include "ssgsim/bytecode.hpp"
#include "ssgsim/word.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ssgsim {

enum class TerminatorKind : std::uint8_t { Jump, JumpI, FallThrough, Terminal };

struct BasicBlock {
    std::size_t start_offset = 0;
    std::vector<Instruction> instructions;
    TerminatorKind terminator_kind = TerminatorKind::FallThrough;

    std::size_t end_offset() const noexcept
    {
        return instructions.empty() ? start_offset : instructions.back().next_offset();
    }
};

/// Leaders are offset 0, every JUMPDEST and every instruction following a
/// block terminator (JUMP, JUMPI, RETURN, REVERT, STOP, SELFDESTRUCT, INVALID).
std::vector<BasicBlock> find_basic_blocks(std::span<const Instruction> instructions);

/// An external function: a 4-byte selector, or the fallback.
struct FunctionId {
    std::optional<std::uint32_t> selector;

    static FunctionId fallback() noexcept { return {}; }
    static FunctionId of(std::uint32_t s) noexcept { return {s}; }
    bool is_fallback() const noexcept { return !selector.has_value(); }

    /// "0x095ea7b3" or "fallback".
    std::string to_string() const;
    static std::optional<FunctionId> parse(std::string_view text);

    friend bool operator==(const FunctionId&, const FunctionId&) = default;
    /// Selectors ascending, fallback last.
    friend bool operator<(const FunctionId& a, const FunctionId& b) noexcept
    {
        return a.sort_key() < b.sort_key();
    }

private:
    std::uint64_t sort_key() const noexcept { return selector ? *selector : (std::uint64_t{1} << 32); }
};

/// Abstract stack slot: an exact constant, or Unknown (nullopt).
using AbstractStackValue = std::optional<Word>;

/// Decoded contract: metadata stripped, disassembled and split into blocks.
class Program {
public:
    explicit Program(const Bytecode& code);

    const Bytecode& code() const noexcept { return code_; }
    std::span<const Instruction> instructions() const noexcept { return instructions_; }
    const std::vector<BasicBlock>& blocks() const noexcept { return blocks_; }

    /// Index of the block starting at offset, if any.
    std::optional<std::size_t> block_at(std::size_t offset) const;
    /// True iff offset holds a JUMPDEST instruction (not PUSH data).
    bool is_jumpdest(std::size_t offset) const;
    bool is_jumpdest(const Word& target) const;

private:
    Bytecode code_;
    std::vector<Instruction> instructions_;
    std::vector<BasicBlock> blocks_;
    std::unordered_map<std::size_t, std::size_t> block_index_;
};

/// How the dispatcher reaches a function: the blocks it executes first and
/// the abstract stack it leaves at the entry.
struct FunctionEntry {
    std::size_t offset = 0;
    std::vector<std::size_t> prefix_blocks;  // block indices, in execution order
    std::vector<AbstractStackValue> prefix_stack;  // bottom first
};

struct DispatchInfo {
    std::map<FunctionId, FunctionEntry> functions;
    bool has_dispatcher = false;
};

/// Recognizes the solc dispatcher by tracking the calldata selector word
/// (CALLDATALOAD(0) followed by SHR 224 or DIV 2^224, optionally masked)
/// through comparisons against PUSH constants that guard a JUMPI.
/// Linear and binary-search dispatch chains are both followed.
DispatchInfo analyze_dispatcher(const Program& program);

/// Selector → entry offset, including "fallback" when present.
/// Throws Error{NoDispatcher} when no selector comparison is found.
std::map<FunctionId, std::size_t> get_functions(const Bytecode& code);

using BlockRef = std::size_t;

/// A function-local copy of a basic block.
struct CfgNode {
    BasicBlock block;
    std::vector<std::size_t> clone_path;  // return-address constants at entry, innermost first
    bool unresolved = false;  // ends in a JUMP whose target was not resolved
};

struct FunctionCfg {
    FunctionId selector;
    BlockRef entry = 0;
    std::vector<CfgNode> nodes;
    std::vector<std::pair<BlockRef, BlockRef>> edges;  // sorted, unique
    std::vector<BasicBlock> prefix;  // dispatcher blocks executed before the entry
    std::size_t unresolved_jumps = 0;
    bool budget_exceeded = false;

    std::vector<BlockRef> successors(BlockRef b) const;
};

inline constexpr std::size_t kCfgVisitBudget = 10'000;
inline constexpr std::size_t kCloneDepth = 8;
inline constexpr std::size_t kStateStackDepth = 16;

/// Builds the CFG of one function by abstract stack simulation from its
/// entry. Only PUSH/DUP/SWAP/POP/AND are interpreted; every other opcode
/// pops its operands and pushes Unknown. Blocks are cloned per distinct
/// clone path, so reused blocks get one node per calling context.
/// On budget exhaustion the partial CFG is returned with budget_exceeded set.
FunctionCfg get_cfg(const Program& program, const DispatchInfo& dispatch, const FunctionId& fn);
/// Throws Error{UnknownFunction} for selectors the dispatcher does not route.
FunctionCfg get_cfg(const Bytecode& code, const FunctionId& fn);

/// Throws Error{BlockNotInCfg}.
std::set<BlockRef> get_predecessors(BlockRef block, const FunctionCfg& cfg);

void write_dot(std::ostream& out, const FunctionCfg& cfg);

}  // namespace ssgsim
