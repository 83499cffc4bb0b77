// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include "ssgsim/cfg.hpp"
#include "ssgsim/word.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

namespace ssgsim {

/// Blocks executed by the dispatcher before a function's entry.
inline constexpr BlockRef kPrefixBlock = std::numeric_limits<BlockRef>::max();

/// An instruction inside a function-local block clone.
struct Site {
    BlockRef block = 0;
    std::size_t offset = 0;

    friend auto operator<=>(const Site&, const Site&) = default;
};

using DefId = std::uint32_t;

/// Stack value: the instructions that may have produced it and its constant
/// value when every producer agrees on one.
struct Value {
    std::vector<DefId> defs;  // sorted, unique
    std::optional<Word> constant;

    friend bool operator==(const Value&, const Value&) = default;
};

/// Result of reading a byte range of the memory model.
struct MemoryRead {
    std::uint64_t start = 0;
    std::uint64_t length = 0;
    /// Writers covering the range with the first byte each one covers.
    std::vector<std::pair<DefId, std::uint64_t>> writers;
    bool unknown = false;  // some byte is not accounted for (clobbered memory)
    std::optional<Word> constant;  // only for reads of at most 32 bytes
};

/// Byte-granular memory model. Writes at constant offsets update the map;
/// a write at an unknown offset clobbers everything written so far.
class Memory {
public:
    static constexpr std::uint64_t kMaxTrackedOffset = std::uint64_t{1} << 32;
    static constexpr std::uint64_t kMaxTrackedWrite = 4096;

    void write(std::uint64_t offset, std::uint64_t length, DefId writer, std::optional<Word> value);
    void write_byte(std::uint64_t offset, DefId writer, std::optional<std::uint8_t> value);
    void clobber();
    MemoryRead read(std::uint64_t offset, std::uint64_t length) const;
    /// Returns true if this changed.
    bool join(const Memory& other);

    bool clobbered() const noexcept { return clobbered_; }
    std::size_t tracked_bytes() const noexcept { return cells_.size(); }

    friend bool operator==(const Memory&, const Memory&) = default;

private:
    struct Cell {
        std::vector<DefId> writers;
        std::int16_t byte = -1;  // known byte value, -1 if unknown

        friend bool operator==(const Cell&, const Cell&) = default;
    };
    std::map<std::uint64_t, Cell> cells_;
    bool clobbered_ = false;
};

enum class DefRole : std::uint8_t { Result, MemoryWrite };

/// A value-producing or memory-writing instruction and the operands it saw
/// at the analysis fixpoint.
struct Def {
    Site site;
    std::uint8_t opcode = 0;
    DefRole role = DefRole::Result;
    std::vector<Value> operands;  // top of stack first
    std::optional<MemoryRead> read;  // MLOAD, KECCAK256, MCOPY source
    std::optional<Word> result;  // constant result, if folded
};

/// What a stable instruction saw: its stack operands and the memory model
/// just before it executed.
struct SiteRecord {
    std::vector<Value> operands;  // top first
    Memory memory;
};

/// Forward value-flow analysis over one function CFG (plus its dispatcher
/// prefix): reaching stack definitions, constant folding and the memory
/// model, iterated to a fixpoint over block-clone entry states.
class ValueFlow {
public:
    explicit ValueFlow(const FunctionCfg& cfg);

    const std::vector<Def>& defs() const noexcept { return defs_; }
    const Def& def(DefId id) const { return defs_.at(id); }
    /// Record of the stable instruction at site, if that site was reached.
    const SiteRecord* site_record(const Site& site) const;
    /// Instruction at site (prefix sites included).
    const Instruction* instruction_at(const Site& site) const;
    bool budget_exceeded() const noexcept { return budget_exceeded_; }

private:
    struct State;
    void transfer(const BasicBlock& block, BlockRef ref, State& state, bool record);
    DefId def_id(const Site& site, std::uint8_t opcode, DefRole role);

    const FunctionCfg* cfg_;
    std::vector<Def> defs_;
    std::map<std::pair<Site, DefRole>, DefId> def_index_;
    std::map<Site, SiteRecord> site_records_;
    bool budget_exceeded_ = false;
};

}  // namespace ssgsim
