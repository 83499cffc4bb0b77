// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include "ssgsim/word.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ssgsim {

/// Small label-resolving EVM assembler.
///
///     Assembler a;
///     a.push_label("body").op(OP_JUMP);
///     a.label("body").push(1).push(0).op(OP_SSTORE).op(OP_STOP);
///     auto code = a.assemble();
///
/// label() emits a JUMPDEST; mark() only names the next instruction's offset.
class Assembler {
public:
    Assembler& op(std::uint8_t opcode);
    /// width 0 selects the minimal PUSH width (PUSH1 for zero).
    Assembler& push(const Word& value, unsigned width = 0);
    Assembler& push_label(const std::string& name, unsigned width = 2);
    Assembler& label(const std::string& name);
    Assembler& mark(const std::string& name);
    Assembler& raw(const std::vector<std::uint8_t>& bytes);

    std::size_t size() const noexcept { return code_.size(); }
    bool has(const std::string& name) const { return names_.contains(name); }
    /// Throws std::out_of_range for unknown names.
    std::size_t offset_of(const std::string& name) const;
    const std::map<std::string, std::size_t>& names() const noexcept { return names_; }

    /// Resolves label pushes. Throws std::runtime_error on undefined labels
    /// or labels that do not fit their PUSH width.
    std::vector<std::uint8_t> assemble() const;

private:
    struct Fixup {
        std::size_t at;
        unsigned width;
        std::string name;
    };

    std::vector<std::uint8_t> code_;
    std::map<std::string, std::size_t> names_;
    std::vector<Fixup> fixups_;
};

}  // namespace ssgsim
