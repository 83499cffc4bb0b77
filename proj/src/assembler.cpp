// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/assembler.hpp"

#include "ssgsim/opcodes.hpp"

#include <algorithm>
#include <stdexcept>

namespace ssgsim {

Assembler& Assembler::op(std::uint8_t opcode)
{
    code_.push_back(opcode);
    return *this;
}

Assembler& Assembler::push(const Word& value, unsigned width)
{
    if (width == 0)
        width = std::max(1u, value.byte_length());
    if (width > 32 || value.byte_length() > width)
        throw std::invalid_argument("push value does not fit width " + std::to_string(width));
    code_.push_back(static_cast<std::uint8_t>(OP_PUSH1 + width - 1));
    auto bytes = value.to_be_bytes();
    code_.insert(code_.end(), bytes.end() - width, bytes.end());
    return *this;
}

Assembler& Assembler::push_label(const std::string& name, unsigned width)
{
    code_.push_back(static_cast<std::uint8_t>(OP_PUSH1 + width - 1));
    fixups_.push_back({code_.size(), width, name});
    code_.insert(code_.end(), width, 0);
    return *this;
}

Assembler& Assembler::label(const std::string& name)
{
    mark(name);
    return op(OP_JUMPDEST);
}

Assembler& Assembler::mark(const std::string& name)
{
    if (!names_.emplace(name, code_.size()).second)
        throw std::invalid_argument("duplicate label " + name);
    return *this;
}

Assembler& Assembler::raw(const std::vector<std::uint8_t>& bytes)
{
    code_.insert(code_.end(), bytes.begin(), bytes.end());
    return *this;
}

std::size_t Assembler::offset_of(const std::string& name) const
{
    return names_.at(name);
}

std::vector<std::uint8_t> Assembler::assemble() const
{
    auto out = code_;
    for (const auto& f : fixups_) {
        auto it = names_.find(f.name);
        if (it == names_.end())
            throw std::runtime_error("undefined label " + f.name);
        Word target{it->second};
        if (target.byte_length() > f.width)
            throw std::runtime_error("label " + f.name + " does not fit PUSH" + std::to_string(f.width));
        auto bytes = target.to_be_bytes();
        std::copy(bytes.end() - f.width, bytes.end(), out.begin() + static_cast<std::ptrdiff_t>(f.at));
    }
    return out;
}

}  // namespace ssgsim
