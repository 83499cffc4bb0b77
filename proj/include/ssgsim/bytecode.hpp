// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include "ssgsim/word.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssgsim {

/// Largest runtime code accepted (the EIP-170 contract size limit).
inline constexpr std::size_t kMaxCodeSize = 24'576;

/// Runtime bytecode of one contract. Deployment code is not supported.
struct Bytecode {
    std::vector<std::uint8_t> bytes;
    std::string origin_id;

    std::size_t size() const noexcept { return bytes.size(); }
};

/// Parses hex text: optional "0x" prefix, either case, whitespace ignored.
/// Throws Error{InvalidHex}.
std::vector<std::uint8_t> parse_hex(std::string_view text);
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Reads a hex file; origin_id is the file stem.
Bytecode read_hex_file(const std::filesystem::path& path);

struct Instruction {
    std::size_t offset = 0;
    std::uint8_t opcode = 0;
    std::vector<std::uint8_t> push_data;  // exactly push_width(opcode) bytes

    std::size_t size() const noexcept { return 1 + push_data.size(); }
    std::size_t next_offset() const noexcept { return offset + size(); }
    /// Immediate of a PUSH, zero for PUSH0; nullopt for non-push opcodes.
    std::optional<Word> push_value() const;
};

/// Removes a trailing Solidity CBOR metadata section when one is present.
/// The trailer is L bytes of CBOR (a single map) followed by a 2-byte
/// big-endian L. Anything that does not parse is left untouched.
Bytecode strip_metadata(const Bytecode& code);

/// Decodes the whole byte range. Undefined opcodes decode as one-byte
/// instructions; a truncated trailing PUSH is zero-padded.
/// Throws Error{InputTooLarge} when the code without its metadata trailer
/// exceeds kMaxCodeSize.
std::vector<Instruction> disassemble(const Bytecode& code);

/// Inverse of disassemble (modulo zero padding of a truncated PUSH).
std::vector<std::uint8_t> serialize(std::span<const Instruction> instructions);

enum class StableCategory : std::uint8_t { Storage, Log, Call, Return };

inline constexpr std::size_t kStableCategoryCount = 4;

const char* to_string(StableCategory c) noexcept;
std::optional<StableCategory> stable_category_from_string(std::string_view s);

/// Storage = {SSTORE, SLOAD}, Log = {LOG0..LOG4},
/// Call = {CALL, STATICCALL, BALANCE, DELEGATECALL},
/// Return = {RETURN, SELFDESTRUCT, REVERT, INVALID, STOP}.
/// INVALID (0xfe) stands in for the legacy THROW.
std::optional<StableCategory> classify_stable(std::uint8_t opcode) noexcept;

std::string format_instruction(const Instruction& ins);

}  // namespace ssgsim
