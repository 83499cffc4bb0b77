// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/bytecode.hpp"

#include "ssgsim/error.hpp"
#include "ssgsim/opcodes.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace ssgsim {
namespace {

int hex_digit(char c) noexcept
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

// Minimal CBOR walker: skips one data item starting at pos. Only definite
// lengths are accepted, which is all solc ever emits.
bool skip_cbor_item(std::span<const std::uint8_t> data, std::size_t& pos, int depth)
{
    if (depth > 8 || pos >= data.size())
        return false;
    std::uint8_t initial = data[pos++];
    unsigned major = initial >> 5;
    unsigned info = initial & 0x1f;

    std::uint64_t arg = 0;
    if (info < 24) {
        arg = info;
    } else if (info <= 27) {
        std::size_t n = std::size_t{1} << (info - 24);
        if (pos + n > data.size())
            return false;
        for (std::size_t i = 0; i < n; ++i)
            arg = (arg << 8) | data[pos++];
    } else {
        return false;
    }

    switch (major) {
    case 0:  // unsigned
    case 1:  // negative
    case 7:  // simple / float
        return true;
    case 2:  // bytes
    case 3:  // text
        if (arg > data.size() - pos)
            return false;
        pos += static_cast<std::size_t>(arg);
        return true;
    case 4:  // array
        for (std::uint64_t i = 0; i < arg; ++i) {
            if (!skip_cbor_item(data, pos, depth + 1))
                return false;
        }
        return true;
    case 5:  // map
        for (std::uint64_t i = 0; i < arg; ++i) {
            if (!skip_cbor_item(data, pos, depth + 1) || !skip_cbor_item(data, pos, depth + 1))
                return false;
        }
        return true;
    case 6:  // tag
        return skip_cbor_item(data, pos, depth + 1);
    default:
        return false;
    }
}

std::size_t metadata_trailer_length(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2)
        return 0;
    std::size_t len = (std::size_t{bytes[bytes.size() - 2]} << 8) | bytes[bytes.size() - 1];
    if (len == 0 || len + 2 > bytes.size())
        return 0;
    auto cbor = bytes.subspan(bytes.size() - 2 - len, len);
    if ((cbor[0] >> 5) != 5)
        return 0;
    std::size_t pos = 0;
    if (!skip_cbor_item(cbor, pos, 0) || pos != cbor.size())
        return 0;
    return len + 2;
}

}  // namespace

std::vector<std::uint8_t> parse_hex(std::string_view text)
{
    std::string digits;
    digits.reserve(text.size());
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c)))
            digits.push_back(c);
    }
    std::string_view sv = digits;
    if (sv.starts_with("0x") || sv.starts_with("0X"))
        sv.remove_prefix(2);
    if (sv.size() % 2 != 0)
        throw Error(ErrorCode::InvalidHex, "odd number of hex digits");
    std::vector<std::uint8_t> out;
    out.reserve(sv.size() / 2);
    for (std::size_t i = 0; i < sv.size(); i += 2) {
        int hi = hex_digit(sv[i]);
        int lo = hex_digit(sv[i + 1]);
        if (hi < 0 || lo < 0)
            throw Error(ErrorCode::InvalidHex, "non-hex character at digit " + std::to_string(i));
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

Bytecode read_hex_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return Bytecode{parse_hex(ss.str()), path.stem().string()};
}

std::optional<Word> Instruction::push_value() const
{
    if (opcode == OP_PUSH0)
        return Word{};
    if (!is_push(opcode))
        return std::nullopt;
    return Word::from_be_bytes(push_data);
}

Bytecode strip_metadata(const Bytecode& code)
{
    std::size_t trailer = metadata_trailer_length(code.bytes);
    if (trailer == 0)
        return code;
    Bytecode out;
    out.origin_id = code.origin_id;
    out.bytes.assign(code.bytes.begin(), code.bytes.end() - static_cast<std::ptrdiff_t>(trailer));
    return out;
}

std::vector<Instruction> disassemble(const Bytecode& code)
{
    std::size_t effective = code.size() - metadata_trailer_length(code.bytes);
    if (effective > kMaxCodeSize) {
        throw Error(ErrorCode::InputTooLarge, code.origin_id + " is " + std::to_string(effective) +
                                                  " bytes, limit is " + std::to_string(kMaxCodeSize));
    }

    std::vector<Instruction> out;
    const auto& bytes = code.bytes;
    std::size_t pc = 0;
    while (pc < bytes.size()) {
        Instruction ins;
        ins.offset = pc;
        ins.opcode = bytes[pc];
        unsigned width = push_width(ins.opcode);
        ins.push_data.assign(width, 0);
        for (unsigned i = 0; i < width && pc + 1 + i < bytes.size(); ++i)
            ins.push_data[i] = bytes[pc + 1 + i];
        pc += 1 + width;
        out.push_back(std::move(ins));
    }
    return out;
}

std::vector<std::uint8_t> serialize(std::span<const Instruction> instructions)
{
    std::vector<std::uint8_t> out;
    for (const auto& ins : instructions) {
        out.push_back(ins.opcode);
        out.insert(out.end(), ins.push_data.begin(), ins.push_data.end());
    }
    return out;
}

const char* to_string(StableCategory c) noexcept
{
    switch (c) {
    case StableCategory::Storage: return "storage";
    case StableCategory::Log: return "log";
    case StableCategory::Call: return "call";
    case StableCategory::Return: return "return";
    }
    return "?";
}

std::optional<StableCategory> stable_category_from_string(std::string_view s)
{
    for (auto c : {StableCategory::Storage, StableCategory::Log, StableCategory::Call, StableCategory::Return}) {
        if (s == to_string(c))
            return c;
    }
    return std::nullopt;
}

std::optional<StableCategory> classify_stable(std::uint8_t opcode) noexcept
{
    switch (opcode) {
    case OP_SSTORE:
    case OP_SLOAD:
        return StableCategory::Storage;
    case OP_LOG0:
    case OP_LOG1:
    case OP_LOG2:
    case OP_LOG3:
    case OP_LOG4:
        return StableCategory::Log;
    case OP_CALL:
    case OP_STATICCALL:
    case OP_BALANCE:
    case OP_DELEGATECALL:
        return StableCategory::Call;
    case OP_RETURN:
    case OP_SELFDESTRUCT:
    case OP_REVERT:
    case OP_INVALID:
    case OP_STOP:
        return StableCategory::Return;
    default:
        return std::nullopt;
    }
}

std::string format_instruction(const Instruction& ins)
{
    std::ostringstream ss;
    ss << "0x" << std::hex << ins.offset << ": " << opcode_name(ins.opcode);
    if (!ins.push_data.empty())
        ss << " 0x" << to_hex(ins.push_data);
    return ss.str();
}

}  // namespace ssgsim
