// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/word.hpp"

#include <algorithm>

namespace ssgsim {

Word Word::from_be_bytes(std::span<const std::uint8_t> bytes) noexcept
{
    if (bytes.size() > 32)
        bytes = bytes.subspan(bytes.size() - 32);
    Word w;
    std::size_t n = bytes.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t bit_pos = (n - 1 - i) * 8;
        w.limbs_[bit_pos / 64] |= std::uint64_t{bytes[i]} << (bit_pos % 64);
    }
    return w;
}

std::optional<Word> Word::from_hex(std::string_view hex)
{
    if (hex.starts_with("0x") || hex.starts_with("0X"))
        hex.remove_prefix(2);
    if (hex.empty() || hex.size() > 64)
        return std::nullopt;
    Word w;
    for (char c : hex) {
        unsigned v;
        if (c >= '0' && c <= '9')
            v = static_cast<unsigned>(c - '0');
        else if (c >= 'a' && c <= 'f')
            v = static_cast<unsigned>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F')
            v = static_cast<unsigned>(c - 'A' + 10);
        else
            return std::nullopt;
        w = (w << 4) | Word{v};
    }
    return w;
}

std::array<std::uint8_t, 32> Word::to_be_bytes() const noexcept
{
    std::array<std::uint8_t, 32> out{};
    for (std::size_t i = 0; i < 32; ++i) {
        std::size_t bit_pos = (31 - i) * 8;
        out[i] = static_cast<std::uint8_t>(limbs_[bit_pos / 64] >> (bit_pos % 64));
    }
    return out;
}

std::string Word::to_hex() const
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    auto bytes = to_be_bytes();
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    auto first = s.find_first_not_of('0');
    if (first == std::string::npos)
        return "0x0";
    return "0x" + s.substr(first);
}

unsigned Word::byte_length() const noexcept
{
    for (int i = 3; i >= 0; --i) {
        if (limbs_[static_cast<std::size_t>(i)] != 0) {
            unsigned bits = 64 - static_cast<unsigned>(__builtin_clzll(limbs_[static_cast<std::size_t>(i)]));
            return (static_cast<unsigned>(i) * 64 + bits + 7) / 8;
        }
    }
    return 0;
}

Word operator+(const Word& a, const Word& b) noexcept
{
    Word r;
    unsigned __int128 carry = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        unsigned __int128 s = static_cast<unsigned __int128>(a.limbs_[i]) + b.limbs_[i] + carry;
        r.limbs_[i] = static_cast<std::uint64_t>(s);
        carry = s >> 64;
    }
    return r;
}

Word operator-(const Word& a, const Word& b) noexcept
{
    return a + (~b + Word{1});
}

Word operator*(const Word& a, const Word& b) noexcept
{
    Word r;
    for (std::size_t i = 0; i < 4; ++i) {
        unsigned __int128 carry = 0;
        for (std::size_t j = 0; i + j < 4; ++j) {
            unsigned __int128 cur = static_cast<unsigned __int128>(a.limbs_[i]) * b.limbs_[j] +
                                    r.limbs_[i + j] + carry;
            r.limbs_[i + j] = static_cast<std::uint64_t>(cur);
            carry = cur >> 64;
        }
    }
    return r;
}

Word operator&(const Word& a, const Word& b) noexcept
{
    Word r;
    for (std::size_t i = 0; i < 4; ++i)
        r.limbs_[i] = a.limbs_[i] & b.limbs_[i];
    return r;
}

Word operator|(const Word& a, const Word& b) noexcept
{
    Word r;
    for (std::size_t i = 0; i < 4; ++i)
        r.limbs_[i] = a.limbs_[i] | b.limbs_[i];
    return r;
}

Word operator^(const Word& a, const Word& b) noexcept
{
    Word r;
    for (std::size_t i = 0; i < 4; ++i)
        r.limbs_[i] = a.limbs_[i] ^ b.limbs_[i];
    return r;
}

Word operator~(const Word& a) noexcept
{
    Word r;
    for (std::size_t i = 0; i < 4; ++i)
        r.limbs_[i] = ~a.limbs_[i];
    return r;
}

Word operator<<(const Word& a, unsigned shift) noexcept
{
    if (shift >= 256)
        return {};
    Word r;
    std::size_t limb_shift = shift / 64;
    unsigned bit_shift = shift % 64;
    for (std::size_t i = 3 + 1; i-- > limb_shift;) {
        std::uint64_t v = a.limbs_[i - limb_shift] << bit_shift;
        if (bit_shift != 0 && i - limb_shift > 0)
            v |= a.limbs_[i - limb_shift - 1] >> (64 - bit_shift);
        r.limbs_[i] = v;
    }
    return r;
}

Word operator>>(const Word& a, unsigned shift) noexcept
{
    if (shift >= 256)
        return {};
    Word r;
    std::size_t limb_shift = shift / 64;
    unsigned bit_shift = shift % 64;
    for (std::size_t i = 0; i + limb_shift < 4; ++i) {
        std::uint64_t v = a.limbs_[i + limb_shift] >> bit_shift;
        if (bit_shift != 0 && i + limb_shift + 1 < 4)
            v |= a.limbs_[i + limb_shift + 1] << (64 - bit_shift);
        r.limbs_[i] = v;
    }
    return r;
}

std::strong_ordering operator<=>(const Word& a, const Word& b) noexcept
{
    for (std::size_t i = 4; i-- > 0;) {
        if (a.limbs_[i] != b.limbs_[i])
            return a.limbs_[i] <=> b.limbs_[i];
    }
    return std::strong_ordering::equal;
}

}  // namespace ssgsim
