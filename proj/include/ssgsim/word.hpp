// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace ssgsim {

/// 256-bit unsigned machine word with modular (wrap-around) arithmetic.
class Word {
public:
    constexpr Word() noexcept = default;
    constexpr Word(std::uint64_t v) noexcept : limbs_{v, 0, 0, 0} {}  // NOLINT: implicit by design of EVM literals

    /// Big-endian bytes; shorter inputs are treated as the low-order bytes,
    /// longer ones keep only the last 32 bytes.
    static Word from_be_bytes(std::span<const std::uint8_t> bytes) noexcept;
    static std::optional<Word> from_hex(std::string_view hex);

    std::array<std::uint8_t, 32> to_be_bytes() const noexcept;
    /// Minimal lowercase hex with "0x" prefix ("0x0" for zero).
    std::string to_hex() const;

    constexpr std::uint64_t limb(std::size_t i) const noexcept { return limbs_[i]; }
    constexpr bool fits_u64() const noexcept { return (limbs_[1] | limbs_[2] | limbs_[3]) == 0; }
    constexpr std::uint64_t low_u64() const noexcept { return limbs_[0]; }
    constexpr bool is_zero() const noexcept { return fits_u64() && limbs_[0] == 0; }
    bool bit(unsigned i) const noexcept { return (limbs_[i / 64] >> (i % 64)) & 1U; }
    unsigned byte_length() const noexcept;

    friend Word operator+(const Word& a, const Word& b) noexcept;
    friend Word operator-(const Word& a, const Word& b) noexcept;
    friend Word operator*(const Word& a, const Word& b) noexcept;
    friend Word operator&(const Word& a, const Word& b) noexcept;
    friend Word operator|(const Word& a, const Word& b) noexcept;
    friend Word operator^(const Word& a, const Word& b) noexcept;
    friend Word operator~(const Word& a) noexcept;
    friend Word operator<<(const Word& a, unsigned shift) noexcept;
    friend Word operator>>(const Word& a, unsigned shift) noexcept;

    friend constexpr bool operator==(const Word& a, const Word& b) noexcept = default;
    friend std::strong_ordering operator<=>(const Word& a, const Word& b) noexcept;

private:
    std::array<std::uint64_t, 4> limbs_{};  // little-endian limbs
};

}  // namespace ssgsim
