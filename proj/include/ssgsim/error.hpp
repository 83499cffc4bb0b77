// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <stdexcept>
#include <string>

namespace ssgsim {

enum class ErrorCode {
    InputTooLarge,
    InvalidHex,
    NoDispatcher,
    UnknownFunction,
    BlockNotInCfg,
    EmptyBatch,
    DivergedLoss,
    InvalidConfig,
    TooFewClasses,
    InsufficientVariants,
    SingleClass,
    DimensionMismatch,
    NonFiniteVector,
    InvalidKey,
    IoError,
    CorruptIndex,
    CorruptModel,
    InvalidSsg,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ssgsim
