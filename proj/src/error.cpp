// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/error.hpp"

namespace ssgsim {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InputTooLarge: return "InputTooLarge";
    case ErrorCode::InvalidHex: return "InvalidHex";
    case ErrorCode::NoDispatcher: return "NoDispatcher";
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::BlockNotInCfg: return "BlockNotInCfg";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TooFewClasses: return "TooFewClasses";
    case ErrorCode::InsufficientVariants: return "InsufficientVariants";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteVector: return "NonFiniteVector";
    case ErrorCode::InvalidKey: return "InvalidKey";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::CorruptIndex: return "CorruptIndex";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::InvalidSsg: return "InvalidSsg";
    }
    return "Unknown";
}

}  // namespace ssgsim
