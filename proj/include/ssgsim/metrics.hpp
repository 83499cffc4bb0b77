// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <span>

namespace ssgsim {

/// Area under the ROC curve in the Mann-Whitney form: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting one half. labels are +1 / -1.
/// Throws Error{SingleClass} unless both labels occur.
double compute_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace ssgsim
