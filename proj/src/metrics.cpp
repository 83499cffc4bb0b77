// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/metrics.hpp"

#include "ssgsim/error.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace ssgsim {

double compute_auc(std::span<const double> scores, std::span<const int> labels)
{
    if (scores.size() != labels.size())
        throw Error(ErrorCode::InvalidConfig, "scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Rank sum of the positives, with tied groups sharing their mean rank.
    double pos_rank_sum = 0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        std::size_t group_pos = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] > 0)
                ++group_pos;
            ++j;
        }
        const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        pos_rank_sum += mean_rank * static_cast<double>(group_pos);
        pos += group_pos;
        i = j;
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0)
        throw Error(ErrorCode::SingleClass, "AUC needs both positive and negative labels");
    const double p = static_cast<double>(pos);
    const double u = pos_rank_sum - p * (p + 1) / 2;
    return u / (p * static_cast<double>(neg));
}

}  // namespace ssgsim
