#pragma once

#include "clonerec/token.hpp"

namespace clonerec {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;

    bool operator==(const RougeScore&) const = default;
};

/// F = 2PR/(P+R), 0 when both are 0.
double f_measure(double precision, double recall);

/// N-gram overlap with clipped counts: each distinct n-gram contributes
/// min(candidate count, reference count). Ratios with a zero denominator
/// (sequence shorter than n) are 0.
RougeScore rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n);

/// Longest-common-subsequence variant: precision = LCS/|candidate|,
/// recall = LCS/|reference|.
RougeScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference);

}  // namespace clonerec
