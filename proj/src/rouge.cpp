#include "clonerec/rouge.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "clonerec/errors.hpp"

namespace clonerec {

namespace {

// N-gram multiset; grams keyed by their texts joined with an unit separator,
// which no token text contains.
std::unordered_map<std::string, std::int64_t> ngram_counts(const TokenSequence& tokens, int n) {
    std::unordered_map<std::string, std::int64_t> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
        std::string key;
        for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
            if (j != 0) key.push_back('\x1f');
            key += tokens[i + j].text;
        }
        ++counts[key];
    }
    return counts;
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> previous(b.size() + 1, 0);
    std::vector<std::size_t> current(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1].text == b[j - 1].text) {
                current[j] = previous[j - 1] + 1;
            } else {
                current[j] = std::max(previous[j], current[j - 1]);
            }
        }
        std::swap(previous, current);
    }
    return previous[b.size()];
}

}  // namespace

double f_measure(double precision, double recall) {
    if (precision + recall <= 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

RougeScore rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n) {
    if (n < 1) throw Error("rouge_n requires n >= 1");
    auto cand_counts = ngram_counts(candidate, n);
    auto ref_counts = ngram_counts(reference, n);

    std::int64_t overlap = 0;
    for (const auto& [gram, count] : cand_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
    }
    std::int64_t cand_total =
        static_cast<int>(candidate.size()) < n ? 0 : static_cast<std::int64_t>(candidate.size()) - n + 1;
    std::int64_t ref_total =
        static_cast<int>(reference.size()) < n ? 0 : static_cast<std::int64_t>(reference.size()) - n + 1;

    RougeScore score;
    score.precision = cand_total > 0 ? static_cast<double>(overlap) / static_cast<double>(cand_total) : 0.0;
    score.recall = ref_total > 0 ? static_cast<double>(overlap) / static_cast<double>(ref_total) : 0.0;
    score.f_measure = f_measure(score.precision, score.recall);
    return score;
}

RougeScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
    double lcs = static_cast<double>(lcs_length(candidate, reference));
    RougeScore score;
    score.precision = candidate.empty() ? 0.0 : lcs / static_cast<double>(candidate.size());
    score.recall = reference.empty() ? 0.0 : lcs / static_cast<double>(reference.size());
    score.f_measure = f_measure(score.precision, score.recall);
    return score;
}

}  // namespace clonerec
