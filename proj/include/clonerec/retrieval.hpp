#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "clonerec/corpus.hpp"
#include "clonerec/token.hpp"

namespace clonerec {

/// Sparse vector over term ids, entries sorted by id, weights > 0 only.
struct SparseVector {
    std::vector<std::pair<std::int32_t, double>> entries;
    bool normalized = false;

    bool empty() const { return entries.empty(); }
    double norm() const;
    void l2_normalize();
    double dot(const SparseVector& other) const;
};

struct RankedMatch {
    std::int64_t record_id = 0;
    double score = 0.0;

    bool operator==(const RankedMatch&) const = default;
};

/// TF-IDF index over a search corpus: unigram token texts as terms,
/// weight (1 + ln TF) * ln(J / DF), document vectors L2-normalized.
/// Terms present in every document keep dictionary slots but weigh zero,
/// so the universal clone markers never discriminate.
class TfIdfIndex {
public:
    /// Builds the index. Throws EmptyCorpusError on an empty corpus.
    static TfIdfIndex fit(const SearchCorpus& corpus);

    /// TF from the query alone, DF and J from the corpus; tokens outside
    /// the dictionary are dropped. Result is L2-normalized (or empty).
    SparseVector vectorize_query(const TokenSequence& tokens) const;

    /// Top-k documents by cosine (dot product of normalized vectors),
    /// ties broken by ascending record_id. An empty query scores zero
    /// everywhere, so the ranking is by record_id. k >= 1.
    std::vector<RankedMatch> rank(const SparseVector& query, int k) const;

    std::int64_t corpus_size() const { return corpus_size_; }
    std::int32_t term_count() const { return static_cast<std::int32_t>(terms_.size()); }
    std::int64_t document_frequency(std::string_view term) const;
    const std::vector<SparseVector>& document_vectors() const { return doc_vectors_; }
    const std::vector<std::int64_t>& record_ids() const { return record_ids_; }
    const std::vector<std::string>& terms() const { return terms_; }

    /// Versioned line-delimited snapshot. Refitting the same corpus and
    /// saving again produces byte-identical output.
    void save(const std::filesystem::path& path) const;
    static TfIdfIndex load(const std::filesystem::path& path);

    bool operator==(const TfIdfIndex& other) const;

private:
    TfIdfIndex() = default;
    void rebuild_postings();

    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::int32_t> term_ids_;
    std::vector<std::int64_t> df_;
    std::int64_t corpus_size_ = 0;
    std::vector<SparseVector> doc_vectors_;
    std::vector<std::int64_t> record_ids_;
    // term id -> (document position, weight), document positions ascending
    std::vector<std::vector<std::pair<std::int32_t, double>>> postings_;
};

struct CloneSpan {
    TokenSequence tokens;
    bool unterminated = false;  // no <eoc> after the <soc>
};

/// The subsequence from the first <soc> through the first following <eoc>,
/// both included. Without a closing <eoc> the span runs to the end and is
/// flagged unterminated. Throws MissingStartMarkerError when there is no
/// <soc> at all.
CloneSpan extract_clone_span(const TokenSequence& generated);

}  // namespace clonerec
