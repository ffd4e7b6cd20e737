#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clonerec/errors.hpp"
#include "clonerec/token.hpp"

namespace clonerec {

/// Token text <-> dense id mapping. The five meta tokens are always present
/// with fixed low ids; <unk> absorbs every unseen text.
class Vocabulary {
public:
    Vocabulary();

    std::int32_t intern(const std::string& text);
    std::optional<std::int32_t> find(std::string_view text) const;
    /// Id of `text`, or the <unk> id when unseen.
    std::int32_t id_or_unk(std::string_view text) const;
    const std::string& text(std::int32_t id) const { return texts_.at(static_cast<std::size_t>(id)); }
    std::int32_t size() const { return static_cast<std::int32_t>(texts_.size()); }
    std::int32_t unk_id() const { return unk_id_; }
    const std::vector<std::string>& texts() const { return texts_; }

    bool operator==(const Vocabulary& other) const { return texts_ == other.texts_; }

private:
    std::vector<std::string> texts_;
    std::unordered_map<std::string, std::int32_t> ids_;
    std::int32_t unk_id_ = 0;
};

/// Anything that can hand out a next-token distribution. The retrieval
/// pipeline only ever talks to this interface, so the reference n-gram
/// model below and externally produced generations are interchangeable.
class LanguageModel {
public:
    virtual ~LanguageModel() = default;

    virtual const Vocabulary& vocabulary() const = 0;

    /// Probability of each vocabulary id as the next token after `context`
    /// (token texts, most recent last). Must sum to 1 within 1e-9.
    virtual std::vector<double> next_distribution(std::span<const std::string> context) const = 0;
};

/// Back-off n-gram model: counts for every k-gram level up to `order`,
/// stupid backoff (factor 0.4) between levels, add-one smoothing over the
/// full vocabulary at the unigram level, and a per-context renormalization
/// so the result is a true distribution with full support.
class NGramModel final : public LanguageModel {
public:
    static constexpr double kBackoff = 0.4;

    /// Counts all k-grams (k <= order) of the concatenation of `sequences`.
    /// Throws EmptyTrainingSetError when no sequences are given.
    static NGramModel train(const std::vector<TokenSequence>& sequences, int order);

    const Vocabulary& vocabulary() const override { return vocab_; }
    int order() const { return order_; }

    std::vector<double> next_distribution(std::span<const std::string> context) const override;

    /// Raw count of a k-gram (1 <= k <= order), given as token texts.
    std::int64_t gram_count(std::span<const std::string> gram) const;

    void save(const std::filesystem::path& path) const;
    static NGramModel load(const std::filesystem::path& path);

    bool operator==(const NGramModel& other) const;

private:
    NGramModel() = default;

    std::vector<double> distribution_for_ids(std::span<const std::int32_t> context) const;

    int order_ = 1;
    Vocabulary vocab_;
    std::int64_t total_tokens_ = 0;
    std::vector<std::int64_t> unigram_counts_;
    // levels_[k-2] holds k-gram counts keyed by packed id sequences.
    std::vector<std::unordered_map<std::string, std::int64_t>> levels_;
    // continuations_[m-1]: packed m-token context -> sorted (next id, count).
    std::vector<std::unordered_map<std::string, std::vector<std::pair<std::int32_t, std::int64_t>>>>
        continuations_;
};

/// exp of the average per-token cross entropy of `tokens` under `model`
/// (natural log). The first token is conditioned on the empty context.
/// Unseen tokens score as <unk>. Throws Error on an empty sequence.
double perplexity(const LanguageModel& model, const TokenSequence& tokens);

struct GenerationConfig {
    double nucleus_threshold = 0.95;
    int max_tokens = 200;
    std::string stop_token = std::string(meta::kEndOfClone);
    std::uint64_t rng_seed = 20;
};

/// The ids of the nucleus: the smallest prefix of tokens ordered by
/// descending probability (ties by ascending id) whose cumulative mass
/// reaches `threshold`. Throws DegenerateDistributionError when the
/// distribution is empty or all zero.
std::vector<std::int32_t> nucleus_set(const std::vector<double>& dist, double threshold);

/// One draw from `dist` restricted to its nucleus and renormalized.
std::int32_t nucleus_sample(const std::vector<double>& dist, double threshold,
                            std::mt19937_64& rng);

struct Generation {
    TokenSequence tokens;  // context followed by the sampled tokens
    bool truncated = false;  // max_tokens hit before the stop token
};

/// Samples tokens after `context` until the stop token appears (kept in the
/// output) or max_tokens have been generated.
Generation generate_clone(const LanguageModel& model, const TokenSequence& context,
                          const GenerationConfig& config);

struct QueryWindow {
    TokenSequence tokens;
    std::size_t offset = 0;  // position of the window start in the stream
};

/// All length-`window_len`, stride-1 windows of `stream` that contain
/// <soc>. A stream shorter than the window yields nothing.
std::vector<QueryWindow> extract_query_windows(const TokenSequence& stream, int window_len = 20);

/// One row of a generations file; `generated` includes the context prefix,
/// exactly as generate_clone returns it.
struct GenerationRecord {
    std::int64_t query_id = 0;
    TokenSequence context;
    TokenSequence generated;
    bool truncated = false;

    bool operator==(const GenerationRecord&) const = default;
};

void write_generations(const std::vector<GenerationRecord>& records,
                       const std::filesystem::path& path);
std::vector<GenerationRecord> ingest_generations(const std::filesystem::path& path);

}  // namespace clonerec
