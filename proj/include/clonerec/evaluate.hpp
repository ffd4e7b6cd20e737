#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "clonerec/corpus.hpp"
#include "clonerec/lm.hpp"
#include "clonerec/retrieval.hpp"
#include "clonerec/rouge.hpp"

namespace clonerec {

enum class MatchCriterion { Exact, Functionality };

/// One recommendation as it appears in a query's top-k list.
struct RankedEntry {
    std::int64_t record_id = 0;
    double score = 0.0;
    std::int64_t functionality_id = -1;
    bool exact_match = false;  // token-identical to the ground truth
    double perplexity = 0.0;
    RougeScore rouge1_vs_generated;
    RougeScore rouge2_vs_generated;
    RougeScore rougel_vs_generated;
};

struct QueryResult {
    std::int64_t query_id = 0;
    TokenSequence context;
    TokenSequence generated_span;
    bool span_unterminated = false;
    bool generation_truncated = false;
    std::int64_t ground_truth_record_id = -1;  // -1: not a corpus record
    std::int64_t ground_truth_functionality = -1;
    TokenSequence ground_truth_tokens;
    std::vector<RankedEntry> ranked;  // retrieval order, ties by record_id
    RougeScore rouge1_vs_ground_truth;
    RougeScore rouge2_vs_ground_truth;
    RougeScore rougel_vs_ground_truth;
    double perplexity_generated = 0.0;
    double perplexity_ground_truth = 0.0;
};

struct QueryFailure {
    std::int64_t query_id = 0;
    std::string message;
};

struct SummaryStat {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    std::int64_t count = 0;
};

SummaryStat summarize(std::span<const double> values);

struct RougeAggregate {
    SummaryStat precision;
    SummaryStat recall;
    SummaryStat f_measure;
};

/// Per-query rows plus the aggregate views the summary tables print.
struct EvalReport {
    std::vector<QueryResult> results;
    std::vector<QueryFailure> failures;
    int top_k = 10;

    SummaryStat perplexity_generated;
    SummaryStat perplexity_ground_truth;
    std::vector<SummaryStat> perplexity_by_rank;  // positions 1..top_k
    double mean_perplexity_recommended = 0.0;     // pooled over all positions

    // candidate = generated span, reference = ground truth
    std::array<RougeAggregate, 3> rouge_vs_ground_truth;  // ROUGE-1/2/L
    // candidate = recommendation, reference = generated span;
    // rank groups 1, 2-4, 5-10
    std::array<std::array<RougeAggregate, 3>, 3> rouge_vs_generated_by_group;

    static constexpr std::array<int, 4> kAccuracyKs = {1, 3, 5, 10};
    std::array<double, 4> top_k_exact{};
    std::array<double, 4> top_k_functionality{};
    double mrr_exact = 0.0;
    double mrr_functionality = 0.0;
};

/// Fraction of queries whose ground truth (or an equivalent under the
/// matcher) appears in the first k recommendations.
/// Throws EmptyResultSetError on an empty result list.
double top_k_accuracy(std::span<const QueryResult> results, int k, MatchCriterion matcher);

/// Mean reciprocal rank of the first match within the top 10.
double mrr(std::span<const QueryResult> results, MatchCriterion matcher);

/// A query window paired with its ground truth, the clone method that
/// actually starts at the <soc> the window contains.
struct EvalQuery {
    std::int64_t query_id = 0;
    QueryWindow window;
    TokenSequence ground_truth_tokens;
    std::int64_t ground_truth_record_id = -1;
    std::int64_t ground_truth_functionality = -1;
};

/// Slices a token stream into query windows and resolves each window's
/// ground truth method (first <soc> in the window through its <eoc>).
/// Windows whose method is cut off by the end of the stream are dropped.
/// Ground truth ids resolve through the corpus dedupe map when the method
/// is a corpus record.
std::vector<EvalQuery> build_eval_queries(const TokenSequence& stream, int window_len,
                                          const SearchCorpus& corpus);

struct PipelineConfig {
    GenerationConfig generation;
    int top_k = 10;
    /// Per-query seed = generation.rng_seed + query_id, so batches are
    /// reproducible without every query sharing one sample path.
    bool vary_seed_by_query = true;
};

/// Full loop per query: generate (or take a supplied generation), extract
/// the clone span, rank against the index, score ROUGE pairings and
/// perplexities, and aggregate. Per-query failures are recorded, never
/// fatal.
EvalReport evaluate_pipeline(const LanguageModel& model, const SearchCorpus& corpus,
                             const TfIdfIndex& index, std::span<const EvalQuery> queries,
                             const PipelineConfig& config);

/// Same pipeline, but generations come from a previously written
/// generations file (matched to queries by query_id) instead of the model.
/// The model is still used for perplexity scoring.
EvalReport evaluate_generations(const LanguageModel& model, const SearchCorpus& corpus,
                                const TfIdfIndex& index, std::span<const EvalQuery> queries,
                                std::span<const GenerationRecord> generations,
                                const PipelineConfig& config);

/// Recomputes every aggregate field of `report` from report.results.
void aggregate_report(EvalReport& report);

/// Machine-readable per-query rows, one JSON object per line.
void write_report_rows(const EvalReport& report, const std::filesystem::path& path);

/// Human-readable summary tables (ROUGE groups, perplexities, accuracies).
void write_report_summary(const EvalReport& report, std::ostream& out);

}  // namespace clonerec
