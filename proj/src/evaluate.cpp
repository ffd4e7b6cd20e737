#include "clonerec/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace clonerec {

namespace {

bool entry_matches(const QueryResult& result, const RankedEntry& entry, MatchCriterion matcher) {
    if (matcher == MatchCriterion::Exact) return entry.exact_match;
    return result.ground_truth_functionality >= 0 &&
           entry.functionality_id == result.ground_truth_functionality;
}

std::size_t match_window(const QueryResult& result) {
    return std::min<std::size_t>(result.ranked.size(), 10);
}

}  // namespace

SummaryStat summarize(std::span<const double> values) {
    SummaryStat stat;
    stat.count = static_cast<std::int64_t>(values.size());
    if (values.empty()) return stat;
    double sum = 0.0;
    for (double v : values) sum += v;
    stat.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - stat.mean) * (v - stat.mean);
    stat.stddev = std::sqrt(sq / static_cast<double>(values.size()));
    return stat;
}

double top_k_accuracy(std::span<const QueryResult> results, int k, MatchCriterion matcher) {
    if (k < 1) throw Error("top-k accuracy requires k >= 1");
    if (results.empty()) throw EmptyResultSetError("no query results to score");
    std::int64_t hits = 0;
    for (const QueryResult& result : results) {
        std::size_t limit = std::min<std::size_t>(result.ranked.size(), static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < limit; ++i) {
            if (entry_matches(result, result.ranked[i], matcher)) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

double mrr(std::span<const QueryResult> results, MatchCriterion matcher) {
    if (results.empty()) throw EmptyResultSetError("no query results to score");
    double sum = 0.0;
    for (const QueryResult& result : results) {
        std::size_t limit = match_window(result);
        for (std::size_t i = 0; i < limit; ++i) {
            if (entry_matches(result, result.ranked[i], matcher)) {
                sum += 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
    }
    return sum / static_cast<double>(results.size());
}

std::vector<EvalQuery> build_eval_queries(const TokenSequence& stream, int window_len,
                                          const SearchCorpus& corpus) {
    std::vector<EvalQuery> queries;
    std::vector<QueryWindow> windows = extract_query_windows(stream, window_len);
    for (std::size_t ordinal = 0; ordinal < windows.size(); ++ordinal) {
        QueryWindow& window = windows[ordinal];
        std::size_t soc = window.offset;
        while (stream[soc].text != meta::kStartOfClone) ++soc;
        std::size_t eoc = soc;
        while (eoc < stream.size() && stream[eoc].text != meta::kEndOfClone) ++eoc;
        if (eoc == stream.size()) continue;  // method cut off by the stream end

        // query_id is the window's ordinal among all extracted windows, so
        // ids line up with generations files written over the same stream.
        EvalQuery query;
        query.query_id = static_cast<std::int64_t>(ordinal);
        query.ground_truth_tokens.assign(stream.begin() + static_cast<std::ptrdiff_t>(soc),
                                         stream.begin() + static_cast<std::ptrdiff_t>(eoc + 1));
        if (const CloneMethodRecord* record =
                corpus.find_by_dedupe_key(token_fingerprint(query.ground_truth_tokens))) {
            query.ground_truth_record_id = record->record_id;
            query.ground_truth_functionality = record->functionality_id;
        }
        query.window = std::move(window);
        queries.push_back(std::move(query));
    }
    return queries;
}

namespace {

QueryResult evaluate_one(const LanguageModel& model, const SearchCorpus& corpus,
                         const TfIdfIndex& index, const EvalQuery& query,
                         const Generation& generation, int top_k) {
    QueryResult result;
    result.query_id = query.query_id;
    result.context = query.window.tokens;
    result.generation_truncated = generation.truncated;
    result.ground_truth_record_id = query.ground_truth_record_id;
    result.ground_truth_functionality = query.ground_truth_functionality;
    result.ground_truth_tokens = query.ground_truth_tokens;

    CloneSpan span = extract_clone_span(generation.tokens);
    result.generated_span = std::move(span.tokens);
    result.span_unterminated = span.unterminated;

    SparseVector query_vec = index.vectorize_query(result.generated_span);
    std::vector<RankedMatch> matches = index.rank(query_vec, top_k);

    std::uint64_t truth_key = token_fingerprint(result.ground_truth_tokens);
    for (const RankedMatch& match : matches) {
        const CloneMethodRecord* record = corpus.find_by_id(match.record_id);
        RankedEntry entry;
        entry.record_id = match.record_id;
        entry.score = match.score;
        if (record != nullptr) {
            entry.functionality_id = record->functionality_id;
            entry.exact_match = record->dedupe_key == truth_key &&
                                record->tokens == result.ground_truth_tokens;
            entry.perplexity = perplexity(model, record->tokens);
            entry.rouge1_vs_generated = rouge_n(record->tokens, result.generated_span, 1);
            entry.rouge2_vs_generated = rouge_n(record->tokens, result.generated_span, 2);
            entry.rougel_vs_generated = rouge_l(record->tokens, result.generated_span);
        }
        result.ranked.push_back(std::move(entry));
    }

    result.rouge1_vs_ground_truth = rouge_n(result.generated_span, result.ground_truth_tokens, 1);
    result.rouge2_vs_ground_truth = rouge_n(result.generated_span, result.ground_truth_tokens, 2);
    result.rougel_vs_ground_truth = rouge_l(result.generated_span, result.ground_truth_tokens);
    result.perplexity_generated = perplexity(model, result.generated_span);
    result.perplexity_ground_truth = perplexity(model, result.ground_truth_tokens);
    return result;
}

EvalReport run_pipeline(const LanguageModel& model, const SearchCorpus& corpus,
                        const TfIdfIndex& index, std::span<const EvalQuery> queries,
                        const PipelineConfig& config,
                        const std::map<std::int64_t, const GenerationRecord*>* supplied) {
    EvalReport report;
    report.top_k = config.top_k;
    for (const EvalQuery& query : queries) {
        try {
            Generation generation;
            if (supplied != nullptr) {
                auto it = supplied->find(query.query_id);
                if (it == supplied->end()) {
                    throw Error("no generation record for query " + std::to_string(query.query_id));
                }
                generation.tokens = it->second->generated;
                generation.truncated = it->second->truncated;
            } else {
                GenerationConfig gen = config.generation;
                if (config.vary_seed_by_query) {
                    gen.rng_seed += static_cast<std::uint64_t>(query.query_id);
                }
                generation = generate_clone(model, query.window.tokens, gen);
            }
            report.results.push_back(
                evaluate_one(model, corpus, index, query, generation, config.top_k));
        } catch (const std::exception& e) {
            report.failures.push_back({query.query_id, e.what()});
        }
    }
    aggregate_report(report);
    return report;
}

}  // namespace

EvalReport evaluate_pipeline(const LanguageModel& model, const SearchCorpus& corpus,
                             const TfIdfIndex& index, std::span<const EvalQuery> queries,
                             const PipelineConfig& config) {
    return run_pipeline(model, corpus, index, queries, config, nullptr);
}

EvalReport evaluate_generations(const LanguageModel& model, const SearchCorpus& corpus,
                                const TfIdfIndex& index, std::span<const EvalQuery> queries,
                                std::span<const GenerationRecord> generations,
                                const PipelineConfig& config) {
    std::map<std::int64_t, const GenerationRecord*> by_id;
    for (const GenerationRecord& record : generations) by_id[record.query_id] = &record;
    return run_pipeline(model, corpus, index, queries, config, &by_id);
}

void aggregate_report(EvalReport& report) {
    const auto& results = report.results;
    const int top_k = report.top_k;

    std::vector<double> gen_ppl;
    std::vector<double> truth_ppl;
    std::vector<std::vector<double>> rank_ppl(static_cast<std::size_t>(top_k));
    std::vector<double> pooled_ppl;
    for (const QueryResult& r : results) {
        gen_ppl.push_back(r.perplexity_generated);
        truth_ppl.push_back(r.perplexity_ground_truth);
        for (std::size_t i = 0; i < r.ranked.size() && i < static_cast<std::size_t>(top_k); ++i) {
            rank_ppl[i].push_back(r.ranked[i].perplexity);
            pooled_ppl.push_back(r.ranked[i].perplexity);
        }
    }
    report.perplexity_generated = summarize(gen_ppl);
    report.perplexity_ground_truth = summarize(truth_ppl);
    report.perplexity_by_rank.clear();
    for (const auto& column : rank_ppl) report.perplexity_by_rank.push_back(summarize(column));
    report.mean_perplexity_recommended = summarize(pooled_ppl).mean;

    auto aggregate_rouge = [](const std::vector<RougeScore>& scores) {
        std::vector<double> p;
        std::vector<double> r;
        std::vector<double> f;
        for (const RougeScore& s : scores) {
            p.push_back(s.precision);
            r.push_back(s.recall);
            f.push_back(s.f_measure);
        }
        return RougeAggregate{summarize(p), summarize(r), summarize(f)};
    };

    {
        std::array<std::vector<RougeScore>, 3> vs_truth;
        for (const QueryResult& r : results) {
            vs_truth[0].push_back(r.rouge1_vs_ground_truth);
            vs_truth[1].push_back(r.rouge2_vs_ground_truth);
            vs_truth[2].push_back(r.rougel_vs_ground_truth);
        }
        for (std::size_t m = 0; m < 3; ++m) {
            report.rouge_vs_ground_truth[m] = aggregate_rouge(vs_truth[m]);
        }
    }
    {
        // rank groups: 1, 2-4, 5-10, pooled across queries
        std::array<std::array<std::vector<RougeScore>, 3>, 3> grouped;
        for (const QueryResult& r : results) {
            for (std::size_t i = 0; i < r.ranked.size(); ++i) {
                std::size_t group = i == 0 ? 0 : (i < 4 ? 1 : 2);
                grouped[group][0].push_back(r.ranked[i].rouge1_vs_generated);
                grouped[group][1].push_back(r.ranked[i].rouge2_vs_generated);
                grouped[group][2].push_back(r.ranked[i].rougel_vs_generated);
            }
        }
        for (std::size_t g = 0; g < 3; ++g) {
            for (std::size_t m = 0; m < 3; ++m) {
                report.rouge_vs_generated_by_group[g][m] = aggregate_rouge(grouped[g][m]);
            }
        }
    }

    if (!results.empty()) {
        for (std::size_t i = 0; i < EvalReport::kAccuracyKs.size(); ++i) {
            int k = EvalReport::kAccuracyKs[i];
            report.top_k_exact[i] = top_k_accuracy(results, k, MatchCriterion::Exact);
            report.top_k_functionality[i] = top_k_accuracy(results, k, MatchCriterion::Functionality);
        }
        report.mrr_exact = mrr(results, MatchCriterion::Exact);
        report.mrr_functionality = mrr(results, MatchCriterion::Functionality);
    } else {
        report.top_k_exact.fill(0.0);
        report.top_k_functionality.fill(0.0);
        report.mrr_exact = 0.0;
        report.mrr_functionality = 0.0;
    }
}

namespace {

nlohmann::json rouge_json(const RougeScore& score) {
    return nlohmann::json{{"p", score.precision}, {"r", score.recall}, {"f", score.f_measure}};
}

}  // namespace

void write_report_rows(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write report rows: " + path.string());
    for (const QueryResult& r : report.results) {
        nlohmann::json row;
        row["query_id"] = r.query_id;
        row["context"] = token_texts(r.context);
        row["generated_span"] = token_texts(r.generated_span);
        row["span_unterminated"] = r.span_unterminated;
        row["generation_truncated"] = r.generation_truncated;
        row["ground_truth_record_id"] = r.ground_truth_record_id;
        row["ground_truth_functionality"] = r.ground_truth_functionality;
        row["ground_truth_tokens"] = token_texts(r.ground_truth_tokens);
        row["perplexity_generated"] = r.perplexity_generated;
        row["perplexity_ground_truth"] = r.perplexity_ground_truth;
        row["rouge1_vs_ground_truth"] = rouge_json(r.rouge1_vs_ground_truth);
        row["rouge2_vs_ground_truth"] = rouge_json(r.rouge2_vs_ground_truth);
        row["rougel_vs_ground_truth"] = rouge_json(r.rougel_vs_ground_truth);
        nlohmann::json ranked = nlohmann::json::array();
        for (const RankedEntry& e : r.ranked) {
            ranked.push_back(nlohmann::json{{"record_id", e.record_id},
                                            {"score", e.score},
                                            {"functionality_id", e.functionality_id},
                                            {"exact_match", e.exact_match},
                                            {"perplexity", e.perplexity},
                                            {"rouge1_vs_generated", rouge_json(e.rouge1_vs_generated)},
                                            {"rouge2_vs_generated", rouge_json(e.rouge2_vs_generated)},
                                            {"rougel_vs_generated", rouge_json(e.rougel_vs_generated)}});
        }
        row["ranked"] = std::move(ranked);
        out << row.dump() << '\n';
    }
    for (const QueryFailure& f : report.failures) {
        nlohmann::json row;
        row["query_id"] = f.query_id;
        row["failure"] = f.message;
        out << row.dump() << '\n';
    }
    if (!out) throw Error("failed writing report rows: " + path.string());
}

namespace {

std::string mean_std(const SummaryStat& stat) {
    if (stat.count == 0) return "-";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(3) << stat.mean << " +/- " << stat.stddev;
    return ss.str();
}

void print_rouge_block(std::ostream& out, const std::string& title,
                       const std::array<RougeAggregate, 3>& block) {
    static const std::array<const char*, 3> metric_names = {"ROUGE-1", "ROUGE-2", "ROUGE-L"};
    out << title << '\n';
    for (std::size_t m = 0; m < 3; ++m) {
        out << "  " << std::left << std::setw(8) << metric_names[m] << std::right
            << "  P " << mean_std(block[m].precision) << "  R " << mean_std(block[m].recall)
            << "  F " << mean_std(block[m].f_measure) << '\n';
    }
}

}  // namespace

void write_report_summary(const EvalReport& report, std::ostream& out) {
    out << "queries: " << report.results.size() << "  failures: " << report.failures.size()
        << '\n';
    if (report.results.empty()) {
        out << "no successful queries; aggregates omitted\n";
        return;
    }
    out << '\n';
    print_rouge_block(out, "Generated vs ground truth", report.rouge_vs_ground_truth);
    out << '\n';
    static const std::array<const char*, 3> group_names = {"Top 1", "Top (2-4)", "Top (5-10)"};
    for (std::size_t g = 0; g < 3; ++g) {
        print_rouge_block(out, std::string(group_names[g]) + " vs generated",
                          report.rouge_vs_generated_by_group[g]);
    }
    out << '\n';
    out << "Perplexity\n";
    out << "  generated     " << mean_std(report.perplexity_generated) << '\n';
    out << "  ground truth  " << mean_std(report.perplexity_ground_truth) << '\n';
    for (std::size_t i = 0; i < report.perplexity_by_rank.size(); ++i) {
        out << "  rank " << std::left << std::setw(9) << (std::to_string(i + 1)) << std::right
            << mean_std(report.perplexity_by_rank[i]) << '\n';
    }
    out << '\n';
    out << "Accuracy            exact     functionality\n";
    out << std::fixed << std::setprecision(3);
    out << "  MRR               " << std::setw(5) << report.mrr_exact << "     " << std::setw(5)
        << report.mrr_functionality << '\n';
    for (std::size_t i = 0; i < EvalReport::kAccuracyKs.size(); ++i) {
        out << "  Top-" << std::left << std::setw(2) << EvalReport::kAccuracyKs[i] << std::right
            << "            " << std::setw(5) << report.top_k_exact[i] << "     " << std::setw(5)
            << report.top_k_functionality[i] << '\n';
    }
}

}  // namespace clonerec
