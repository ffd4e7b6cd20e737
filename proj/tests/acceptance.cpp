// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each criterion is self-contained and pins its tolerances
// in the code below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"

#include "clonerec/corpus.hpp"
#include "clonerec/evaluate.hpp"
#include "clonerec/lm.hpp"
#include "clonerec/retrieval.hpp"
#include "clonerec/rouge.hpp"

using namespace clonerec;

namespace {

struct CriterionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool condition, const std::string& message) {
    if (!condition) throw CriterionFailure(message);
}

std::string fmt(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// fixtures

std::vector<TokenSequence> training_sequences(const SearchCorpus& corpus) {
    std::vector<TokenSequence> out;
    for (const auto& record : corpus.records()) out.push_back(record.tokens);
    return out;
}

std::vector<EvalQuery> method_start_queries(const SearchCorpus& corpus, std::size_t window_len) {
    std::vector<EvalQuery> queries;
    for (const auto& record : corpus.records()) {
        EvalQuery q;
        q.query_id = record.record_id;
        std::size_t len = std::min(window_len, record.tokens.size());
        q.window.tokens.assign(record.tokens.begin(),
                               record.tokens.begin() + static_cast<std::ptrdiff_t>(len));
        q.ground_truth_tokens = record.tokens;
        q.ground_truth_record_id = record.record_id;
        q.ground_truth_functionality = record.functionality_id;
        queries.push_back(std::move(q));
    }
    return queries;
}

// Every interior token globally unique and every method the same shape, so
// greedy continuations are unambiguous and method perplexities coincide.
SearchCorpus unique_token_corpus(int methods, int interior_len) {
    std::vector<std::vector<std::string>> bodies;
    for (int m = 0; m < methods; ++m) {
        std::vector<std::string> body;
        for (int t = 0; t < interior_len; ++t) {
            body.push_back("m" + std::to_string(m) + "q" + std::to_string(t));
        }
        bodies.push_back(std::move(body));
    }
    return testutil::make_corpus(bodies);
}

// 43 functionalities, `variants` implementations each. Every method opens
// with a functionality-shared prefix longer than the query window and ends
// with variant-specific tokens, so a sampler has to commit to a variant
// (or wander off) only after the window ends.
SearchCorpus functionality_corpus(int functionalities, int variants) {
    std::vector<std::vector<std::string>> bodies;
    std::vector<std::int64_t> labels;
    for (int f = 0; f < functionalities; ++f) {
        for (int v = 0; v < variants; ++v) {
            std::vector<std::string> body = {"fn" + std::to_string(f), "{"};
            for (int d = 0; d < 6; ++d) {
                body.push_back("s" + std::to_string(f) + "_" + std::to_string(d));
            }
            for (int d = 0; d < 4; ++d) {
                body.push_back("w" + std::to_string(f) + "_" + std::to_string(v) + "_" +
                               std::to_string(d));
            }
            body.push_back("}");
            bodies.push_back(std::move(body));
            labels.push_back(f);
        }
    }
    return testutil::make_corpus(bodies, labels);
}

// Fixed uniform distribution regardless of context.
class UniformModel : public LanguageModel {
public:
    explicit UniformModel(int extra_tokens) {
        for (int i = 0; i < extra_tokens; ++i) vocab_.intern("u" + std::to_string(i));
    }
    const Vocabulary& vocabulary() const override { return vocab_; }
    std::vector<double> next_distribution(std::span<const std::string>) const override {
        return std::vector<double>(static_cast<std::size_t>(vocab_.size()),
                                   1.0 / static_cast<double>(vocab_.size()));
    }

private:
    Vocabulary vocab_;
};

// Probability 1 on the true next token of a fixed target sequence.
class TeacherModel : public LanguageModel {
public:
    explicit TeacherModel(std::vector<std::string> target) : target_(std::move(target)) {
        for (const std::string& text : target_) vocab_.intern(text);
    }
    const Vocabulary& vocabulary() const override { return vocab_; }
    std::vector<double> next_distribution(std::span<const std::string> context) const override {
        std::vector<double> dist(static_cast<std::size_t>(vocab_.size()), 0.0);
        dist[static_cast<std::size_t>(vocab_.id_or_unk(target_.at(context.size())))] = 1.0;
        return dist;
    }

private:
    Vocabulary vocab_;
    std::vector<std::string> target_;
};

void check_report_orderings(const EvalReport& report) {
    const auto& results = report.results;
    expect(!results.empty(), "fixture produced no query results");
    for (MatchCriterion matcher : {MatchCriterion::Exact, MatchCriterion::Functionality}) {
        double top1 = top_k_accuracy(results, 1, matcher);
        double top10 = top_k_accuracy(results, 10, matcher);
        double rr = mrr(results, matcher);
        expect(top1 <= rr + 1e-12, "top-1 " + fmt(top1) + " exceeds MRR " + fmt(rr));
        expect(rr <= top10 + 1e-12, "MRR " + fmt(rr) + " exceeds top-10 " + fmt(top10));
        double previous = 0.0;
        for (int k = 1; k <= 10; ++k) {
            double acc = top_k_accuracy(results, k, matcher);
            expect(acc >= previous - 1e-12, "top-k accuracy decreased at k=" + std::to_string(k));
            previous = acc;
        }
    }
    for (int k : {1, 3, 5, 10}) {
        double exact = top_k_accuracy(results, k, MatchCriterion::Exact);
        double functionality = top_k_accuracy(results, k, MatchCriterion::Functionality);
        expect(exact >= 0.0 && functionality <= 1.0, "metric outside [0, 1]");
        expect(exact <= functionality + 1e-12,
               "exact top-" + std::to_string(k) + " " + fmt(exact) +
                   " exceeds functionality " + fmt(functionality));
    }
    expect(mrr(results, MatchCriterion::Exact) <=
               mrr(results, MatchCriterion::Functionality) + 1e-12,
           "exact MRR exceeds functionality MRR");
    expect(report.perplexity_generated.stddev >= 0.0 &&
               report.perplexity_ground_truth.stddev >= 0.0,
           "negative standard deviation");
}

// ---------------------------------------------------------------------------
// criteria

void criterion_tfidf_oracle_equivalence() {
    auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> qlen(1, 30);
    std::uniform_int_distribution<int> qtok(0, 32);  // a few ids beyond the corpus vocabulary
    for (int trial = 0; trial < 200; ++trial) {
        SearchCorpus corpus = testutil::random_corpus(rng, 100, 30, 40);
        TfIdfIndex index = TfIdfIndex::fit(corpus);
        oracle::DenseTfIdf dense = oracle::DenseTfIdf::fit(corpus);
        int k = static_cast<int>(corpus.size());
        for (int q = 0; q < 10; ++q) {
            std::vector<std::string> query;
            int len = qlen(rng);
            for (int t = 0; t < len; ++t) query.push_back("t" + std::to_string(qtok(rng)));
            auto expected = dense.rank(query, k);
            auto actual = index.rank(index.vectorize_query(testutil::tokens(query)), k);
            expect(actual.size() == expected.size(), "ranking lengths differ");
            for (std::size_t i = 0; i < actual.size(); ++i) {
                expect(actual[i].record_id == expected[i].first,
                       "ordering mismatch at trial " + std::to_string(trial) + " position " +
                           std::to_string(i));
            }
        }
    }
    double seconds = elapsed_seconds(start);
    expect(seconds < 10.0, "runtime " + fmt(seconds) + "s exceeds the 10s budget");
}

void criterion_term_annihilation() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> extra_len(0, 10);
    std::uniform_int_distribution<int> tok(0, 9);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<std::string>> bodies;
        std::vector<std::uint64_t> seen;
        std::uniform_int_distribution<int> doc_count(2, 20);
        int docs = doc_count(rng);
        while (static_cast<int>(bodies.size()) < docs) {
            std::vector<std::string> body = {"omni"};  // present in every document
            int len = extra_len(rng);
            for (int t = 0; t < len; ++t) body.push_back("t" + std::to_string(tok(rng)));
            auto key = token_fingerprint(mark_clone(testutil::tokens(body)));
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
            seen.push_back(key);
            bodies.push_back(std::move(body));
        }
        SearchCorpus corpus = testutil::make_corpus(bodies);
        TfIdfIndex index = TfIdfIndex::fit(corpus);
        for (const std::string& universal : {std::string("omni"), std::string("<soc>"),
                                             std::string("<eoc>")}) {
            expect(index.document_frequency(universal) == index.corpus_size(),
                   universal + " is not universal in the fixture");
        }
        for (const SparseVector& vec : index.document_vectors()) {
            for (const auto& [term, weight] : vec.entries) {
                const std::string& text = index.terms()[static_cast<std::size_t>(term)];
                expect(text != "omni" && text != "<soc>" && text != "<eoc>",
                       "universal term " + text + " kept weight " + fmt(weight));
            }
        }
    }
}

void criterion_self_retrieval() {
    std::vector<std::vector<std::string>> bodies;
    for (int d = 0; d < 50; ++d) {
        std::vector<std::string> body = {"self" + std::to_string(d)};
        body.push_back("shared" + std::to_string(d % 7));
        body.push_back("shared" + std::to_string((d + 3) % 7));
        if (d % 2 == 0) body.push_back("even");
        bodies.push_back(std::move(body));
    }
    SearchCorpus corpus = testutil::make_corpus(bodies);
    TfIdfIndex index = TfIdfIndex::fit(corpus);

    std::vector<QueryResult> results;
    for (const auto& record : corpus.records()) {
        SparseVector query = index.vectorize_query(record.tokens);
        expect(!query.empty(), "document " + std::to_string(record.record_id) + " has a zero vector");
        auto ranked = index.rank(query, 10);
        expect(ranked[0].record_id == record.record_id,
               "document " + std::to_string(record.record_id) + " not at rank 1");
        expect(std::abs(ranked[0].score - 1.0) <= 1e-9,
               "self-score " + fmt(ranked[0].score) + " differs from 1");

        QueryResult result;
        result.query_id = record.record_id;
        result.ground_truth_record_id = record.record_id;
        result.ground_truth_functionality = record.functionality_id;
        result.ground_truth_tokens = record.tokens;
        for (const auto& match : ranked) {
            RankedEntry entry;
            entry.record_id = match.record_id;
            entry.score = match.score;
            const auto* matched = corpus.find_by_id(match.record_id);
            entry.functionality_id = matched->functionality_id;
            entry.exact_match = matched->tokens == record.tokens;
            result.ranked.push_back(entry);
        }
        results.push_back(std::move(result));
    }
    expect(top_k_accuracy(results, 1, MatchCriterion::Exact) == 1.0, "exact top-1 is not 1.0");
    expect(mrr(results, MatchCriterion::Exact) == 1.0, "exact MRR is not 1.0");
}

void criterion_rouge_oracle_equivalence() {
    std::mt19937_64 rng(99);
    // Lengths stay within 0..40; the shorter member is capped at 12 tokens
    // so the exhaustive-subsequence oracle enumerates every one of its
    // subsequences.
    std::uniform_int_distribution<int> long_len(0, 40);
    std::uniform_int_distribution<int> short_len(0, 12);
    std::uniform_int_distribution<int> coin(0, 1);
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
    auto scores_close = [&](const RougeScore& a, const RougeScore& b) {
        return close(a.precision, b.precision) && close(a.recall, b.recall) &&
               close(a.f_measure, b.f_measure);
    };

    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::string> a = testutil::random_token_texts(rng, long_len(rng), 5, "g");
        std::vector<std::string> b = testutil::random_token_texts(rng, short_len(rng), 5, "g");
        if (coin(rng) == 1) std::swap(a, b);
        TokenSequence cand = testutil::tokens(a);
        TokenSequence ref = testutil::tokens(b);

        for (int n : {1, 2}) {
            RougeScore actual = rouge_n(cand, ref, n);
            RougeScore expected = oracle::rouge_n(a, b, n);
            expect(scores_close(actual, expected),
                   "rouge_" + std::to_string(n) + " mismatch at trial " + std::to_string(trial));

            RougeScore swapped = rouge_n(ref, cand, n);
            expect(close(actual.precision, swapped.recall) && close(actual.recall, swapped.precision),
                   "duality violated at trial " + std::to_string(trial));
        }

        RougeScore actual_l = rouge_l(cand, ref);
        std::size_t lcs = oracle::lcs_exhaustive(a, b);
        expect(scores_close(actual_l, oracle::rouge_l_from_lcs(lcs, a.size(), b.size())),
               "rouge_l mismatch at trial " + std::to_string(trial));

        RougeScore r1 = rouge_n(cand, ref, 1);
        expect(r1.precision >= actual_l.precision - 1e-12 && r1.recall >= actual_l.recall - 1e-12,
               "ROUGE-1 fell below ROUGE-L at trial " + std::to_string(trial));
    }
}

void criterion_perplexity_closed_forms() {
    UniformModel uniform(2);  // five meta tokens + two = 7
    expect(uniform.vocabulary().size() == 7, "uniform fixture vocabulary is not 7");
    for (const auto& texts : std::vector<std::vector<std::string>>{
             {"u0"}, {"u0", "u1", "u0"}, {"zz", "u1", "zz", "zz", "u0"}}) {
        double ppl = perplexity(uniform, testutil::tokens(texts));
        expect(std::abs(ppl - 7.0) <= 1e-9, "uniform perplexity " + fmt(ppl) + " is not 7");
    }

    std::vector<std::string> target = {"a", "b", "c", "a", "b"};
    TeacherModel teacher(target);
    double ppl_one = perplexity(teacher, testutil::tokens(target));
    expect(std::abs(ppl_one - 1.0) <= 1e-12, "oracle-probability perplexity is not 1");

    // stream "a b a c", order 2, evaluated on [a, b, <unseen>]:
    //   P(a | empty) = (2+1)/(4+8)
    //   P(b | a)     = (1/2) / (1 + 0.4 * (8/12))
    //   P(unk | b)   = (0.4 * 1/12) / (1 + 0.4 * (9/12))
    NGramModel model = NGramModel::train(
        {testutil::tokens({"a", "b", "a", "c"})}, 2);
    double p1 = 3.0 / 12.0;
    double p2 = 0.5 / (1.0 + 0.4 * (8.0 / 12.0));
    double p3 = (0.4 / 12.0) / (1.0 + 0.4 * (9.0 / 12.0));
    double expected = std::exp(-(std::log(p1) + std::log(p2) + std::log(p3)) / 3.0);
    double actual = perplexity(model, testutil::tokens({"a", "b", "x"}));
    expect(std::abs(actual - expected) <= 1e-9,
           "backoff perplexity " + fmt(actual) + " differs from " + fmt(expected));
}

void criterion_nucleus_sampling() {
    auto start = std::chrono::steady_clock::now();

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> size_dist(2, 50);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> dist(static_cast<std::size_t>(size_dist(rng)));
        double sum = 0.0;
        for (double& p : dist) {
            p = unit(rng) + 1e-9;
            sum += p;
        }
        for (double& p : dist) p /= sum;
        double threshold = 0.05 + 0.95 * unit(rng);
        expect(nucleus_set(dist, threshold) == oracle::nucleus_members(dist, threshold),
               "nucleus set mismatch at trial " + std::to_string(trial));
    }

    const std::vector<double> dist = {0.5, 0.3, 0.2};
    auto tv_against = [](const std::array<double, 3>& empirical,
                         const std::array<double, 3>& expected) {
        double tv = 0.0;
        for (std::size_t i = 0; i < 3; ++i) tv += std::abs(empirical[i] - expected[i]);
        return tv / 2.0;
    };
    const int draws = 100000;
    {
        std::mt19937_64 sampler_rng(20);
        std::array<double, 3> counts{};
        for (int i = 0; i < draws; ++i) {
            counts[static_cast<std::size_t>(nucleus_sample(dist, 0.7, sampler_rng))] += 1.0;
        }
        for (double& c : counts) c /= draws;
        double tv = tv_against(counts, {0.625, 0.375, 0.0});
        expect(tv < 0.01, "p=0.7 TV distance " + fmt(tv) + " >= 0.01");
    }
    {
        std::mt19937_64 sampler_rng(21);
        std::array<double, 3> counts{};
        for (int i = 0; i < draws; ++i) {
            counts[static_cast<std::size_t>(nucleus_sample(dist, 1.0, sampler_rng))] += 1.0;
        }
        for (double& c : counts) c /= draws;
        double tv = tv_against(counts, {0.5, 0.3, 0.2});
        expect(tv < 0.01, "p=1 TV distance " + fmt(tv) + " >= 0.01");
    }

    double seconds = elapsed_seconds(start);
    expect(seconds < 5.0, "runtime " + fmt(seconds) + "s exceeds the 5s budget");
}

void criterion_metric_order_relations() {
    // several randomized end-to-end runs, orderings checked on every report
    struct Fixture {
        SearchCorpus corpus;
        double threshold;
        int order;
        std::uint64_t seed;
    };
    std::vector<Fixture> fixtures;
    fixtures.push_back({functionality_corpus(11, 6), 0.9, 3, 3});
    std::mt19937_64 rng(15);
    fixtures.push_back({testutil::random_corpus(rng, 40, 12, 18), 0.95, 3, 9});
    fixtures.push_back({testutil::random_corpus(rng, 25, 8, 14), 0.85, 2, 41});

    for (std::size_t i = 0; i < fixtures.size(); ++i) {
        Fixture& fixture = fixtures[i];
        NGramModel model = NGramModel::train(training_sequences(fixture.corpus), fixture.order);
        TfIdfIndex index = TfIdfIndex::fit(fixture.corpus);
        std::vector<EvalQuery> queries = method_start_queries(fixture.corpus, 6);

        PipelineConfig config;
        config.generation.nucleus_threshold = fixture.threshold;
        config.generation.max_tokens = 60;
        config.generation.rng_seed = fixture.seed;
        EvalReport report = evaluate_pipeline(model, fixture.corpus, index, queries, config);
        expect(report.failures.empty(),
               "fixture " + std::to_string(i) + " had per-query failures");
        check_report_orderings(report);
    }
}

void criterion_greedy_determinism() {
    SearchCorpus corpus = unique_token_corpus(12, 14);
    NGramModel model = NGramModel::train(training_sequences(corpus), 3);
    TfIdfIndex index = TfIdfIndex::fit(corpus);
    std::vector<EvalQuery> queries = method_start_queries(corpus, 8);

    PipelineConfig config;
    config.generation.nucleus_threshold = 1e-9;
    config.generation.max_tokens = 40;
    EvalReport report = evaluate_pipeline(model, corpus, index, queries, config);

    expect(report.failures.empty(), "greedy fixture had per-query failures");
    expect(report.results.size() == corpus.size(), "missing query results");
    for (const QueryResult& result : report.results) {
        expect(result.generated_span == result.ground_truth_tokens,
               "query " + std::to_string(result.query_id) +
                   " did not reproduce its method verbatim");
        expect(!result.span_unterminated, "generated span lacks <eoc>");
        for (const RankedEntry& entry : result.ranked) {
            expect(entry.perplexity <= result.perplexity_generated + 1e-9,
                   "recommended perplexity " + fmt(entry.perplexity) +
                       " exceeds generated " + fmt(result.perplexity_generated));
        }
    }
    expect(top_k_accuracy(report.results, 1, MatchCriterion::Exact) == 1.0,
           "exact top-1 accuracy is not 1.0");
    expect(mrr(report.results, MatchCriterion::Exact) == 1.0, "exact MRR is not 1.0");
}

void criterion_noisy_generation_ordering() {
    SearchCorpus corpus = functionality_corpus(43, 12);
    expect(corpus.size() == 43 * 12, "fixture corpus is not 43 x 12");
    NGramModel model = NGramModel::train(training_sequences(corpus), 3);
    TfIdfIndex index = TfIdfIndex::fit(corpus);
    std::vector<EvalQuery> queries = method_start_queries(corpus, 8);

    PipelineConfig config;
    config.generation.nucleus_threshold = 0.95;
    config.generation.max_tokens = 60;
    config.generation.rng_seed = 20;
    EvalReport report = evaluate_pipeline(model, corpus, index, queries, config);

    expect(report.failures.empty(), "noisy fixture had per-query failures");
    double generated = report.perplexity_generated.mean;
    double recommended = report.mean_perplexity_recommended;
    expect(generated > recommended,
           "generated perplexity " + fmt(generated) + " does not exceed retrieved " +
               fmt(recommended));

    double exact10 = top_k_accuracy(report.results, 10, MatchCriterion::Exact);
    double functionality10 = top_k_accuracy(report.results, 10, MatchCriterion::Functionality);
    expect(functionality10 > exact10,
           "functionality top-10 " + fmt(functionality10) + " does not strictly exceed exact " +
               fmt(exact10));
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<void()> run;
    };
    const std::vector<Criterion> criteria = {
        {"tf-idf oracle equivalence (200 corpora, exact ordering, <10s)",
         criterion_tfidf_oracle_equivalence},
        {"term annihilation (DF = J weighs zero, 50 corpora)", criterion_term_annihilation},
        {"self-retrieval (50-doc fixture, rank 1 at score 1.0)", criterion_self_retrieval},
        {"rouge oracle equivalence (1000 pairs, 1e-12, duality, R1 >= RL)",
         criterion_rouge_oracle_equivalence},
        {"perplexity closed forms (uniform=V, oracle=1, hand backoff case)",
         criterion_perplexity_closed_forms},
        {"nucleus sampling correctness (set enumeration + TV bounds, <5s)",
         criterion_nucleus_sampling},
        {"metric order relations (top-1 <= MRR <= top-10, monotone, dominance)",
         criterion_metric_order_relations},
        {"end-to-end greedy determinism (verbatim methods, exact top-1 = 1)",
         criterion_greedy_determinism},
        {"noisy-generation ordering (43-functionality corpus at p = 0.95)",
         criterion_noisy_generation_ordering},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        try {
            criterion.run();
            std::cout << "PASS  " << criterion.name << '\n';
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "FAIL  " << criterion.name << " — " << e.what() << '\n';
        }
    }
    std::cout << "NOTE  absolute metric levels (MRR/top-k/perplexity/ROUGE means) depend on an "
                 "external fine-tuned generator and a production-size clone corpus; the "
                 "order-relation and oracle criteria above are the scale-independent checks\n";
    std::cout << (failures == 0 ? "acceptance: all criteria passed\n"
                                : "acceptance: " + std::to_string(failures) + " criteria failed\n");
    return failures == 0 ? 0 : 1;
}
