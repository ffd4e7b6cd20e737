// clonerec: build a clone-method search corpus, train the reference n-gram
// model, generate clone predictions, retrieve similar real methods, and run
// the evaluation suite.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "clonerec/corpus.hpp"
#include "clonerec/evaluate.hpp"
#include "clonerec/lexer.hpp"
#include "clonerec/lm.hpp"
#include "clonerec/retrieval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 usage, 2 input/parse, 3 internal.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options a manifest file may supply; command-line values win.
class ManifestBinder {
public:
    explicit ManifestBinder(CLI::App* cmd) : cmd_(cmd) {
        cmd->add_option("--manifest", manifest_path_,
                        "JSON file supplying defaults for any option of this command");
    }

    template <typename T>
    CLI::Option* bind(const std::string& name, T& target, const std::string& description) {
        CLI::Option* opt = cmd_->add_option("--" + name, target, description);
        appliers_.push_back([opt, name, &target](const json& manifest) {
            if (opt->count() == 0 && manifest.contains(name)) {
                target = manifest.at(name).get<T>();
            }
        });
        return opt;
    }

    CLI::Option* bind_flag(const std::string& name, bool& target, const std::string& description) {
        CLI::Option* opt = cmd_->add_flag("--" + name, target, description);
        appliers_.push_back([opt, name, &target](const json& manifest) {
            if (opt->count() == 0 && manifest.contains(name)) {
                target = manifest.at(name).get<bool>();
            }
        });
        return opt;
    }

    void apply() const {
        if (manifest_path_.empty()) return;
        std::ifstream in(manifest_path_);
        if (!in) throw clonerec::Error("cannot open manifest: " + manifest_path_);
        json manifest = json::parse(in, nullptr, false);
        if (manifest.is_discarded() || !manifest.is_object()) {
            throw clonerec::ParseError(1, "manifest must be a JSON object");
        }
        for (const auto& apply_one : appliers_) apply_one(manifest);
    }

    const std::string& manifest_path() const { return manifest_path_; }

private:
    CLI::App* cmd_;
    std::string manifest_path_;
    std::vector<std::function<void(const json&)>> appliers_;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw UsageError(message);
}

std::string iso8601_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Token streams are plain text: lexed and normalized, so both raw Java-like
// source and already-normalized token text load identically.
clonerec::TokenSequence load_token_stream(const fs::path& path, bool lenient) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw clonerec::Error("cannot open token stream: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return clonerec::normalize(clonerec::lex(buf.str(), {.lenient = lenient}));
}

std::vector<clonerec::TokenSequence> corpus_sequences(const clonerec::SearchCorpus& corpus) {
    std::vector<clonerec::TokenSequence> sequences;
    sequences.reserve(corpus.size());
    for (const auto& record : corpus.records()) sequences.push_back(record.tokens);
    return sequences;
}

void print_ranking(std::ostream& out, const std::vector<clonerec::RankedMatch>& matches,
                   const clonerec::SearchCorpus* corpus) {
    out << "rank\trecord_id\tscore";
    if (corpus != nullptr) out << "\tfunctionality_id";
    out << '\n';
    for (std::size_t i = 0; i < matches.size(); ++i) {
        out << (i + 1) << '\t' << matches[i].record_id << '\t' << std::fixed
            << std::setprecision(6) << matches[i].score;
        if (corpus != nullptr) {
            const auto* record = corpus->find_by_id(matches[i].record_id);
            out << '\t' << (record != nullptr ? record->functionality_id : -1);
        }
        out << '\n';
    }
    out.unsetf(std::ios::fixed);
}

// ---------------------------------------------------------------------------
// build-corpus

struct BuildCorpusArgs {
    std::string references;
    std::string source_root;
    std::string out;
    std::string skipped;
    bool lenient = false;
};

int run_build_corpus(const BuildCorpusArgs& args) {
    require(!args.references.empty(), "--references is required");
    require(!args.source_root.empty(), "--source-root is required");
    require(!args.out.empty(), "--out is required");
    if (!fs::is_directory(args.source_root)) {
        throw clonerec::Error("source root is not a directory: " + args.source_root);
    }

    auto references = clonerec::load_reference_table(args.references);
    auto extracted = clonerec::extract(references, args.source_root);
    auto built = clonerec::build_corpus(extracted.methods, {.lenient = args.lenient});

    std::vector<clonerec::SkippedRecord> skipped = extracted.failures;
    skipped.insert(skipped.end(), built.skipped.begin(), built.skipped.end());
    std::string skipped_path = args.skipped.empty() ? args.out + ".skipped.tsv" : args.skipped;
    clonerec::save_skipped_report(skipped, skipped_path);

    clonerec::save_corpus(built.corpus, args.out);
    std::cout << "corpus records: " << built.corpus.size() << "  skipped: " << skipped.size()
              << '\n';
    if (!references.empty() && built.corpus.empty()) {
        std::cerr << "error: every record failed; see " << skipped_path << '\n';
        return 2;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// train-lm

struct TrainLmArgs {
    std::string corpus;
    std::string out;
    int order = 3;
};

int run_train_lm(const TrainLmArgs& args) {
    require(!args.corpus.empty(), "--corpus is required");
    require(!args.out.empty(), "--out is required");
    require(args.order >= 1, "--order must be >= 1");
    auto corpus = clonerec::load_corpus(args.corpus);
    if (corpus.empty()) throw clonerec::Error("corpus is empty: " + args.corpus);
    auto model = clonerec::NGramModel::train(corpus_sequences(corpus), args.order);
    model.save(args.out);
    std::cout << "model: order " << model.order() << ", vocabulary "
              << model.vocabulary().size() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string model;
    std::string stream;
    std::string out;
    int window_len = 20;
    double threshold = 0.95;
    int max_tokens = 200;
    std::uint64_t seed = 20;
    bool lenient = false;
};

int run_generate(const GenerateArgs& args) {
    require(!args.model.empty(), "--model is required");
    require(!args.stream.empty(), "--stream is required");
    require(!args.out.empty(), "--out is required");
    require(args.threshold > 0.0 && args.threshold <= 1.0, "--threshold must be in (0, 1]");
    require(args.window_len >= 1, "--window-len must be >= 1");
    require(args.max_tokens >= 1, "--max-tokens must be >= 1");

    auto model = clonerec::NGramModel::load(args.model);
    auto stream = load_token_stream(args.stream, args.lenient);
    auto windows = clonerec::extract_query_windows(stream, args.window_len);
    if (windows.empty()) {
        std::cerr << "warning: no windows containing " << clonerec::meta::kStartOfClone
                  << "; writing an empty generations file\n";
    }

    std::vector<clonerec::GenerationRecord> records;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        clonerec::GenerationConfig config;
        config.nucleus_threshold = args.threshold;
        config.max_tokens = args.max_tokens;
        config.rng_seed = args.seed + i;
        auto generation = clonerec::generate_clone(model, windows[i].tokens, config);
        records.push_back({static_cast<std::int64_t>(i), windows[i].tokens,
                           std::move(generation.tokens), generation.truncated});
    }
    clonerec::write_generations(records, args.out);
    std::cout << "generations: " << records.size() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// index

struct IndexArgs {
    std::string corpus;
    std::string out;
};

int run_index(const IndexArgs& args) {
    require(!args.corpus.empty(), "--corpus is required");
    require(!args.out.empty(), "--out is required");
    auto corpus = clonerec::load_corpus(args.corpus);
    auto index = clonerec::TfIdfIndex::fit(corpus);
    index.save(args.out);
    std::cout << "index: " << index.corpus_size() << " documents, " << index.term_count()
              << " terms\n";
    return 0;
}

// ---------------------------------------------------------------------------
// recommend

struct RecommendArgs {
    std::string corpus;
    std::string index;
    std::string tokens;
    std::string query_file;
    std::string generations;
    int k = 10;
    bool lenient = false;
};

int run_recommend(const RecommendArgs& args) {
    require(args.k >= 1, "--k must be >= 1");
    require(!args.corpus.empty() || !args.index.empty(), "--corpus or --index is required");
    int query_sources = (!args.tokens.empty() ? 1 : 0) + (!args.query_file.empty() ? 1 : 0) +
                        (!args.generations.empty() ? 1 : 0);
    require(query_sources == 1, "give exactly one of --tokens, --query-file, --generations");

    clonerec::SearchCorpus corpus;
    const clonerec::SearchCorpus* corpus_ptr = nullptr;
    clonerec::TfIdfIndex index = [&]() {
        if (!args.corpus.empty()) {
            corpus = clonerec::load_corpus(args.corpus);
            corpus_ptr = &corpus;
            return clonerec::TfIdfIndex::fit(corpus);
        }
        return clonerec::TfIdfIndex::load(args.index);
    }();

    auto rank_tokens = [&](const clonerec::TokenSequence& tokens) {
        return index.rank(index.vectorize_query(tokens), args.k);
    };

    if (!args.generations.empty()) {
        for (const auto& record : clonerec::ingest_generations(args.generations)) {
            clonerec::CloneSpan span = clonerec::extract_clone_span(record.generated);
            std::cout << "query " << record.query_id << (span.unterminated ? " (unterminated)" : "")
                      << '\n';
            print_ranking(std::cout, rank_tokens(span.tokens), corpus_ptr);
        }
        return 0;
    }

    std::string text;
    if (!args.tokens.empty()) {
        text = args.tokens;
    } else {
        std::ifstream in(args.query_file, std::ios::binary);
        if (!in) throw clonerec::Error("cannot open query file: " + args.query_file);
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    auto query = clonerec::normalize(clonerec::lex(text, {.lenient = args.lenient}));
    print_ranking(std::cout, rank_tokens(query), corpus_ptr);
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string corpus;
    std::string model;
    std::string stream;
    std::string generations;
    std::string out_dir;
    int order = 3;
    int window_len = 20;
    double threshold = 0.95;
    int max_tokens = 200;
    std::uint64_t seed = 20;
    int k = 10;
    bool lenient = false;
};

int run_evaluate(const EvaluateArgs& args, const std::string& manifest_path) {
    require(!args.corpus.empty(), "--corpus is required");
    require(!args.stream.empty(), "--stream is required");
    require(!args.out_dir.empty(), "--out-dir is required");
    require(args.threshold > 0.0 && args.threshold <= 1.0, "--threshold must be in (0, 1]");
    require(args.window_len >= 1, "--window-len must be >= 1");
    require(args.max_tokens >= 1, "--max-tokens must be >= 1");
    require(args.k >= 1, "--k must be >= 1");
    require(args.order >= 1, "--order must be >= 1");

    std::string started = iso8601_now();
    auto corpus = clonerec::load_corpus(args.corpus);
    if (corpus.empty()) throw clonerec::Error("corpus is empty: " + args.corpus);

    clonerec::NGramModel model = args.model.empty()
                                     ? clonerec::NGramModel::train(corpus_sequences(corpus), args.order)
                                     : clonerec::NGramModel::load(args.model);

    auto stream = load_token_stream(args.stream, args.lenient);
    auto queries = clonerec::build_eval_queries(stream, args.window_len, corpus);
    auto index = clonerec::TfIdfIndex::fit(corpus);

    clonerec::PipelineConfig config;
    config.generation.nucleus_threshold = args.threshold;
    config.generation.max_tokens = args.max_tokens;
    config.generation.rng_seed = args.seed;
    config.top_k = args.k;

    clonerec::EvalReport report;
    if (!args.generations.empty()) {
        auto generations = clonerec::ingest_generations(args.generations);
        report = clonerec::evaluate_generations(model, corpus, index, queries, generations, config);
    } else {
        report = clonerec::evaluate_pipeline(model, corpus, index, queries, config);
    }

    fs::create_directories(args.out_dir);
    clonerec::write_report_rows(report, fs::path(args.out_dir) / "rows.jsonl");
    {
        std::ofstream summary(fs::path(args.out_dir) / "summary.txt");
        clonerec::write_report_summary(report, summary);
    }
    {
        // Every consumed parameter, echoed for reproducibility.
        json manifest;
        manifest["command"] = "evaluate";
        manifest["corpus"] = args.corpus;
        manifest["model"] = args.model;
        manifest["stream"] = args.stream;
        manifest["generations"] = args.generations;
        manifest["out-dir"] = args.out_dir;
        manifest["order"] = args.order;
        manifest["window-len"] = args.window_len;
        manifest["threshold"] = args.threshold;
        manifest["max-tokens"] = args.max_tokens;
        manifest["seed"] = args.seed;
        manifest["k"] = args.k;
        manifest["lenient"] = args.lenient;
        manifest["manifest"] = manifest_path;
        manifest["queries"] = report.results.size();
        manifest["failures"] = report.failures.size();
        manifest["started_at"] = started;
        manifest["finished_at"] = iso8601_now();
        std::ofstream out(fs::path(args.out_dir) / "manifest.json");
        out << manifest.dump(2) << '\n';
    }
    clonerec::write_report_summary(report, std::cout);
    return 0;
}

// ---------------------------------------------------------------------------
// query (interactive)

struct QueryArgs {
    std::string corpus;
    std::string index;
    std::string model;
    int k = 10;
    double threshold = 0.95;
    int max_tokens = 200;
    std::uint64_t seed = 20;
};

int run_query(const QueryArgs& args) {
    require(!args.model.empty(), "--model is required");
    require(!args.corpus.empty() || !args.index.empty(), "--corpus or --index is required");
    require(args.threshold > 0.0 && args.threshold <= 1.0, "--threshold must be in (0, 1]");
    require(args.k >= 1, "--k must be >= 1");
    require(args.max_tokens >= 1, "--max-tokens must be >= 1");

    clonerec::SearchCorpus corpus;
    const clonerec::SearchCorpus* corpus_ptr = nullptr;
    clonerec::TfIdfIndex index = [&]() {
        if (!args.corpus.empty()) {
            corpus = clonerec::load_corpus(args.corpus);
            corpus_ptr = &corpus;
            return clonerec::TfIdfIndex::fit(corpus);
        }
        return clonerec::TfIdfIndex::load(args.index);
    }();
    auto model = clonerec::NGramModel::load(args.model);

    std::string line;
    std::uint64_t line_seed = args.seed;
    while (std::getline(std::cin, line)) {
        ++line_seed;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto context = clonerec::normalize(clonerec::lex(line));
            if (context.empty()) continue;
            clonerec::GenerationConfig config;
            config.nucleus_threshold = args.threshold;
            config.max_tokens = args.max_tokens;
            config.rng_seed = line_seed;
            auto generation = clonerec::generate_clone(model, context, config);
            auto span = clonerec::extract_clone_span(generation.tokens);
            std::cout << "generated: " << clonerec::join_tokens(span.tokens)
                      << (span.unterminated ? " (unterminated)" : "") << '\n';
            print_ranking(std::cout, index.rank(index.vectorize_query(span.tokens), args.k),
                          corpus_ptr);
        } catch (const clonerec::Error& e) {
            std::cout << "error: " << e.what() << '\n';
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clone method recommendation over a TF-IDF search corpus"};
    app.require_subcommand(1);

    auto* build_cmd = app.add_subcommand("build-corpus",
                                         "extract, normalize, mark and dedupe clone methods");
    BuildCorpusArgs build_args;
    ManifestBinder build_bind(build_cmd);
    build_bind.bind("references", build_args.references, "reference table (TSV with header)");
    build_bind.bind("source-root", build_args.source_root, "directory the file paths resolve under");
    build_bind.bind("out", build_args.out, "corpus file to write (JSON lines)");
    build_bind.bind("skipped", build_args.skipped, "skipped-records report (default <out>.skipped.tsv)");
    build_bind.bind_flag("lenient", build_args.lenient, "map unknown characters to <unk>");

    auto* train_cmd = app.add_subcommand("train-lm", "train the reference n-gram model");
    TrainLmArgs train_args;
    ManifestBinder train_bind(train_cmd);
    train_bind.bind("corpus", train_args.corpus, "corpus file");
    train_bind.bind("order", train_args.order, "n-gram order (default 3)");
    train_bind.bind("out", train_args.out, "model file to write");

    auto* generate_cmd = app.add_subcommand("generate",
                                            "predict clone methods for every <soc> window");
    GenerateArgs generate_args;
    ManifestBinder generate_bind(generate_cmd);
    generate_bind.bind("model", generate_args.model, "model file");
    generate_bind.bind("stream", generate_args.stream, "token stream to slice into query windows");
    generate_bind.bind("out", generate_args.out, "generations file to write (JSON lines)");
    generate_bind.bind("window-len", generate_args.window_len, "query window length (default 20)");
    generate_bind.bind("threshold", generate_args.threshold, "nucleus threshold (default 0.95)");
    generate_bind.bind("max-tokens", generate_args.max_tokens, "generation cap (default 200)");
    generate_bind.bind("seed", generate_args.seed, "rng seed (default 20)");
    generate_bind.bind_flag("lenient", generate_args.lenient, "map unknown characters to <unk>");

    auto* index_cmd = app.add_subcommand("index", "write a TF-IDF index snapshot");
    IndexArgs index_args;
    ManifestBinder index_bind(index_cmd);
    index_bind.bind("corpus", index_args.corpus, "corpus file");
    index_bind.bind("out", index_args.out, "index snapshot to write");

    auto* recommend_cmd = app.add_subcommand("recommend", "rank corpus methods against a query");
    RecommendArgs recommend_args;
    ManifestBinder recommend_bind(recommend_cmd);
    recommend_bind.bind("corpus", recommend_args.corpus, "corpus file (index is fit on the fly)");
    recommend_bind.bind("index", recommend_args.index, "index snapshot (alternative to --corpus)");
    recommend_bind.bind("tokens", recommend_args.tokens, "inline query text");
    recommend_bind.bind("query-file", recommend_args.query_file, "file with the query text");
    recommend_bind.bind("generations", recommend_args.generations,
                        "generations file; each clone span becomes a query");
    recommend_bind.bind("k", recommend_args.k, "list length (default 10)");
    recommend_bind.bind_flag("lenient", recommend_args.lenient, "map unknown characters to <unk>");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "run the full evaluation pipeline");
    EvaluateArgs evaluate_args;
    ManifestBinder evaluate_bind(evaluate_cmd);
    evaluate_bind.bind("corpus", evaluate_args.corpus, "corpus file");
    evaluate_bind.bind("model", evaluate_args.model, "model file (omit to train on the corpus)");
    evaluate_bind.bind("stream", evaluate_args.stream, "held-out token stream");
    evaluate_bind.bind("generations", evaluate_args.generations,
                       "evaluate these generations instead of sampling");
    evaluate_bind.bind("out-dir", evaluate_args.out_dir, "report directory");
    evaluate_bind.bind("order", evaluate_args.order, "n-gram order when training (default 3)");
    evaluate_bind.bind("window-len", evaluate_args.window_len, "query window length (default 20)");
    evaluate_bind.bind("threshold", evaluate_args.threshold, "nucleus threshold (default 0.95)");
    evaluate_bind.bind("max-tokens", evaluate_args.max_tokens, "generation cap (default 200)");
    evaluate_bind.bind("seed", evaluate_args.seed, "rng seed (default 20)");
    evaluate_bind.bind("k", evaluate_args.k, "recommendation list length (default 10)");
    evaluate_bind.bind_flag("lenient", evaluate_args.lenient, "map unknown characters to <unk>");

    auto* query_cmd = app.add_subcommand("query",
                                         "read contexts from stdin, generate and rank");
    QueryArgs query_args;
    ManifestBinder query_bind(query_cmd);
    query_bind.bind("corpus", query_args.corpus, "corpus file");
    query_bind.bind("index", query_args.index, "index snapshot (alternative to --corpus)");
    query_bind.bind("model", query_args.model, "model file");
    query_bind.bind("k", query_args.k, "list length (default 10)");
    query_bind.bind("threshold", query_args.threshold, "nucleus threshold (default 0.95)");
    query_bind.bind("max-tokens", query_args.max_tokens, "generation cap (default 200)");
    query_bind.bind("seed", query_args.seed, "rng seed (default 20)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (build_cmd->parsed()) {
            build_bind.apply();
            return run_build_corpus(build_args);
        }
        if (train_cmd->parsed()) {
            train_bind.apply();
            return run_train_lm(train_args);
        }
        if (generate_cmd->parsed()) {
            generate_bind.apply();
            return run_generate(generate_args);
        }
        if (index_cmd->parsed()) {
            index_bind.apply();
            return run_index(index_args);
        }
        if (recommend_cmd->parsed()) {
            recommend_bind.apply();
            return run_recommend(recommend_args);
        }
        if (evaluate_cmd->parsed()) {
            evaluate_bind.apply();
            return run_evaluate(evaluate_args, evaluate_bind.manifest_path());
        }
        if (query_cmd->parsed()) {
            query_bind.apply();
            return run_query(query_args);
        }
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const clonerec::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
