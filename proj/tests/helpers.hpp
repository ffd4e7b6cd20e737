#pragma once

// Shared fixture builders for the unit and acceptance suites.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "clonerec/corpus.hpp"
#include "clonerec/lexer.hpp"
#include "clonerec/token.hpp"

namespace testutil {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("clonerec-" + tag + "-" + std::to_string(counter_++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

    void write(const std::string& name, const std::string& content) const {
        std::filesystem::path target = path_ / name;
        std::filesystem::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary);
        out << content;
    }

private:
    inline static int counter_ = 0;
    std::filesystem::path path_;
};

inline clonerec::TokenSequence tokens(const std::vector<std::string>& texts) {
    return clonerec::tokens_from_texts(texts);
}

inline std::vector<std::string> texts(const clonerec::TokenSequence& tokens) {
    return clonerec::token_texts(tokens);
}

/// Corpus from unmarked method bodies; record ids 1..n unless given.
inline clonerec::SearchCorpus make_corpus(const std::vector<std::vector<std::string>>& bodies,
                                          const std::vector<std::int64_t>& functionality_ids = {}) {
    clonerec::SearchCorpus corpus;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        clonerec::CloneMethodRecord record;
        record.record_id = static_cast<std::int64_t>(i + 1);
        record.functionality_id =
            functionality_ids.empty() ? static_cast<std::int64_t>(i + 1) : functionality_ids[i];
        record.source_ref = {record.record_id, record.functionality_id,
                             "fixture/" + std::to_string(i + 1) + ".java", 1, 1};
        record.tokens = clonerec::mark_clone(tokens(bodies[i]));
        record.dedupe_key = clonerec::token_fingerprint(record.tokens);
        corpus.append(std::move(record));
    }
    return corpus;
}

/// Random corpus over a small vocabulary; bodies deduped so every record
/// survives the corpus invariants. Body lengths in [1, max_len].
inline clonerec::SearchCorpus random_corpus(std::mt19937_64& rng, int max_docs, int vocab_size,
                                            int max_len = 40) {
    std::uniform_int_distribution<int> doc_count(1, max_docs);
    std::uniform_int_distribution<int> len_dist(1, max_len);
    std::uniform_int_distribution<int> tok_dist(0, vocab_size - 1);

    int docs = doc_count(rng);
    std::vector<std::vector<std::string>> bodies;
    std::vector<std::uint64_t> seen;
    int attempts = 0;
    while (static_cast<int>(bodies.size()) < docs && attempts < docs * 50) {
        ++attempts;
        std::vector<std::string> body;
        int len = len_dist(rng);
        for (int t = 0; t < len; ++t) body.push_back("t" + std::to_string(tok_dist(rng)));
        auto marked = clonerec::mark_clone(tokens(body));
        std::uint64_t key = clonerec::token_fingerprint(marked);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        bodies.push_back(std::move(body));
    }
    return make_corpus(bodies);
}

inline std::vector<std::string> random_token_texts(std::mt19937_64& rng, int length,
                                                   int vocab_size, const std::string& prefix = "t") {
    std::uniform_int_distribution<int> tok_dist(0, vocab_size - 1);
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) out.push_back(prefix + std::to_string(tok_dist(rng)));
    return out;
}

}  // namespace testutil
