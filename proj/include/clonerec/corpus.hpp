#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clonerec/lexer.hpp"
#include "clonerec/token.hpp"

namespace clonerec {

/// Where a clone method lives in the source tree. Lines are 1-based and
/// inclusive on both ends.
struct CloneReference {
    std::int64_t record_id = 0;
    std::int64_t functionality_id = 0;
    std::string file_path;
    std::int64_t start_line = 0;
    std::int64_t end_line = 0;

    bool operator==(const CloneReference&) const = default;
};

/// A real clone method: provenance plus its marked, normalized tokens.
struct CloneMethodRecord {
    std::int64_t record_id = 0;
    std::int64_t functionality_id = 0;
    CloneReference source_ref;
    TokenSequence tokens;
    std::uint64_t dedupe_key = 0;

    bool operator==(const CloneMethodRecord&) const = default;
};

/// Deduplicated, record_id-ordered collection of clone methods.
class SearchCorpus {
public:
    const std::vector<CloneMethodRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const CloneMethodRecord* find_by_id(std::int64_t record_id) const;
    const CloneMethodRecord* find_by_dedupe_key(std::uint64_t key) const;

    /// Appends a record, enforcing ascending unique record_ids, unique
    /// dedupe keys, and the marked-sequence invariant. Throws Error on
    /// violation.
    void append(CloneMethodRecord record);

private:
    std::vector<CloneMethodRecord> records_;
    std::unordered_map<std::int64_t, std::size_t> by_id_;
    std::unordered_map<std::uint64_t, std::int64_t> by_key_;
};

struct ExtractedMethod {
    CloneReference ref;
    std::string text;
};

/// Per-record problem from extraction or corpus building. `error_kind` is a
/// stable identifier (FileNotFound, LineRangeOutOfBounds, LexError, ...).
struct SkippedRecord {
    std::int64_t record_id = 0;
    std::string error_kind;
    std::string message;
};

struct ExtractResult {
    std::vector<ExtractedMethod> methods;
    std::vector<SkippedRecord> failures;
};

struct BuildResult {
    SearchCorpus corpus;
    std::vector<SkippedRecord> skipped;
};

/// Reads each reference's line span from its file under source_root.
/// Failures never abort the batch; they land in the failure list.
ExtractResult extract(const std::vector<CloneReference>& references,
                      const std::filesystem::path& source_root);

/// Lex + normalize + mark each extracted method, collapse duplicates onto
/// the lowest record_id, and order by record_id. Records whose text does
/// not lex are skipped and reported.
BuildResult build_corpus(const std::vector<ExtractedMethod>& extracted,
                         const LexOptions& lex_options = {});

/// Reference table: tab-delimited, header row
/// `record_id\tfunctionality_id\tfile_path\tstart_line\tend_line`.
std::vector<CloneReference> load_reference_table(const std::filesystem::path& path);

/// Corpus file: one JSON object per line with fields record_id,
/// functionality_id, file_path, start_line, end_line, tokens.
void save_corpus(const SearchCorpus& corpus, const std::filesystem::path& path);
SearchCorpus load_corpus(const std::filesystem::path& path);

/// Skipped-records report: `record_id\terror_kind\tmessage` per line.
void save_skipped_report(const std::vector<SkippedRecord>& skipped,
                         const std::filesystem::path& path);

}  // namespace clonerec
