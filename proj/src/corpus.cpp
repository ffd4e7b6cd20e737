#include "clonerec/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace clonerec {

namespace {

bool is_marked_sequence(const TokenSequence& tokens) {
    if (tokens.size() < 2) return false;
    if (tokens.front().text != meta::kStartOfClone) return false;
    if (tokens.back().text != meta::kEndOfClone) return false;
    auto soc = std::count_if(tokens.begin(), tokens.end(),
                             [](const Token& t) { return t.text == meta::kStartOfClone; });
    auto eoc = std::count_if(tokens.begin(), tokens.end(),
                             [](const Token& t) { return t.text == meta::kEndOfClone; });
    return soc == 1 && eoc == 1;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    // A trailing newline does not open a final empty line.
    if (!lines.empty() && lines.back().empty() && !text.empty() && text.back() == '\n') {
        lines.pop_back();
    }
    return lines;
}

std::int64_t parse_int_field(const std::string& field, std::size_t line_no, const char* name) {
    try {
        std::size_t consumed = 0;
        std::int64_t value = std::stoll(field, &consumed);
        if (consumed != field.size()) throw std::invalid_argument(field);
        return value;
    } catch (const std::exception&) {
        throw ParseError(line_no, std::string("invalid integer for ") + name + ": '" + field + "'");
    }
}

}  // namespace

const CloneMethodRecord* SearchCorpus::find_by_id(std::int64_t record_id) const {
    auto it = by_id_.find(record_id);
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

const CloneMethodRecord* SearchCorpus::find_by_dedupe_key(std::uint64_t key) const {
    auto it = by_key_.find(key);
    return it == by_key_.end() ? nullptr : find_by_id(it->second);
}

void SearchCorpus::append(CloneMethodRecord record) {
    if (!is_marked_sequence(record.tokens)) {
        throw Error("corpus record " + std::to_string(record.record_id) +
                    " is not a marked token sequence");
    }
    if (record.dedupe_key != token_fingerprint(record.tokens)) {
        throw Error("corpus record " + std::to_string(record.record_id) +
                    " carries a stale dedupe key");
    }
    if (!records_.empty() && records_.back().record_id >= record.record_id) {
        throw Error("corpus record_ids must be strictly ascending");
    }
    if (by_key_.contains(record.dedupe_key)) {
        throw Error("corpus records " + std::to_string(by_key_.at(record.dedupe_key)) + " and " +
                    std::to_string(record.record_id) + " share a dedupe key");
    }
    by_id_.emplace(record.record_id, records_.size());
    by_key_.emplace(record.dedupe_key, record.record_id);
    records_.push_back(std::move(record));
}

ExtractResult extract(const std::vector<CloneReference>& references,
                      const std::filesystem::path& source_root) {
    ExtractResult result;
    for (const CloneReference& ref : references) {
        std::filesystem::path full = source_root / std::filesystem::path(ref.file_path);
        std::error_code ec;
        auto canon_root = std::filesystem::weakly_canonical(source_root, ec);
        auto canon_full = std::filesystem::weakly_canonical(full, ec);
        auto relative = canon_full.lexically_relative(canon_root);
        if (!ec && (relative.empty() || relative.begin()->string() == "..")) {
            result.failures.push_back(
                {ref.record_id, "FileNotFound", ref.file_path + " escapes the source root"});
            continue;
        }
        std::ifstream in(full, std::ios::binary);
        if (!in) {
            result.failures.push_back(
                {ref.record_id, "FileNotFound", "cannot open " + full.string()});
            continue;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        std::vector<std::string> lines = split_lines(buf.str());
        if (ref.start_line < 1 || ref.end_line < ref.start_line ||
            ref.end_line > static_cast<std::int64_t>(lines.size())) {
            result.failures.push_back(
                {ref.record_id, "LineRangeOutOfBounds",
                 "lines " + std::to_string(ref.start_line) + ".." + std::to_string(ref.end_line) +
                     " outside " + full.string() + " (" + std::to_string(lines.size()) +
                     " lines)"});
            continue;
        }
        std::string text;
        for (std::int64_t i = ref.start_line; i <= ref.end_line; ++i) {
            if (i != ref.start_line) text.push_back('\n');
            text += lines[static_cast<std::size_t>(i - 1)];
        }
        result.methods.push_back({ref, std::move(text)});
    }
    return result;
}

BuildResult build_corpus(const std::vector<ExtractedMethod>& extracted,
                         const LexOptions& lex_options) {
    std::vector<const ExtractedMethod*> ordered;
    ordered.reserve(extracted.size());
    for (const ExtractedMethod& m : extracted) ordered.push_back(&m);
    std::sort(ordered.begin(), ordered.end(), [](const ExtractedMethod* a, const ExtractedMethod* b) {
        return a->ref.record_id < b->ref.record_id;
    });

    BuildResult result;
    std::int64_t previous_id = 0;
    bool first = true;
    for (const ExtractedMethod* m : ordered) {
        const CloneReference& ref = m->ref;
        if (!first && ref.record_id == previous_id) {
            result.skipped.push_back(
                {ref.record_id, "DuplicateRecordId", "record_id occurs more than once"});
            continue;
        }
        first = false;
        previous_id = ref.record_id;
        try {
            TokenSequence marked = mark_clone(normalize(lex(m->text, lex_options)));
            std::uint64_t key = token_fingerprint(marked);
            if (const CloneMethodRecord* existing = result.corpus.find_by_dedupe_key(key)) {
                result.skipped.push_back(
                    {ref.record_id, "Duplicate",
                     "identical to record " + std::to_string(existing->record_id)});
                continue;
            }
            result.corpus.append(CloneMethodRecord{ref.record_id, ref.functionality_id, ref,
                                                   std::move(marked), key});
        } catch (const LexError& e) {
            result.skipped.push_back({ref.record_id, "LexError", e.what()});
        } catch (const AlreadyMarkedError& e) {
            result.skipped.push_back({ref.record_id, "AlreadyMarked", e.what()});
        }
    }
    return result;
}

std::vector<CloneReference> load_reference_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open reference table: " + path.string());

    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++line_no;
        return true;
    };

    if (!next_line()) throw ParseError(1, "reference table is empty");
    if (line != "record_id\tfunctionality_id\tfile_path\tstart_line\tend_line") {
        throw ParseError(1, "bad reference table header: '" + line + "'");
    }

    std::vector<CloneReference> refs;
    std::unordered_map<std::int64_t, std::size_t> seen;
    while (next_line()) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (true) {
            std::size_t tab = line.find('\t', pos);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(pos));
                break;
            }
            fields.push_back(line.substr(pos, tab - pos));
            pos = tab + 1;
        }
        if (fields.size() != 5) {
            throw ParseError(line_no, "expected 5 tab-separated fields, found " +
                                          std::to_string(fields.size()));
        }
        CloneReference ref;
        ref.record_id = parse_int_field(fields[0], line_no, "record_id");
        ref.functionality_id = parse_int_field(fields[1], line_no, "functionality_id");
        ref.file_path = fields[2];
        ref.start_line = parse_int_field(fields[3], line_no, "start_line");
        ref.end_line = parse_int_field(fields[4], line_no, "end_line");
        if (ref.file_path.empty()) throw ParseError(line_no, "file_path is empty");
        if (ref.start_line > ref.end_line) {
            throw ParseError(line_no, "start_line exceeds end_line");
        }
        auto [it, inserted] = seen.emplace(ref.record_id, line_no);
        if (!inserted) {
            throw ParseError(line_no, "duplicate record_id " + std::to_string(ref.record_id) +
                                          " (first seen on line " + std::to_string(it->second) +
                                          ")");
        }
        refs.push_back(std::move(ref));
    }
    return refs;
}

void save_corpus(const SearchCorpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write corpus file: " + path.string());
    for (const CloneMethodRecord& r : corpus.records()) {
        nlohmann::json row;
        row["record_id"] = r.record_id;
        row["functionality_id"] = r.functionality_id;
        row["file_path"] = r.source_ref.file_path;
        row["start_line"] = r.source_ref.start_line;
        row["end_line"] = r.source_ref.end_line;
        row["tokens"] = token_texts(r.tokens);
        out << row.dump() << '\n';
    }
    if (!out) throw Error("failed writing corpus file: " + path.string());
}

SearchCorpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus file: " + path.string());
    SearchCorpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded()) throw ParseError(line_no, "malformed JSON record");
        try {
            CloneMethodRecord record;
            record.record_id = row.at("record_id").get<std::int64_t>();
            record.functionality_id = row.at("functionality_id").get<std::int64_t>();
            record.source_ref.record_id = record.record_id;
            record.source_ref.functionality_id = record.functionality_id;
            record.source_ref.file_path = row.at("file_path").get<std::string>();
            record.source_ref.start_line = row.at("start_line").get<std::int64_t>();
            record.source_ref.end_line = row.at("end_line").get<std::int64_t>();
            record.tokens = tokens_from_texts(row.at("tokens").get<std::vector<std::string>>());
            record.dedupe_key = token_fingerprint(record.tokens);
            corpus.append(std::move(record));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("bad corpus record: ") + e.what());
        } catch (const Error& e) {
            throw ParseError(line_no, std::string("bad corpus record: ") + e.what());
        }
    }
    return corpus;
}

void save_skipped_report(const std::vector<SkippedRecord>& skipped,
                         const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write skipped-records report: " + path.string());
    for (const SkippedRecord& s : skipped) {
        std::string message = s.message;
        std::replace(message.begin(), message.end(), '\t', ' ');
        std::replace(message.begin(), message.end(), '\n', ' ');
        out << s.record_id << '\t' << s.error_kind << '\t' << message << '\n';
    }
}

}  // namespace clonerec
