#include "clonerec/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "clonerec/errors.hpp"

namespace clonerec {

namespace {

// Shortest exact decimal round-trip for doubles, stable across runs.
std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

// Term frequencies of a document in first-appearance order.
std::vector<std::pair<std::string, std::int64_t>> term_frequencies(const TokenSequence& tokens) {
    std::vector<std::pair<std::string, std::int64_t>> tf;
    std::unordered_map<std::string, std::size_t> where;
    for (const Token& t : tokens) {
        auto [it, inserted] = where.emplace(t.text, tf.size());
        if (inserted) {
            tf.emplace_back(t.text, 1);
        } else {
            ++tf[it->second].second;
        }
    }
    return tf;
}

}  // namespace

double SparseVector::norm() const {
    double sum = 0.0;
    for (const auto& [id, w] : entries) sum += w * w;
    return std::sqrt(sum);
}

void SparseVector::l2_normalize() {
    double n = norm();
    if (n > 0.0) {
        for (auto& [id, w] : entries) w /= n;
    } else {
        entries.clear();
    }
    normalized = true;
}

double SparseVector::dot(const SparseVector& other) const {
    double sum = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < entries.size() && j < other.entries.size()) {
        if (entries[i].first < other.entries[j].first) {
            ++i;
        } else if (entries[i].first > other.entries[j].first) {
            ++j;
        } else {
            sum += entries[i].second * other.entries[j].second;
            ++i;
            ++j;
        }
    }
    return sum;
}

TfIdfIndex TfIdfIndex::fit(const SearchCorpus& corpus) {
    if (corpus.empty()) throw EmptyCorpusError("cannot fit an index over an empty corpus");

    TfIdfIndex index;
    index.corpus_size_ = static_cast<std::int64_t>(corpus.size());

    std::vector<std::vector<std::pair<std::string, std::int64_t>>> doc_tfs;
    doc_tfs.reserve(corpus.size());
    for (const CloneMethodRecord& record : corpus.records()) {
        index.record_ids_.push_back(record.record_id);
        doc_tfs.push_back(term_frequencies(record.tokens));
        for (const auto& [text, tf] : doc_tfs.back()) {
            auto [it, inserted] = index.term_ids_.emplace(
                text, static_cast<std::int32_t>(index.terms_.size()));
            if (inserted) {
                index.terms_.push_back(text);
                index.df_.push_back(0);
            }
            ++index.df_[static_cast<std::size_t>(it->second)];
        }
    }

    const double j = static_cast<double>(index.corpus_size_);
    for (const auto& tf_list : doc_tfs) {
        SparseVector vec;
        for (const auto& [text, tf] : tf_list) {
            std::int32_t term = index.term_ids_.at(text);
            double idf = std::log(j / static_cast<double>(index.df_[static_cast<std::size_t>(term)]));
            double weight = (1.0 + std::log(static_cast<double>(tf))) * idf;
            if (weight > 0.0) vec.entries.emplace_back(term, weight);
        }
        std::sort(vec.entries.begin(), vec.entries.end());
        vec.l2_normalize();
        index.doc_vectors_.push_back(std::move(vec));
    }
    index.rebuild_postings();
    return index;
}

void TfIdfIndex::rebuild_postings() {
    postings_.assign(terms_.size(), {});
    for (std::size_t doc = 0; doc < doc_vectors_.size(); ++doc) {
        for (const auto& [term, weight] : doc_vectors_[doc].entries) {
            postings_[static_cast<std::size_t>(term)].emplace_back(
                static_cast<std::int32_t>(doc), weight);
        }
    }
}

SparseVector TfIdfIndex::vectorize_query(const TokenSequence& tokens) const {
    SparseVector vec;
    const double j = static_cast<double>(corpus_size_);
    for (const auto& [text, tf] : term_frequencies(tokens)) {
        auto it = term_ids_.find(text);
        if (it == term_ids_.end()) continue;
        double idf = std::log(j / static_cast<double>(df_[static_cast<std::size_t>(it->second)]));
        double weight = (1.0 + std::log(static_cast<double>(tf))) * idf;
        if (weight > 0.0) vec.entries.emplace_back(it->second, weight);
    }
    std::sort(vec.entries.begin(), vec.entries.end());
    vec.l2_normalize();
    return vec;
}

std::vector<RankedMatch> TfIdfIndex::rank(const SparseVector& query, int k) const {
    if (k < 1) throw Error("rank requires k >= 1");
    std::vector<double> scores(doc_vectors_.size(), 0.0);
    // Query entries ascend by term id, so every document accumulates its
    // products in the same order a dense dot product over the term
    // dictionary would use.
    for (const auto& [term, qw] : query.entries) {
        for (const auto& [doc, dw] : postings_[static_cast<std::size_t>(term)]) {
            scores[static_cast<std::size_t>(doc)] += qw * dw;
        }
    }
    std::vector<std::int32_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int32_t>(i);
    std::sort(order.begin(), order.end(), [&scores](std::int32_t a, std::int32_t b) {
        double sa = scores[static_cast<std::size_t>(a)];
        double sb = scores[static_cast<std::size_t>(b)];
        if (sa != sb) return sa > sb;
        return a < b;  // document order is record_id order
    });
    std::size_t take = std::min(static_cast<std::size_t>(k), order.size());
    std::vector<RankedMatch> result;
    result.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        std::int32_t doc = order[i];
        result.push_back({record_ids_[static_cast<std::size_t>(doc)],
                          scores[static_cast<std::size_t>(doc)]});
    }
    return result;
}

std::int64_t TfIdfIndex::document_frequency(std::string_view term) const {
    auto it = term_ids_.find(std::string(term));
    return it == term_ids_.end() ? 0 : df_[static_cast<std::size_t>(it->second)];
}

void TfIdfIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write index snapshot: " + path.string());
    out << "clonerec-tfidf-index v1\n";
    out << "documents " << corpus_size_ << '\n';
    out << "terms " << terms_.size() << '\n';
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        out << "term " << i << ' ' << df_[i] << ' ' << terms_[i] << '\n';
    }
    for (std::size_t d = 0; d < doc_vectors_.size(); ++d) {
        out << "doc " << record_ids_[d] << ' ' << doc_vectors_[d].entries.size();
        for (const auto& [term, weight] : doc_vectors_[d].entries) {
            out << ' ' << term << ' ' << format_double(weight);
        }
        out << '\n';
    }
    if (!out) throw Error("failed writing index snapshot: " + path.string());
}

TfIdfIndex TfIdfIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open index snapshot: " + path.string());

    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        return true;
    };

    if (!next_line() || line != "clonerec-tfidf-index v1") {
        throw ParseError(1, "not a clonerec index snapshot");
    }
    TfIdfIndex index;
    std::size_t term_count = 0;
    {
        if (!next_line()) throw ParseError(line_no + 1, "missing document count");
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag >> index.corpus_size_) || tag != "documents" || index.corpus_size_ < 1) {
            throw ParseError(line_no, "bad document count line");
        }
        if (!next_line()) throw ParseError(line_no + 1, "missing term count");
        std::istringstream ts(line);
        if (!(ts >> tag >> term_count) || tag != "terms") {
            throw ParseError(line_no, "bad term count line");
        }
    }
    for (std::size_t i = 0; i < term_count; ++i) {
        if (!next_line()) throw ParseError(line_no + 1, "truncated term table");
        std::istringstream ss(line);
        std::string tag;
        std::size_t id = 0;
        std::int64_t df = 0;
        std::string text;
        if (!(ss >> tag >> id >> df >> text) || tag != "term" || id != i) {
            throw ParseError(line_no, "bad term line");
        }
        if (df < 1 || df > index.corpus_size_) {
            throw ParseError(line_no, "document frequency outside [1, J]");
        }
        index.terms_.push_back(text);
        index.term_ids_.emplace(text, static_cast<std::int32_t>(i));
        index.df_.push_back(df);
    }
    while (next_line()) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tag;
        std::int64_t record_id = 0;
        std::size_t nnz = 0;
        if (!(ss >> tag >> record_id >> nnz) || tag != "doc") {
            throw ParseError(line_no, "bad document line");
        }
        SparseVector vec;
        std::int32_t previous = -1;
        for (std::size_t i = 0; i < nnz; ++i) {
            std::int32_t term = 0;
            double weight = 0.0;
            if (!(ss >> term >> weight)) throw ParseError(line_no, "truncated document vector");
            if (term <= previous || term >= static_cast<std::int32_t>(term_count)) {
                throw ParseError(line_no, "document vector term ids must ascend in range");
            }
            if (weight <= 0.0) throw ParseError(line_no, "document vector weights must be > 0");
            previous = term;
            vec.entries.emplace_back(term, weight);
        }
        vec.normalized = true;
        if (!vec.entries.empty() && std::abs(vec.norm() - 1.0) > 1e-6) {
            throw ParseError(line_no, "document vector is not L2-normalized");
        }
        if (!index.record_ids_.empty() && index.record_ids_.back() >= record_id) {
            throw ParseError(line_no, "document record_ids must ascend");
        }
        index.record_ids_.push_back(record_id);
        index.doc_vectors_.push_back(std::move(vec));
    }
    if (static_cast<std::int64_t>(index.record_ids_.size()) != index.corpus_size_) {
        throw ParseError(line_no, "document count does not match header");
    }
    index.rebuild_postings();
    return index;
}

bool TfIdfIndex::operator==(const TfIdfIndex& other) const {
    if (terms_ != other.terms_ || df_ != other.df_ || corpus_size_ != other.corpus_size_ ||
        record_ids_ != other.record_ids_ || doc_vectors_.size() != other.doc_vectors_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < doc_vectors_.size(); ++i) {
        if (doc_vectors_[i].entries != other.doc_vectors_[i].entries) return false;
    }
    return true;
}

CloneSpan extract_clone_span(const TokenSequence& generated) {
    auto soc = std::find_if(generated.begin(), generated.end(), [](const Token& t) {
        return t.text == meta::kStartOfClone;
    });
    if (soc == generated.end()) {
        throw MissingStartMarkerError("no <soc> marker in the generated sequence");
    }
    auto eoc = std::find_if(soc, generated.end(),
                            [](const Token& t) { return t.text == meta::kEndOfClone; });
    CloneSpan span;
    if (eoc == generated.end()) {
        span.tokens.assign(soc, generated.end());
        span.unterminated = true;
    } else {
        span.tokens.assign(soc, eoc + 1);
    }
    return span;
}

}  // namespace clonerec
