#include "clonerec/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace clonerec {

namespace {

std::string pack_ids(std::span<const std::int32_t> ids) {
    std::string key;
    key.resize(ids.size() * sizeof(std::int32_t));
    std::memcpy(key.data(), ids.data(), key.size());
    return key;
}

std::vector<std::int32_t> unpack_ids(const std::string& key) {
    std::vector<std::int32_t> ids(key.size() / sizeof(std::int32_t));
    std::memcpy(ids.data(), key.data(), key.size());
    return ids;
}

}  // namespace

Vocabulary::Vocabulary() {
    intern(std::string(meta::kStartOfClone));
    intern(std::string(meta::kEndOfClone));
    intern(std::string(meta::kNumValue));
    intern(std::string(meta::kStrValue));
    unk_id_ = intern(std::string(meta::kUnknown));
}

std::int32_t Vocabulary::intern(const std::string& text) {
    auto it = ids_.find(text);
    if (it != ids_.end()) return it->second;
    std::int32_t id = static_cast<std::int32_t>(texts_.size());
    texts_.push_back(text);
    ids_.emplace(text, id);
    return id;
}

std::optional<std::int32_t> Vocabulary::find(std::string_view text) const {
    auto it = ids_.find(std::string(text));
    return it == ids_.end() ? std::nullopt : std::make_optional(it->second);
}

std::int32_t Vocabulary::id_or_unk(std::string_view text) const {
    return find(text).value_or(unk_id_);
}

NGramModel NGramModel::train(const std::vector<TokenSequence>& sequences, int order) {
    if (order < 1) throw Error("n-gram order must be >= 1");
    if (sequences.empty()) throw EmptyTrainingSetError("no training sequences");

    NGramModel model;
    model.order_ = order;

    std::vector<std::int32_t> stream;
    for (const TokenSequence& seq : sequences) {
        for (const Token& t : seq) stream.push_back(model.vocab_.intern(t.text));
    }
    model.total_tokens_ = static_cast<std::int64_t>(stream.size());
    model.unigram_counts_.assign(static_cast<std::size_t>(model.vocab_.size()), 0);
    for (std::int32_t id : stream) ++model.unigram_counts_[static_cast<std::size_t>(id)];

    model.levels_.resize(static_cast<std::size_t>(std::max(0, order - 1)));
    for (int k = 2; k <= order; ++k) {
        auto& table = model.levels_[static_cast<std::size_t>(k - 2)];
        for (std::size_t i = 0; i + static_cast<std::size_t>(k) <= stream.size(); ++i) {
            ++table[pack_ids(std::span(stream).subspan(i, static_cast<std::size_t>(k)))];
        }
    }

    model.continuations_.resize(static_cast<std::size_t>(std::max(0, order - 1)));
    for (int k = 2; k <= order; ++k) {
        auto& table = model.continuations_[static_cast<std::size_t>(k - 2)];
        for (const auto& [key, count] : model.levels_[static_cast<std::size_t>(k - 2)]) {
            std::vector<std::int32_t> ids = unpack_ids(key);
            std::int32_t next = ids.back();
            ids.pop_back();
            table[pack_ids(ids)].emplace_back(next, count);
        }
        for (auto& [ctx, nexts] : table) std::sort(nexts.begin(), nexts.end());
    }
    return model;
}

std::int64_t NGramModel::gram_count(std::span<const std::string> gram) const {
    if (gram.empty() || static_cast<int>(gram.size()) > order_) return 0;
    std::vector<std::int32_t> ids;
    for (const std::string& text : gram) {
        auto id = vocab_.find(text);
        if (!id) return 0;
        ids.push_back(*id);
    }
    if (ids.size() == 1) return unigram_counts_[static_cast<std::size_t>(ids[0])];
    const auto& table = levels_[ids.size() - 2];
    auto it = table.find(pack_ids(ids));
    return it == table.end() ? 0 : it->second;
}

std::vector<double> NGramModel::distribution_for_ids(std::span<const std::int32_t> context) const {
    const std::size_t v = static_cast<std::size_t>(vocab_.size());
    const double denom = static_cast<double>(total_tokens_) + static_cast<double>(v);

    // Add-one unigram base, then sharpen one suffix level at a time:
    // observed continuations take count/context-count, everything else
    // keeps the backed-off score scaled by the backoff factor.
    std::vector<double> scores(v);
    for (std::size_t i = 0; i < v; ++i) {
        scores[i] = (static_cast<double>(unigram_counts_[i]) + 1.0) / denom;
    }
    for (std::size_t m = 1; m <= context.size(); ++m) {
        std::span<const std::int32_t> ctx = context.subspan(context.size() - m, m);
        std::int64_t ctx_count = 0;
        if (m == 1) {
            ctx_count = unigram_counts_[static_cast<std::size_t>(ctx[0])];
        } else {
            const auto& table = levels_[m - 2];
            auto it = table.find(pack_ids(ctx));
            ctx_count = it == table.end() ? 0 : it->second;
        }
        const auto& table = continuations_[m - 1];
        auto it = table.find(pack_ids(ctx));
        for (double& s : scores) s *= kBackoff;
        if (it != table.end() && ctx_count > 0) {
            for (const auto& [next, count] : it->second) {
                scores[static_cast<std::size_t>(next)] =
                    static_cast<double>(count) / static_cast<double>(ctx_count);
            }
        }
    }
    double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    for (double& s : scores) s /= total;
    return scores;
}

std::vector<double> NGramModel::next_distribution(std::span<const std::string> context) const {
    std::vector<std::int32_t> ids;
    std::size_t keep = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
    for (std::size_t i = context.size() - keep; i < context.size(); ++i) {
        ids.push_back(vocab_.id_or_unk(context[i]));
    }
    return distribution_for_ids(ids);
}

void NGramModel::save(const std::filesystem::path& path) const {
    nlohmann::json doc;
    doc["format"] = "clonerec-ngram";
    doc["version"] = 1;
    doc["order"] = order_;
    doc["backoff"] = kBackoff;
    doc["vocab"] = vocab_.texts();
    doc["unigram_counts"] = unigram_counts_;

    nlohmann::json levels = nlohmann::json::array();
    for (const auto& table : levels_) {
        std::vector<std::pair<std::vector<std::int32_t>, std::int64_t>> entries;
        entries.reserve(table.size());
        for (const auto& [key, count] : table) entries.emplace_back(unpack_ids(key), count);
        std::sort(entries.begin(), entries.end());
        nlohmann::json level = nlohmann::json::array();
        for (const auto& [ids, count] : entries) {
            level.push_back(nlohmann::json::array({ids, count}));
        }
        levels.push_back(std::move(level));
    }
    doc["levels"] = std::move(levels);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file: " + path.string());
    out << doc.dump() << '\n';
    if (!out) throw Error("failed writing model file: " + path.string());
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file: " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ParseError(1, "malformed model file");
    try {
        if (doc.at("format").get<std::string>() != "clonerec-ngram" ||
            doc.at("version").get<int>() != 1) {
            throw ParseError(1, "unsupported model format");
        }
        NGramModel model;
        model.order_ = doc.at("order").get<int>();
        if (model.order_ < 1) throw ParseError(1, "model order must be >= 1");
        auto vocab_texts = doc.at("vocab").get<std::vector<std::string>>();
        for (std::size_t i = 0; i < vocab_texts.size(); ++i) {
            std::int32_t id = model.vocab_.intern(vocab_texts[i]);
            if (id != static_cast<std::int32_t>(i)) {
                throw ParseError(1, "vocabulary is not in id order");
            }
        }
        model.unigram_counts_ = doc.at("unigram_counts").get<std::vector<std::int64_t>>();
        if (model.unigram_counts_.size() != vocab_texts.size()) {
            throw ParseError(1, "unigram count table does not match the vocabulary");
        }
        model.total_tokens_ =
            std::accumulate(model.unigram_counts_.begin(), model.unigram_counts_.end(),
                            std::int64_t{0});
        const auto& levels = doc.at("levels");
        if (static_cast<int>(levels.size()) != std::max(0, model.order_ - 1)) {
            throw ParseError(1, "level count does not match the model order");
        }
        model.levels_.resize(levels.size());
        model.continuations_.resize(levels.size());
        for (std::size_t k = 0; k < levels.size(); ++k) {
            for (const auto& entry : levels[k]) {
                auto ids = entry.at(0).get<std::vector<std::int32_t>>();
                auto count = entry.at(1).get<std::int64_t>();
                if (ids.size() != k + 2) throw ParseError(1, "gram length does not match level");
                for (std::int32_t id : ids) {
                    if (id < 0 || id >= model.vocab_.size()) {
                        throw ParseError(1, "gram references an out-of-range token id");
                    }
                }
                if (count < 0) throw ParseError(1, "negative gram count");
                model.levels_[k][pack_ids(ids)] = count;
                std::int32_t next = ids.back();
                ids.pop_back();
                model.continuations_[k][pack_ids(ids)].emplace_back(next, count);
            }
            for (auto& [ctx, nexts] : model.continuations_[k]) {
                std::sort(nexts.begin(), nexts.end());
            }
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(1, std::string("bad model file: ") + e.what());
    }
}

bool NGramModel::operator==(const NGramModel& other) const {
    return order_ == other.order_ && vocab_ == other.vocab_ &&
           unigram_counts_ == other.unigram_counts_ && levels_ == other.levels_;
}

double perplexity(const LanguageModel& model, const TokenSequence& tokens) {
    if (tokens.empty()) throw Error("perplexity of an empty sequence is undefined");
    std::vector<std::string> texts = token_texts(tokens);
    const Vocabulary& vocab = model.vocabulary();
    double log_sum = 0.0;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        std::vector<double> dist =
            model.next_distribution(std::span(texts).subspan(0, i));
        std::int32_t id = vocab.id_or_unk(texts[i]);
        log_sum += std::log(dist[static_cast<std::size_t>(id)]);
    }
    return std::exp(-log_sum / static_cast<double>(texts.size()));
}

std::vector<std::int32_t> nucleus_set(const std::vector<double>& dist, double threshold) {
    if (threshold <= 0.0 || threshold > 1.0) throw Error("nucleus threshold must be in (0, 1]");
    std::vector<std::int32_t> order(dist.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&dist](std::int32_t a, std::int32_t b) {
        double pa = dist[static_cast<std::size_t>(a)];
        double pb = dist[static_cast<std::size_t>(b)];
        if (pa != pb) return pa > pb;
        return a < b;
    });
    std::vector<std::int32_t> nucleus;
    double cumulative = 0.0;
    for (std::int32_t id : order) {
        double p = dist[static_cast<std::size_t>(id)];
        if (p <= 0.0) break;
        nucleus.push_back(id);
        cumulative += p;
        if (cumulative >= threshold) break;
    }
    if (nucleus.empty()) {
        throw DegenerateDistributionError("distribution is empty or carries no mass");
    }
    return nucleus;
}

std::int32_t nucleus_sample(const std::vector<double>& dist, double threshold,
                            std::mt19937_64& rng) {
    std::vector<std::int32_t> nucleus = nucleus_set(dist, threshold);
    double total = 0.0;
    for (std::int32_t id : nucleus) total += dist[static_cast<std::size_t>(id)];
    // Uniform in [0, 1) from the top 53 bits; sampling restricted to the
    // nucleus and renormalized by construction.
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double target = u * total;
    double cumulative = 0.0;
    for (std::int32_t id : nucleus) {
        cumulative += dist[static_cast<std::size_t>(id)];
        if (target < cumulative) return id;
    }
    return nucleus.back();
}

Generation generate_clone(const LanguageModel& model, const TokenSequence& context,
                          const GenerationConfig& config) {
    if (context.empty()) throw Error("generation context must be non-empty");
    if (config.nucleus_threshold <= 0.0 || config.nucleus_threshold > 1.0) {
        throw Error("nucleus threshold must be in (0, 1]");
    }
    if (config.max_tokens < 1) throw Error("max_tokens must be >= 1");

    std::mt19937_64 rng(config.rng_seed);
    Generation result;
    result.tokens = context;
    std::vector<std::string> texts = token_texts(context);
    const Vocabulary& vocab = model.vocabulary();

    for (int produced = 0; produced < config.max_tokens; ++produced) {
        std::vector<double> dist = model.next_distribution(texts);
        std::int32_t id = nucleus_sample(dist, config.nucleus_threshold, rng);
        const std::string& text = vocab.text(id);
        result.tokens.push_back(make_token(text));
        texts.push_back(text);
        if (text == config.stop_token) return result;
    }
    result.truncated = true;
    return result;
}

std::vector<QueryWindow> extract_query_windows(const TokenSequence& stream, int window_len) {
    if (window_len < 1) throw Error("window length must be >= 1");
    std::vector<QueryWindow> windows;
    std::size_t len = static_cast<std::size_t>(window_len);
    if (stream.size() < len) return windows;
    for (std::size_t offset = 0; offset + len <= stream.size(); ++offset) {
        bool has_soc = false;
        for (std::size_t i = offset; i < offset + len; ++i) {
            if (stream[i].text == meta::kStartOfClone) {
                has_soc = true;
                break;
            }
        }
        if (!has_soc) continue;
        windows.push_back({TokenSequence(stream.begin() + static_cast<std::ptrdiff_t>(offset),
                                         stream.begin() + static_cast<std::ptrdiff_t>(offset + len)),
                           offset});
    }
    return windows;
}

void write_generations(const std::vector<GenerationRecord>& records,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write generations file: " + path.string());
    for (const GenerationRecord& r : records) {
        nlohmann::json row;
        row["query_id"] = r.query_id;
        row["context"] = token_texts(r.context);
        row["generated"] = token_texts(r.generated);
        row["truncated"] = r.truncated;
        out << row.dump() << '\n';
    }
    if (!out) throw Error("failed writing generations file: " + path.string());
}

std::vector<GenerationRecord> ingest_generations(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open generations file: " + path.string());
    std::vector<GenerationRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded()) throw ParseError(line_no, "malformed JSON record");
        try {
            GenerationRecord record;
            record.query_id = row.at("query_id").get<std::int64_t>();
            record.context = tokens_from_texts(row.at("context").get<std::vector<std::string>>());
            record.generated =
                tokens_from_texts(row.at("generated").get<std::vector<std::string>>());
            record.truncated = row.at("truncated").get<bool>();
            records.push_back(std::move(record));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("bad generation record: ") + e.what());
        } catch (const Error& e) {
            throw ParseError(line_no, std::string("bad generation record: ") + e.what());
        }
    }
    return records;
}

}  // namespace clonerec
