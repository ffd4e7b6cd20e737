#include "clonerec/token.hpp"

#include <array>

namespace clonerec {

bool is_meta_text(std::string_view text) {
    return text == meta::kStartOfClone || text == meta::kEndOfClone || text == meta::kNumValue ||
           text == meta::kStrValue || text == meta::kUnknown;
}

const char* token_kind_name(TokenKind kind) {
    switch (kind) {
        case TokenKind::Identifier: return "identifier";
        case TokenKind::Keyword: return "keyword";
        case TokenKind::Operator: return "operator";
        case TokenKind::Separator: return "separator";
        case TokenKind::NumericLiteral: return "numeric-literal";
        case TokenKind::StringLiteral: return "string-literal";
        case TokenKind::CharLiteral: return "char-literal";
        case TokenKind::Meta: return "meta";
    }
    return "unknown";
}

Token make_token(std::string text) {
    TokenKind kind = classify_token_text(text);
    return Token{kind, std::move(text)};
}

std::string join_tokens(const TokenSequence& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i != 0) out.push_back(' ');
        out += tokens[i].text;
    }
    return out;
}

std::vector<std::string> token_texts(const TokenSequence& tokens) {
    std::vector<std::string> texts;
    texts.reserve(tokens.size());
    for (const Token& t : tokens) texts.push_back(t.text);
    return texts;
}

TokenSequence tokens_from_texts(const std::vector<std::string>& texts) {
    TokenSequence tokens;
    tokens.reserve(texts.size());
    for (const std::string& text : texts) tokens.push_back(make_token(text));
    return tokens;
}

std::uint64_t token_fingerprint(const TokenSequence& tokens) {
    constexpr std::uint64_t kOffset = 1469598103934665603ULL;
    constexpr std::uint64_t kPrime = 1099511628211ULL;
    std::uint64_t hash = kOffset;
    auto mix = [&hash](unsigned char byte) {
        hash ^= byte;
        hash *= kPrime;
    };
    for (const Token& t : tokens) {
        std::uint64_t len = t.text.size();
        for (int shift = 0; shift < 64; shift += 8) mix(static_cast<unsigned char>(len >> shift));
        for (char c : t.text) mix(static_cast<unsigned char>(c));
    }
    return hash;
}

}  // namespace clonerec
