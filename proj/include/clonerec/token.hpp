#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clonerec {

/// Lexical category of a token. Literal kinds only exist between lex() and
/// normalize(); normalized sequences carry Meta tokens in their place.
enum class TokenKind {
    Identifier,
    Keyword,
    Operator,
    Separator,
    NumericLiteral,
    StringLiteral,
    CharLiteral,
    Meta,
};

/// One lexical unit. `text` is the surface string (raw lexeme for literals,
/// replacement token after normalization).
struct Token {
    TokenKind kind;
    std::string text;

    bool operator==(const Token&) const = default;
};

using TokenSequence = std::vector<Token>;

namespace meta {
inline constexpr std::string_view kStartOfClone = "<soc>";
inline constexpr std::string_view kEndOfClone = "<eoc>";
inline constexpr std::string_view kNumValue = "<num_val>";
inline constexpr std::string_view kStrValue = "<str_val>";
inline constexpr std::string_view kUnknown = "<unk>";
}  // namespace meta

/// True for one of the five recognized meta-token spellings.
bool is_meta_text(std::string_view text);

const char* token_kind_name(TokenKind kind);

/// Classify a single normalized token text into its kind. Used when reading
/// tokens back from persistent files, where only texts are stored. Throws
/// Error for text that no normalized token can carry.
TokenKind classify_token_text(std::string_view text);

Token make_token(std::string text);

/// Token texts joined with single spaces. Canonical textual form of a
/// normalized sequence; re-lexing it yields the same sequence.
std::string join_tokens(const TokenSequence& tokens);

std::vector<std::string> token_texts(const TokenSequence& tokens);

TokenSequence tokens_from_texts(const std::vector<std::string>& texts);

/// Order-sensitive 64-bit fingerprint of the token texts (FNV-1a over
/// length-prefixed texts). Two sequences collide only if their texts match
/// position for position, up to hash collision.
std::uint64_t token_fingerprint(const TokenSequence& tokens);

}  // namespace clonerec
