#include "clonerec/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <unordered_set>

namespace clonerec {

namespace {

const std::unordered_set<std::string_view>& keyword_set() {
    // Java 8 keywords plus the boolean/null literal words, which this
    // pipeline treats as keywords rather than replaceable constants.
    static const std::unordered_set<std::string_view> keywords = {
        "abstract", "assert",   "boolean",   "break",      "byte",     "case",      "catch",
        "char",     "class",    "const",     "continue",   "default",  "do",        "double",
        "else",     "enum",     "extends",   "final",      "finally",  "float",     "for",
        "goto",     "if",       "implements", "import",    "instanceof", "int",     "interface",
        "long",     "native",   "new",       "package",    "private",  "protected", "public",
        "return",   "short",    "static",    "strictfp",   "super",    "switch",    "synchronized",
        "this",     "throw",    "throws",    "transient",  "try",      "void",      "volatile",
        "while",    "true",     "false",     "null",
    };
    return keywords;
}

// Multi-character operators first within each length so maximal munch is a
// straight scan from longest to shortest.
constexpr std::array<std::string_view, 38> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "+=",   "-=",  "*=",  "/=",  "&=", "|=", "^=", "%=", "<<", ">>", "->", "=",
    ">",    "<",   "!",   "~",   "?",  ":",  "+",  "-",  "*",  "/",  "&",  "|",
    "^",    "%",
};

constexpr std::array<std::string_view, 12> kSeparators = {
    "...", "::", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@",
};

constexpr std::array<std::string_view, 5> kMetaTokens = {
    "<soc>", "<eoc>", "<num_val>", "<str_val>", "<unk>",
};

bool is_ident_start(unsigned char c) {
    return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}

bool is_ident_part(unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
}

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_hex_digit(unsigned char c) { return std::isxdigit(c); }

class Scanner {
public:
    Scanner(std::string_view source, const LexOptions& options) : src_(source), options_(options) {}

    TokenSequence run() {
        TokenSequence out;
        while (!at_end()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
                advance();
            } else if (c == '\n') {
                advance();
                ++line_;
            } else if (c == '/' && peek(1) == '/') {
                skip_line_comment();
            } else if (c == '/' && peek(1) == '*') {
                skip_block_comment();
            } else {
                out.push_back(next_token());
            }
        }
        return out;
    }

private:
    bool at_end() const { return pos_ >= src_.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }
    void advance(std::size_t n = 1) { pos_ += n; }
    std::string_view rest() const { return src_.substr(pos_); }

    void skip_line_comment() {
        while (!at_end() && peek() != '\n') advance();
    }

    void skip_block_comment() {
        std::size_t start = pos_;
        std::size_t start_line = line_;
        advance(2);
        while (!at_end()) {
            if (peek() == '*' && peek(1) == '/') {
                advance(2);
                return;
            }
            if (peek() == '\n') ++line_;
            advance();
        }
        throw LexError(LexError::Kind::UnterminatedComment, start, start_line,
                       "unterminated block comment");
    }

    Token next_token() {
        char c = peek();
        if (c == '<') {
            for (std::string_view m : kMetaTokens) {
                if (rest().starts_with(m)) {
                    advance(m.size());
                    return Token{TokenKind::Meta, std::string(m)};
                }
            }
        }
        if (is_ident_start(static_cast<unsigned char>(c))) return identifier();
        if (is_digit(static_cast<unsigned char>(c))) return number();
        if (c == '.' && is_digit(static_cast<unsigned char>(peek(1)))) return number();
        if (c == '"') return string_literal();
        if (c == '\'') return char_literal();

        for (std::string_view sep : kSeparators) {
            if (rest().starts_with(sep)) {
                advance(sep.size());
                return Token{TokenKind::Separator, std::string(sep)};
            }
        }
        for (std::string_view op : kOperators) {
            if (rest().starts_with(op)) {
                advance(op.size());
                return Token{TokenKind::Operator, std::string(op)};
            }
        }

        if (options_.lenient) {
            advance();
            return Token{TokenKind::Meta, std::string(meta::kUnknown)};
        }
        throw LexError(LexError::Kind::UnknownCharacter, pos_, line_,
                       std::string("unknown character '") + c + "'");
    }

    Token identifier() {
        std::size_t start = pos_;
        while (!at_end() && is_ident_part(static_cast<unsigned char>(peek()))) advance();
        std::string text(src_.substr(start, pos_ - start));
        TokenKind kind = keyword_set().contains(text) ? TokenKind::Keyword : TokenKind::Identifier;
        return Token{kind, std::move(text)};
    }

    // Java 8 numeric literals: decimal/octal ints, hex, binary, floats with
    // exponent, hex floats, underscores between digits, L/f/d suffixes.
    Token number() {
        std::size_t start = pos_;
        if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
            advance(2);
            while (is_hex_digit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
            bool is_float = false;
            if (peek() == '.') {
                is_float = true;
                advance();
                while (is_hex_digit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
            }
            if (peek() == 'p' || peek() == 'P') {
                is_float = true;
                advance();
                if (peek() == '+' || peek() == '-') advance();
                while (is_digit(static_cast<unsigned char>(peek()))) advance();
            }
            consume_suffix(is_float);
        } else if (peek() == '0' && (peek(1) == 'b' || peek(1) == 'B')) {
            advance(2);
            while (peek() == '0' || peek() == '1' || peek() == '_') advance();
            if (peek() == 'l' || peek() == 'L') advance();
        } else {
            bool is_float = false;
            while (is_digit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
            if (peek() == '.' && peek(1) != '.') {
                // Fraction part, maximal munch: "1.5", "5.", ".5" are all one
                // literal. A following ".." is left for the separator table.
                is_float = true;
                advance();
                while (is_digit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
            }
            if (peek() == 'e' || peek() == 'E') {
                char after = peek(1);
                if (is_digit(static_cast<unsigned char>(after)) ||
                    ((after == '+' || after == '-') && is_digit(static_cast<unsigned char>(peek(2))))) {
                    is_float = true;
                    advance();
                    if (peek() == '+' || peek() == '-') advance();
                    while (is_digit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
                }
            }
            consume_suffix(is_float);
        }
        return Token{TokenKind::NumericLiteral, std::string(src_.substr(start, pos_ - start))};
    }

    void consume_suffix(bool is_float) {
        char c = peek();
        if (c == 'l' || c == 'L') {
            if (!is_float) advance();
        } else if (c == 'f' || c == 'F' || c == 'd' || c == 'D') {
            advance();
        }
    }

    Token string_literal() {
        std::size_t start = pos_;
        std::size_t start_line = line_;
        advance();
        while (!at_end()) {
            char c = peek();
            if (c == '"') {
                advance();
                return Token{TokenKind::StringLiteral,
                             std::string(src_.substr(start, pos_ - start))};
            }
            if (c == '\n') break;
            if (c == '\\' && pos_ + 1 < src_.size()) {
                advance(2);
            } else {
                advance();
            }
        }
        throw LexError(LexError::Kind::UnterminatedString, start, start_line,
                       "unterminated string literal");
    }

    Token char_literal() {
        std::size_t start = pos_;
        std::size_t start_line = line_;
        advance();
        while (!at_end()) {
            char c = peek();
            if (c == '\'') {
                advance();
                return Token{TokenKind::CharLiteral, std::string(src_.substr(start, pos_ - start))};
            }
            if (c == '\n') break;
            if (c == '\\' && pos_ + 1 < src_.size()) {
                advance(2);
            } else {
                advance();
            }
        }
        throw LexError(LexError::Kind::UnterminatedString, start, start_line,
                       "unterminated char literal");
    }

    std::string_view src_;
    LexOptions options_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

bool looks_like_identifier(std::string_view text) {
    if (text.empty() || !is_ident_start(static_cast<unsigned char>(text.front()))) return false;
    return std::all_of(text.begin(), text.end(),
                       [](char c) { return is_ident_part(static_cast<unsigned char>(c)); });
}

}  // namespace

TokenSequence lex(std::string_view source, const LexOptions& options) {
    return Scanner(source, options).run();
}

TokenSequence normalize(const TokenSequence& tokens) {
    TokenSequence out;
    out.reserve(tokens.size());
    for (const Token& t : tokens) {
        switch (t.kind) {
            case TokenKind::NumericLiteral:
                out.push_back(Token{TokenKind::Meta, std::string(meta::kNumValue)});
                break;
            case TokenKind::StringLiteral:
            case TokenKind::CharLiteral:
                out.push_back(Token{TokenKind::Meta, std::string(meta::kStrValue)});
                break;
            default:
                out.push_back(t);
                break;
        }
    }
    return out;
}

TokenSequence mark_clone(const TokenSequence& tokens) {
    for (const Token& t : tokens) {
        if (t.text == meta::kStartOfClone || t.text == meta::kEndOfClone) {
            throw AlreadyMarkedError("sequence already contains a clone marker: " + t.text);
        }
    }
    TokenSequence out;
    out.reserve(tokens.size() + 2);
    out.push_back(Token{TokenKind::Meta, std::string(meta::kStartOfClone)});
    out.insert(out.end(), tokens.begin(), tokens.end());
    out.push_back(Token{TokenKind::Meta, std::string(meta::kEndOfClone)});
    return out;
}

TokenKind classify_token_text(std::string_view text) {
    if (text.empty()) throw Error("cannot classify an empty token text");
    if (is_meta_text(text)) return TokenKind::Meta;
    if (keyword_set().contains(text)) return TokenKind::Keyword;
    if (looks_like_identifier(text)) return TokenKind::Identifier;
    for (std::string_view sep : kSeparators) {
        if (text == sep) return TokenKind::Separator;
    }
    for (std::string_view op : kOperators) {
        if (text == op) return TokenKind::Operator;
    }
    // Literal lexemes can still appear in un-normalized streams; accept any
    // text the lexer would produce as a single token.
    TokenSequence lexed = lex(text);
    if (lexed.size() == 1 && lexed.front().text == text) return lexed.front().kind;
    throw Error("token text is not a single lexical token: '" + std::string(text) + "'");
}

}  // namespace clonerec
