#pragma once

#include <string_view>

#include "clonerec/errors.hpp"
#include "clonerec/token.hpp"

namespace clonerec {

struct LexOptions {
    /// When set, characters outside the lexical grammar become <unk> tokens
    /// instead of raising LexError::Kind::UnknownCharacter. Unterminated
    /// strings and comments always fail.
    bool lenient = false;
};

/// Lex Java-like source text into tokens.
///
/// Java 8 lexical structure: identifiers, keywords (plus true/false/null),
/// operators, separators, numeric/string/char literals. Whitespace and
/// comments (// and block) are discarded. The five meta tokens <soc>,
/// <eoc>, <num_val>, <str_val>, <unk> are recognized atomically so that
/// normalized corpus text re-lexes to itself. Literals are tagged with
/// their kind but not yet replaced.
///
/// Bytes >= 0x80 are treated as identifier characters; the lexer does not
/// decode Unicode escapes.
///
/// Throws LexError (UnterminatedString, UnterminatedComment,
/// UnknownCharacter) with the byte offset and line of the offense.
TokenSequence lex(std::string_view source, const LexOptions& options = {});

/// Replace every numeric literal with <num_val> and every string or char
/// literal with <str_val>. Other tokens pass through. Length-preserving
/// and idempotent.
TokenSequence normalize(const TokenSequence& tokens);

/// Wrap a normalized method body in <soc> ... <eoc>.
/// Throws AlreadyMarkedError if either marker is already present.
TokenSequence mark_clone(const TokenSequence& tokens);

}  // namespace clonerec
