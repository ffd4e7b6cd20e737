#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clonerec {

/// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Lexical error with the byte offset and 1-based line it was detected at.
class LexError : public Error {
public:
    enum class Kind { UnterminatedString, UnterminatedComment, UnknownCharacter };

    LexError(Kind kind, std::size_t offset, std::size_t line, const std::string& message)
        : Error(message + " (line " + std::to_string(line) + ", byte " + std::to_string(offset) + ")"),
          kind_(kind),
          offset_(offset),
          line_(line) {}

    Kind kind() const { return kind_; }
    std::size_t offset() const { return offset_; }
    std::size_t line() const { return line_; }

private:
    Kind kind_;
    std::size_t offset_;
    std::size_t line_;
};

/// Malformed persistent file (corpus, model, generations, index snapshot).
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class AlreadyMarkedError : public Error {
public:
    using Error::Error;
};

class EmptyTrainingSetError : public Error {
public:
    using Error::Error;
};

class DegenerateDistributionError : public Error {
public:
    using Error::Error;
};

class MissingStartMarkerError : public Error {
public:
    using Error::Error;
};

class EmptyCorpusError : public Error {
public:
    using Error::Error;
};

class EmptyResultSetError : public Error {
public:
    using Error::Error;
};

}  // namespace clonerec
