#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace retina {

// Base of every error raised by the library. Callers that only need a
// diagnostic catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or unsupported image file.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// Malformed template file.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateSubjectError : public Error {
public:
    explicit DuplicateSubjectError(const std::string& subject)
        : Error("duplicate subject id '" + subject + "'"), subject_(subject) {}
    const std::string& subject() const noexcept { return subject_; }

private:
    std::string subject_;
};

class EmptyGalleryError : public Error {
public:
    EmptyGalleryError() : Error("gallery is empty") {}
};

}  // namespace retina
