#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace plad {

/// Base for every error raised by the library. The CLI maps subclasses onto
/// process exit codes (see tools/plad.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownToken : public Error {
public:
    explicit UnknownToken(std::string name)
        : Error("unknown token '" + name + "'"), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class GrammarViolation : public Error {
public:
    GrammarViolation(int position, std::vector<std::string> expected, const std::string& detail = {})
        : Error(make_message(position, expected, detail)),
          position_(position),
          expected_(std::move(expected)) {}

    int position() const noexcept { return position_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    static std::string make_message(int position, const std::vector<std::string>& expected,
                                    const std::string& detail) {
        std::string msg = "grammar violation at token " + std::to_string(position);
        if (!detail.empty()) {
            msg += " (" + detail + ")";
        }
        if (!expected.empty()) {
            msg += "; expected one of {";
            const std::size_t shown = expected.size() < 8 ? expected.size() : 8;
            for (std::size_t i = 0; i < shown; ++i) {
                msg += (i ? ", " : "") + expected[i];
            }
            if (shown < expected.size()) {
                msg += ", ... " + std::to_string(expected.size() - shown) + " more";
            }
            msg += "}";
        }
        return msg;
    }

    int position_;
    std::vector<std::string> expected_;
};

class SemanticViolation : public Error {
public:
    SemanticViolation(int position, const std::string& detail)
        : Error("semantic violation at token " + std::to_string(position) + ": " + detail),
          position_(position) {}
    int position() const noexcept { return position_; }

private:
    int position_;
};

class DimMismatch : public Error {
public:
    using Error::Error;
};

class InvalidProgram : public Error {
public:
    using Error::Error;
};

class GenerationExhausted : public Error {
public:
    using Error::Error;
};

class LengthExceeded : public Error {
public:
    using Error::Error;
};

class CorruptCheckpoint : public Error {
public:
    using Error::Error;
};

class VersionMismatch : public Error {
public:
    using Error::Error;
};

class MissingGenerativeModel : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss or parameters during training.
class NumericFailure : public Error {
public:
    using Error::Error;
};

/// A referenced dataset, checkpoint or program file does not exist.
class MissingInput : public IoError {
public:
    using IoError::IoError;
};

}  // namespace plad
