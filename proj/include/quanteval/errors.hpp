#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace quanteval {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input record; line numbers are 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Backend response violates the token-score contract.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// A response token straddles the context/continuation boundary.
class BoundaryError : public ProtocolError {
public:
    BoundaryError(std::size_t token_index, std::size_t token_start, std::size_t boundary)
        : ProtocolError("token " + std::to_string(token_index) + " starting at offset " +
                        std::to_string(token_start) + " straddles the continuation boundary at " +
                        std::to_string(boundary)),
          token_index_(token_index), token_start_(token_start) {}
    std::size_t token_index() const noexcept { return token_index_; }
    std::size_t token_start() const noexcept { return token_start_; }

private:
    std::size_t token_index_;
    std::size_t token_start_;
};

class TransportError : public Error {
public:
    TransportError(const std::string& what, int status, bool retryable)
        : Error(what), status_(status), retryable_(retryable) {}
    int status() const noexcept { return status_; }
    bool retryable() const noexcept { return retryable_; }

private:
    int status_;
    bool retryable_;
};

// Backend failure wrapped with the hash of the offending context.
class ScoringError : public Error {
public:
    ScoringError(const std::string& context_hash, const std::string& what)
        : Error("context " + context_hash + ": " + what), context_hash_(context_hash) {}
    const std::string& context_hash() const noexcept { return context_hash_; }

private:
    std::string context_hash_;
};

class UnknownContextError : public Error {
public:
    using Error::Error;
};

class CapabilityError : public Error {
public:
    using Error::Error;
};

class IncompleteDataError : public Error {
public:
    using Error::Error;
};

struct FailedItem {
    std::size_t index;
    std::string message;
};

class JobError : public Error {
public:
    explicit JobError(std::vector<FailedItem> failed)
        : Error(summarize(failed)), failed_(std::move(failed)) {}
    const std::vector<FailedItem>& failed() const noexcept { return failed_; }

private:
    static std::string summarize(const std::vector<FailedItem>& failed) {
        std::string msg = std::to_string(failed.size()) + " item(s) failed to score";
        if (!failed.empty()) {
            msg += "; first: item " + std::to_string(failed.front().index) + ": " +
                   failed.front().message;
        }
        return msg;
    }
    std::vector<FailedItem> failed_;
};

}  // namespace quanteval
