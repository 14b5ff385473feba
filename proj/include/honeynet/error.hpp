#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace honeynet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed text input. field() names the first offending field.
class ParseError : public Error {
public:
    ParseError(std::string field, const std::string& detail)
        : Error("parse error in field '" + field + "': " + detail), field_(std::move(field)) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// A structurally invalid configuration, topology, rule or script.
// offenders() lists the names that caused the failure.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what, std::vector<std::string> offenders = {})
        : Error(what), offenders_(std::move(offenders)) {}

    const std::vector<std::string>& offenders() const { return offenders_; }

private:
    std::vector<std::string> offenders_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Timestamp regression on a log that requires monotone time.
class OrderingError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class PermissionError : public Error {
public:
    using Error::Error;
};

}  // namespace honeynet
