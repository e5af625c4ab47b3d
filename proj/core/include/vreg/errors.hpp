#pragma once

#include <stdexcept>
#include <string>

namespace vreg {

/// Bad numeric input or dimension mismatch in an operation.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Network topology is not a tree rooted at the slack bus.
class TopologyError : public std::runtime_error {
public:
    explicit TopologyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file; message carries the offending line number.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Scenario configuration problems; message enumerates every issue found.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vreg
