#pragma once

#include <stdexcept>
#include <string>

namespace gaple {

// Layout / checkpoint / dataset text parsing failure, with 1-based position.
struct ParseError : std::runtime_error {
    int line;
    int column;
    ParseError(int line_, int column_, const std::string& msg)
        : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                             std::to_string(column_) + ": " + msg),
          line(line_),
          column(column_) {}
};

// Run-config failure; carries the offending key (may be empty) and line.
struct ConfigError : std::runtime_error {
    int line;
    std::string key;
    ConfigError(int line_, std::string key_, const std::string& msg)
        : std::runtime_error("config error at line " + std::to_string(line_) +
                             (key_.empty() ? "" : " (key '" + key_ + "')") + ": " + msg),
          line(line_),
          key(std::move(key_)) {}
};

struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TaskInfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gaple
