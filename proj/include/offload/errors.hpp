#pragma once

#include <stdexcept>
#include <string>

namespace offload {

// Source analysis failure. line/col are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line = 0, int col = 0)
        : std::runtime_error(format(msg, line, col)), line_(line), col_(col) {}

    int line() const noexcept { return line_; }
    int col() const noexcept { return col_; }

private:
    static std::string format(const std::string& msg, int line, int col) {
        if (line <= 0) return msg;
        return "line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg;
    }

    int line_;
    int col_;
};

// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Evaluator failure beyond the per-individual penalty policy.
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace offload
