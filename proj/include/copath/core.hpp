#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace copath {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Tokens = std::vector<std::string>;

using EntityId = std::int32_t;
using RelationId = std::int32_t;

// Failure categories map onto CLI exit codes: input errors exit 1, numeric failures exit 2.
enum class ErrorKind { input, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void input_error(const std::string& what) { throw Error(ErrorKind::input, what); }
[[noreturn]] inline void numeric_error(const std::string& what) { throw Error(ErrorKind::numeric, what); }

inline std::string join(const Tokens& tokens, std::string_view sep = " ") {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += sep;
        out += tokens[i];
    }
    return out;
}

}  // namespace copath
