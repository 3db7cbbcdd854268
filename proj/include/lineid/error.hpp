#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lineid {

enum class ErrorKind {
    InvalidArgument,
    SingularMatrix,
    InsufficientExcitation,
    ExcessiveRejection,
    Parse,
    Io,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::SingularMatrix: return "singular_matrix";
        case ErrorKind::InsufficientExcitation: return "insufficient_excitation";
        case ErrorKind::ExcessiveRejection: return "excessive_rejection";
        case ErrorKind::Parse: return "parse_error";
        case ErrorKind::Io: return "io_error";
    }
    return "unknown";
}

/// Base exception for every failure raised by the library.
///
/// `sample_index` names the offending record when the failure can be pinned
/// to one; `condition` carries the condition estimate for singular solves.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message,
          std::optional<std::size_t> sample_index = std::nullopt,
          std::optional<double> condition = std::nullopt)
        : std::runtime_error(message), kind_(kind), sample_index_(sample_index), condition_(condition) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<std::size_t> sample_index() const noexcept { return sample_index_; }
    std::optional<double> condition() const noexcept { return condition_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> sample_index_;
    std::optional<double> condition_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message,
                              std::optional<std::size_t> sample_index = std::nullopt,
                              std::optional<double> condition = std::nullopt) {
    throw Error(kind, message, sample_index, condition);
}

} // namespace lineid
