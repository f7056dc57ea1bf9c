#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roughflow {

enum class ErrorKind {
    dimension_mismatch,
    invalid_argument,
    off_grid,
    too_large,
    not_stochastic,
    not_centered,
    non_summable,
    numerical,
    config,
    io
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::dimension_mismatch: return "dimension_mismatch";
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::off_grid: return "off_grid";
        case ErrorKind::too_large: return "too_large";
        case ErrorKind::not_stochastic: return "not_stochastic";
        case ErrorKind::not_centered: return "not_centered";
        case ErrorKind::non_summable: return "non_summable";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

/** @brief Structured error carrying a machine-readable kind. */
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

}  // namespace roughflow
