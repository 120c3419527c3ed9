#pragma once

#include <stdexcept>
#include <string>

namespace qtpnet {

enum class ErrorKind {
    Config,          // bad parameters or flags
    Validation,      // malformed gate or argument combination
    Shape,           // dimension mismatch
    Capacity,        // input does not fit the register
    DegenerateInput, // zero vector, empty list, nothing left after OOV policy
    Precondition,    // operator applied to a state it is not defined on
    Data,            // unreadable or malformed input files
    Numeric,         // non-finite values during optimization
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Config: return "config error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Capacity: return "capacity error";
    case ErrorKind::DegenerateInput: return "degenerate input";
    case ErrorKind::Precondition: return "precondition error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Numeric: return "numeric error";
    }
    return "error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

} // namespace qtpnet
