#pragma once

#include <stdexcept>
#include <string>

namespace mag {

/// Caller violated a precondition (bad parameter, dimension mismatch, k > n, ...).
class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed on-disk data (fvecs/ivecs records, index headers).
class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw usage_error(what);
}

}  // namespace detail
}  // namespace mag
