#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cssm {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, rows of equal length

/// Resolvent denominator (or capacitance determinant) within 1e-12 of zero.
/// The fast filter paths fail loudly instead of regularizing.
struct SingularResolvent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Krylov matrix of an LTI realization is numerically rank deficient.
struct NotControllable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training loss or generated series exceeded the overflow guard.
struct Divergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace cssm
