#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace rpglab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a caller breaks a documented precondition.
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when a run cannot continue (non-finite numerics, bad files, ...).
class RuntimeAbort : public std::runtime_error {
public:
    explicit RuntimeAbort(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }

} // namespace rpglab
