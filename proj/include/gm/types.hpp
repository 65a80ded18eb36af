#ifndef GM_TYPES_HPP
#define GM_TYPES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace gm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using NodeId = int;
using ArcId = int;
using PlateId = int;

constexpr NodeId kNoNode = -1;

// Raised when a model is structurally unusable for the requested operation.
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when arithmetic leaves the representable range (non-finite
// intermediates, indefinite matrices, all-zero masses).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Domain {
  enum class Kind {
    Discrete,      // finite values 0..size-1
    Real,
    PositiveReal,
    UnitInterval,  // probabilities in (0,1)
    RealVector,    // size = dimension
    Simplex,       // size = number of categories
    PsdMatrix,     // size = dimension of a symmetric positive definite matrix
  };
  Kind kind = Kind::Real;
  int size = 1;

  bool operator==(const Domain&) const = default;
};

inline Domain discrete_domain(int arity) { return {Domain::Kind::Discrete, arity}; }
inline Domain real_domain() { return {Domain::Kind::Real, 1}; }
inline Domain positive_domain() { return {Domain::Kind::PositiveReal, 1}; }
inline Domain unit_domain() { return {Domain::Kind::UnitInterval, 1}; }
inline Domain vector_domain(int d) { return {Domain::Kind::RealVector, d}; }
inline Domain simplex_domain(int k) { return {Domain::Kind::Simplex, k}; }
inline Domain psd_domain(int d) { return {Domain::Kind::PsdMatrix, d}; }

// Value of one variable: discrete index, scalar, vector, or matrix.
using Value = std::variant<int, double, VectorXd, MatrixXd>;

inline double as_scalar(const Value& v) {
  if (std::holds_alternative<int>(v)) return static_cast<double>(std::get<int>(v));
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  throw ModelError("expected a scalar value");
}

inline int as_index(const Value& v) {
  if (std::holds_alternative<int>(v)) return std::get<int>(v);
  throw ModelError("expected a discrete value");
}

inline const VectorXd& as_vector(const Value& v) {
  if (!std::holds_alternative<VectorXd>(v)) throw ModelError("expected a vector value");
  return std::get<VectorXd>(v);
}

inline const MatrixXd& as_matrix(const Value& v) {
  if (!std::holds_alternative<MatrixXd>(v)) throw ModelError("expected a matrix value");
  return std::get<MatrixXd>(v);
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + what);
}

}  // namespace gm

#endif
