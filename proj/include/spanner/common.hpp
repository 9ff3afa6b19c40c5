#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spanner {

using Index = Eigen::Index;

// Points are stored column-wise: a d x n matrix.
template <typename Scalar>
using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using PointVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = PointMatrix<double>;
using Vector = PointVector<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SPANNER_DEFINE_ERROR(Name)   \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  }

SPANNER_DEFINE_ERROR(AspectUndefined);
SPANNER_DEFINE_ERROR(InvalidScale);
SPANNER_DEFINE_ERROR(DomainError);
SPANNER_DEFINE_ERROR(IllConditioned);
SPANNER_DEFINE_ERROR(TooManyParts);
SPANNER_DEFINE_ERROR(NotOnSphere);
SPANNER_DEFINE_ERROR(EmptyIndex);
SPANNER_DEFINE_ERROR(DimensionError);
SPANNER_DEFINE_ERROR(NodeError);
SPANNER_DEFINE_ERROR(ConfigError);
SPANNER_DEFINE_ERROR(ExtractionStalled);
SPANNER_DEFINE_ERROR(EmptyInput);
SPANNER_DEFINE_ERROR(GadgetInfeasible);
SPANNER_DEFINE_ERROR(SizeError);
SPANNER_DEFINE_ERROR(TooLarge);
SPANNER_DEFINE_ERROR(Infeasible);
SPANNER_DEFINE_ERROR(ParseError);
SPANNER_DEFINE_ERROR(IoError);
// A construction-time soundness assert failed.
SPANNER_DEFINE_ERROR(InvariantViolation);

#undef SPANNER_DEFINE_ERROR

}  // namespace spanner
