#pragma once

#include <functional>
#include <Eigen/Dense>

#include "relufim/weights.hpp"

namespace relufim {

class KernelMatrix;
class FeatureBasis;

/// A symmetric p x p linear operator applied to blocks of column vectors.
/// Operators built by the factories below refer to their source object, which
/// must outlive them.
struct SymmetricOperator {
  std::size_t p = 0;
  RunId run;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> apply;

  Eigen::MatrixXd operator()(const Eigen::MatrixXd& v) const { return apply(v); }
};

SymmetricOperator dense_operator(const KernelMatrix& j);
SymmetricOperator closed_form_operator(const WeightMatrix& w);
SymmetricOperator approx_operator(const FeatureBasis& basis);
SymmetricOperator scaled_operator(SymmetricOperator base, double factor);

}  // namespace relufim
