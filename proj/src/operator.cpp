#include "relufim/operator.hpp"

#include "relufim/decomposition.hpp"
#include "relufim/error.hpp"
#include "relufim/kernel.hpp"

namespace relufim {

SymmetricOperator dense_operator(const KernelMatrix& j) {
  return {j.p(), j.run(), [&j](const Eigen::MatrixXd& v) -> Eigen::MatrixXd {
            require(static_cast<std::size_t>(v.rows()) == j.p(), ErrorKind::InvalidArgument,
                    "operator input has wrong length");
            return j.values().selfadjointView<Eigen::Upper>() * v;
          }};
}

SymmetricOperator closed_form_operator(const WeightMatrix& w) {
  return {w.p(), w.run(), [&w](const Eigen::MatrixXd& v) { return closed_form_times(w, v); }};
}

SymmetricOperator approx_operator(const FeatureBasis& basis) {
  return {basis.p(), basis.run(), [&basis](const Eigen::MatrixXd& v) { return approx_times(basis, v); }};
}

SymmetricOperator scaled_operator(SymmetricOperator base, double factor) {
  auto inner = std::move(base.apply);
  base.apply = [inner = std::move(inner), factor](const Eigen::MatrixXd& v) -> Eigen::MatrixXd {
    return factor * inner(v);
  };
  return base;
}

}  // namespace relufim
