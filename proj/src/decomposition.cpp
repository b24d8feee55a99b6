#include "relufim/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relufim/error.hpp"

namespace relufim {

FeatureBasis::FeatureBasis(const WeightMatrix& w) : d_(w.d()), run_(w.run()) {
  const auto d = static_cast<Eigen::Index>(d_);
  const auto p = static_cast<Eigen::Index>(w.p());
  const auto& W = w.entries();
  norm_profile_ = column_norms(w);
  const double sqrt_d = std::sqrt(static_cast<double>(d_));

  vectors_.resize(static_cast<Eigen::Index>(1 + d_ + d_ * (d_ - 1) / 2 + d_), p);
  const Eigen::RowVectorXd v0 = norm_profile_.transpose() / sqrt_d;
  const Eigen::RowVectorXd scale = sqrt_d * norm_profile_.cwiseInverse().transpose();
  vectors_.row(0) = v0;
  vectors_.middleRows(1, d) = W;
  Eigen::Index k = 1 + d;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = a + 1; b < d; ++b)
      vectors_.row(k++) = W.row(a).cwiseProduct(W.row(b)).cwiseProduct(scale);
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (Eigen::Index g = 0; g < d; ++g)
    vectors_.row(k++) = (W.row(g).cwiseAbs2().cwiseProduct(scale) - v0) * inv_sqrt2;
}

std::size_t FeatureBasis::pair_index(std::size_t a, std::size_t b) const {
  require(a < b && b < d_, ErrorKind::InvalidArgument, "pair index needs a < b < d");
  // pairs before row a: sum_{r<a} (d - 1 - r)
  const std::size_t before = a * (2 * d_ - a - 1) / 2;
  return 1 + d_ + before + (b - a - 1);
}

VectorKind FeatureBasis::kind(std::size_t k) const {
  if (k == 0) return VectorKind::Norm;
  if (k <= d_) return VectorKind::Row;
  if (k < gamma_index(0)) return VectorKind::Pair;
  require(k < size(), ErrorKind::InvalidArgument, "basis index out of range");
  return VectorKind::Gamma;
}

std::string FeatureBasis::label(std::size_t k) const {
  switch (kind(k)) {
    case VectorKind::Norm: return "v0";
    case VectorKind::Row: return "W_" + std::to_string(k);
    case VectorKind::Gamma: return "v(" + std::to_string(k - gamma_index(0) + 1) + ")";
    case VectorKind::Pair: break;
  }
  std::size_t offset = k - (1 + d_);
  std::size_t a = 0;
  while (offset >= d_ - 1 - a) {
    offset -= d_ - 1 - a;
    ++a;
  }
  return "v(" + std::to_string(a + 1) + "," + std::to_string(a + 2 + offset) + ")";
}

Eigen::VectorXd FeatureBasis::diagonal_pair(std::size_t g) const {
  require(g < d_, ErrorKind::InvalidArgument, "gamma index out of range");
  return (vector(0) + std::numbers::sqrt2 * vector(gamma_index(g))).transpose();
}

Eigen::MatrixXd FeatureBasis::block(std::size_t first, std::size_t count) const {
  require(first + count <= size(), ErrorKind::InvalidArgument, "basis block out of range");
  return vectors_.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count)).transpose();
}

ApproxCoefficients approx_coefficients(std::size_t d) {
  const double dd = static_cast<double>(d);
  return {(2.0 * dd + 1.0) / (4.0 * std::numbers::pi), 0.25, 1.0 / (2.0 * std::numbers::pi * dd)};
}

Eigen::VectorXd ApproxDecomposition::weights() const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(basis->size()));
  for (std::size_t k = 0; k < basis->size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    switch (basis->kind(k)) {
      case VectorKind::Norm: w[i] = coefficients.top; break;
      case VectorKind::Row: w[i] = coefficients.rows; break;
      case VectorKind::Pair:
      case VectorKind::Gamma: w[i] = coefficients.quadric; break;
    }
  }
  return w;
}

ApproxDecomposition make_approx(const FeatureBasis& basis, double residual_bound) {
  return {approx_coefficients(basis.d()), &basis, residual_bound};
}

KernelMatrix assemble_approx(const FeatureBasis& basis, std::size_t dense_cap) {
  check_dense_capacity(basis.p(), dense_cap);
  const Eigen::VectorXd weights = make_approx(basis).weights();
  const Eigen::MatrixXd& b = basis.vectors();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(b.cols(), b.cols());
  const Eigen::MatrixXd scaled = weights.cwiseSqrt().asDiagonal() * b;
  m.selfadjointView<Eigen::Upper>().rankUpdate(scaled.transpose());
  mirror_upper(m);
  return KernelMatrix(std::move(m), Provenance{Source::Approx}, basis.run());
}

Eigen::MatrixXd approx_times(const FeatureBasis& basis, const Eigen::MatrixXd& v) {
  require(static_cast<std::size_t>(v.rows()) == basis.p(), ErrorKind::InvalidArgument,
          "approx_times: V must have p rows");
  const Eigen::VectorXd weights = make_approx(basis).weights();
  const Eigen::MatrixXd projected = weights.asDiagonal() * (basis.vectors() * v);
  return basis.vectors().transpose() * projected;
}

QuotientTable rayleigh_quotients(const SymmetricOperator& j, const FeatureBasis& basis) {
  require(j.p == basis.p(), ErrorKind::InvalidArgument, "operator and basis dimensions differ");
  require(j.run.p == 0 || j.run == basis.run(), ErrorKind::Mismatch, "operator and basis come from different runs");
  const Eigen::MatrixXd v = basis.vectors().transpose();
  const Eigen::MatrixXd jv = j(v);
  QuotientTable out{j.run, {}};
  out.entries.reserve(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    out.entries.push_back({k, basis.label(k), v.col(c).dot(jv.col(c)) / v.col(c).squaredNorm()});
  }
  return out;
}

QuotientTable rayleigh_quotients(const KernelMatrix& j, const FeatureBasis& basis) {
  return rayleigh_quotients(dense_operator(j), basis);
}

double GramReport::norm_deviation(std::size_t k) const {
  const auto i = static_cast<Eigen::Index>(k);
  return std::abs(gram(i, i) - 1.0);
}

double GramReport::pair_deviation(std::size_t a, std::size_t b) const {
  const double g = gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  if (both_gamma(a, b)) return std::abs(g + 1.0 / (static_cast<double>(d) - 1.0));
  return std::abs(g);
}

double GramReport::max_norm_deviation(VectorKind kind) const {
  double worst = 0.0;
  for (std::size_t k = 0; k < size(); ++k)
    if (kinds[k] == kind) worst = std::max(worst, norm_deviation(k));
  return worst;
}

double GramReport::max_cross_deviation() const {
  double worst = 0.0;
  for (std::size_t b = 0; b < size(); ++b)
    for (std::size_t a = 0; a < b; ++a)
      if (!both_gamma(a, b)) worst = std::max(worst, pair_deviation(a, b));
  return worst;
}

double GramReport::max_gamma_pair_deviation() const {
  double worst = 0.0;
  for (std::size_t b = 0; b < size(); ++b)
    for (std::size_t a = 0; a < b; ++a)
      if (both_gamma(a, b)) worst = std::max(worst, pair_deviation(a, b));
  return worst;
}

Eigen::VectorXd GramReport::gamma_row_sums() const {
  std::vector<Eigen::Index> idx;
  for (std::size_t k = 0; k < size(); ++k)
    if (kinds[k] == VectorKind::Gamma) idx.push_back(static_cast<Eigen::Index>(k));
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (auto c : idx) sums[static_cast<Eigen::Index>(r)] += gram(idx[r], c);
  return sums;
}

GramReport basis_geometry(const FeatureBasis& basis) {
  GramReport report;
  report.run = basis.run();
  report.d = basis.d();
  for (std::size_t k = 0; k < basis.size(); ++k) {
    report.labels.push_back(basis.label(k));
    report.kinds.push_back(basis.kind(k));
  }
  const auto m = static_cast<Eigen::Index>(basis.size());
  report.gram = Eigen::MatrixXd::Zero(m, m);
  report.gram.selfadjointView<Eigen::Upper>().rankUpdate(basis.vectors());
  mirror_upper(report.gram);
  return report;
}

Eigen::MatrixXd gamma_span_basis(const FeatureBasis& basis) {
  const std::size_t d = basis.d();
  require(d >= 2, ErrorKind::InvalidArgument, "span of v(g) needs d >= 2");
  const Eigen::MatrixXd stacked = basis.block(basis.gamma_index(0), d);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(stacked.rows(), stacked.cols());
  // Pivoting orders |R_kk| decreasingly; the last column spans the dropped direction.
  return q.leftCols(static_cast<Eigen::Index>(d - 1));
}

}  // namespace relufim
