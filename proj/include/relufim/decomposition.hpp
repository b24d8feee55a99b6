#pragma once

#include <string>
#include <utility>
#include <vector>
#include <Eigen/Dense>

#include "relufim/kernel.hpp"
#include "relufim/operator.hpp"
#include "relufim/weights.hpp"

namespace relufim {

enum class VectorKind { Norm, Row, Pair, Gamma };

/// Candidate eigenvectors of J, stored as the rows of one M x p matrix with
/// M = d(d+3)/2 + 1 in canonical order:
///   v0 | W_1..W_d | v(a,b) for a<b lexicographic | v(1)..v(d)
/// where v0_i = |W_i| / sqrt(d), v(a,b)_i = sqrt(d) W_ai W_bi / |W_i| and
/// v(g) = (v(g,g) - v0) / sqrt(2).
class FeatureBasis {
 public:
  explicit FeatureBasis(const WeightMatrix& w);

  std::size_t d() const noexcept { return d_; }
  std::size_t p() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(vectors_.rows()); }
  const RunId& run() const noexcept { return run_; }
  const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }

  // 0-based indices into vectors().
  std::size_t norm_index() const noexcept { return 0; }
  std::size_t row_index(std::size_t l) const { return 1 + l; }
  std::size_t pair_index(std::size_t a, std::size_t b) const;  // a < b
  std::size_t gamma_index(std::size_t g) const { return 1 + d_ + d_ * (d_ - 1) / 2 + g; }
  std::size_t pair_count() const noexcept { return d_ * (d_ - 1) / 2; }

  auto vector(std::size_t k) const { return vectors_.row(static_cast<Eigen::Index>(k)); }
  VectorKind kind(std::size_t k) const;
  /// 1-based label: "v0", "W_3", "v(1,2)", "v(4)".
  std::string label(std::size_t k) const;

  /// v(g,g) for 0-based g.
  Eigen::VectorXd diagonal_pair(std::size_t g) const;

  /// Rows [first, first + count) as columns of a p x count matrix.
  Eigen::MatrixXd block(std::size_t first, std::size_t count) const;

 private:
  std::size_t d_;
  RunId run_;
  Eigen::MatrixXd vectors_;
  Eigen::VectorXd norm_profile_;  // |W^(i)|
};

struct ApproxCoefficients {
  double top;      // (2d+1)/(4 pi)
  double rows;     // 1/4
  double quadric;  // 1/(2 pi d)
};

ApproxCoefficients approx_coefficients(std::size_t d);

/// Low-rank part of J: top v0^T v0 + rows sum_k W_k^T W_k
///   + quadric (sum_g v(g)^T v(g) + sum_{a<b} v(a,b)^T v(a,b)).
struct ApproxDecomposition {
  ApproxCoefficients coefficients;
  const FeatureBasis* basis;
  double residual_bound = 0.0;  // series-tail bound carried over from the residual

  /// Per-vector weights aligned with basis rows.
  Eigen::VectorXd weights() const;
};

ApproxDecomposition make_approx(const FeatureBasis& basis, double residual_bound = 0.0);

KernelMatrix assemble_approx(const FeatureBasis& basis, std::size_t dense_cap = kDefaultDenseCap);

/// J_approx V without forming J_approx, O(p d^2 k).
Eigen::MatrixXd approx_times(const FeatureBasis& basis, const Eigen::MatrixXd& v);

struct RayleighQuotient {
  std::size_t index;
  std::string id;
  double value;
};

struct QuotientTable {
  RunId run;
  std::vector<RayleighQuotient> entries;
};

/// v J v^T / |v|^2 for every basis vector.
QuotientTable rayleigh_quotients(const SymmetricOperator& j, const FeatureBasis& basis);
QuotientTable rayleigh_quotients(const KernelMatrix& j, const FeatureBasis& basis);

/// Norms and pairwise inner products of the basis.
struct GramReport {
  RunId run;
  std::size_t d = 0;
  std::vector<std::string> labels;
  std::vector<VectorKind> kinds;
  Eigen::MatrixXd gram;

  std::size_t size() const noexcept { return labels.size(); }
  /// |<v,v> - 1|
  double norm_deviation(std::size_t k) const;
  /// |<v,v'> + 1/(d-1)| for two gamma vectors, |<v,v'>| otherwise.
  double pair_deviation(std::size_t a, std::size_t b) const;
  bool both_gamma(std::size_t a, std::size_t b) const {
    return kinds[a] == VectorKind::Gamma && kinds[b] == VectorKind::Gamma;
  }

  double max_norm_deviation(VectorKind kind) const;
  double max_cross_deviation() const;
  double max_gamma_pair_deviation() const;
  /// Row sums of the gamma-gamma block; zero because sum_g v(g) = 0.
  Eigen::VectorXd gamma_row_sums() const;
};

GramReport basis_geometry(const FeatureBasis& basis);

/// Orthonormal basis (columns) of span{v(1)..v(d)}: column-pivoted QR,
/// keeping the d-1 columns with the largest |R| diagonal.
Eigen::MatrixXd gamma_span_basis(const FeatureBasis& basis);

}  // namespace relufim
