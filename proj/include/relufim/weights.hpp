#pragma once

#include <cstdint>
#include <Eigen/Dense>

namespace relufim {

enum class ZeroColumnPolicy { Reject, Resample };

/// Identity of a generated network: everything derived from the same
/// (d, p, seed) belongs to the same run.
struct RunId {
  std::size_t d = 0;
  std::size_t p = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const RunId&, const RunId&) = default;
};

/// The d x p first-layer weight matrix W. Column i is the weight vector of
/// hidden unit i; row l is the vector W_l of input coordinate l.
class WeightMatrix {
 public:
  WeightMatrix(Eigen::MatrixXd entries, std::uint64_t seed, double scale);

  std::size_t d() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
  std::uint64_t seed() const noexcept { return seed_; }
  double scale() const noexcept { return scale_; }
  RunId run() const noexcept { return {d(), p(), seed_}; }

  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  auto column(std::size_t i) const { return entries_.col(static_cast<Eigen::Index>(i)); }
  auto row(std::size_t l) const { return entries_.row(static_cast<Eigen::Index>(l)); }

 private:
  Eigen::MatrixXd entries_;
  std::uint64_t seed_;
  double scale_;
};

/// Draws W with i.i.d. N(0, scale) entries. Traversal order is row-major
/// (l = 0..d-1 outer, i = 0..p-1 inner) over a single GaussianStream seeded
/// from (seed, Weights domain). Under Resample, a zero column is redrawn from
/// the continuing stream; under Reject it is an error.
WeightMatrix generate_weights(std::size_t d, std::size_t p, std::uint64_t seed, double scale,
                              ZeroColumnPolicy policy = ZeroColumnPolicy::Reject);

/// Default entry variance 1/p.
WeightMatrix generate_weights(std::size_t d, std::size_t p, std::uint64_t seed);

/// Column norms and the cosine matrix of the columns.
struct ColumnGeometry {
  RunId run;
  Eigen::VectorXd norms;
  Eigen::MatrixXd unit_gram;  // cos(theta_ij), clamped to [-1, 1], unit diagonal

  std::size_t p() const noexcept { return static_cast<std::size_t>(norms.size()); }
  double angle(std::size_t i, std::size_t j) const;
  double norm_product(std::size_t i, std::size_t j) const {
    return norms[static_cast<Eigen::Index>(i)] * norms[static_cast<Eigen::Index>(j)];
  }
};

ColumnGeometry column_geometry(const WeightMatrix& w);

/// Column norms alone; throws naming the first zero column.
Eigen::VectorXd column_norms(const WeightMatrix& w);

}  // namespace relufim
