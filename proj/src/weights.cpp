#include "relufim/weights.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "relufim/error.hpp"
#include "relufim/rng.hpp"

namespace relufim {

WeightMatrix::WeightMatrix(Eigen::MatrixXd entries, std::uint64_t seed, double scale)
    : entries_(std::move(entries)), seed_(seed), scale_(scale) {
  require(entries_.rows() > 0 && entries_.cols() > 0, ErrorKind::InvalidArgument,
          "weight matrix must have d >= 1 and p >= 1");
  require(entries_.allFinite(), ErrorKind::InvalidArgument, "weight matrix has non-finite entries");
}

WeightMatrix generate_weights(std::size_t d, std::size_t p, std::uint64_t seed, double scale,
                              ZeroColumnPolicy policy) {
  require(d >= 1, ErrorKind::InvalidArgument, "d must be >= 1");
  require(p >= 1, ErrorKind::InvalidArgument, "p must be >= 1");
  require(scale > 0.0 && std::isfinite(scale), ErrorKind::InvalidArgument, "scale must be > 0");

  const auto rows = static_cast<Eigen::Index>(d);
  const auto cols = static_cast<Eigen::Index>(p);
  const double sd = std::sqrt(scale);
  GaussianStream stream(derive_seed(seed, SeedDomain::Weights));

  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index l = 0; l < rows; ++l)
    for (Eigen::Index i = 0; i < cols; ++i) w(l, i) = sd * stream.normal();

  for (Eigen::Index i = 0; i < cols; ++i) {
    while (w.col(i).squaredNorm() == 0.0) {
      require(policy == ZeroColumnPolicy::Resample, ErrorKind::Domain,
              "column " + std::to_string(i) + " of W is exactly zero");
      for (Eigen::Index l = 0; l < rows; ++l) w(l, i) = sd * stream.normal();
    }
  }
  return WeightMatrix(std::move(w), seed, scale);
}

WeightMatrix generate_weights(std::size_t d, std::size_t p, std::uint64_t seed) {
  require(p >= 1, ErrorKind::InvalidArgument, "p must be >= 1");
  return generate_weights(d, p, seed, 1.0 / static_cast<double>(p));
}

Eigen::VectorXd column_norms(const WeightMatrix& w) {
  Eigen::VectorXd norms = w.entries().colwise().norm().transpose();
  for (Eigen::Index i = 0; i < norms.size(); ++i)
    require(norms[i] > 0.0, ErrorKind::Domain, "column " + std::to_string(i) + " of W has zero norm");
  return norms;
}

double ColumnGeometry::angle(std::size_t i, std::size_t j) const {
  return std::acos(unit_gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
}

ColumnGeometry column_geometry(const WeightMatrix& w) {
  ColumnGeometry g;
  g.run = w.run();
  g.norms = column_norms(w);

  const Eigen::MatrixXd unit = w.entries() * g.norms.cwiseInverse().asDiagonal();
  const auto p = unit.cols();
  g.unit_gram.resize(p, p);
  g.unit_gram.triangularView<Eigen::Upper>() = unit.transpose() * unit;
  for (Eigen::Index j = 0; j < p; ++j) {
    g.unit_gram(j, j) = 1.0;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double c = std::clamp(g.unit_gram(i, j), -1.0, 1.0);
      g.unit_gram(i, j) = c;
      g.unit_gram(j, i) = c;
    }
  }
  return g;
}

}  // namespace relufim
