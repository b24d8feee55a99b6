#include "relufim/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "relufim/error.hpp"
#include "relufim/rng.hpp"

namespace relufim {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

std::string to_string(Source s) {
  switch (s) {
    case Source::ClosedForm: return "closed";
    case Source::Series: return "series";
    case Source::Empirical: return "empirical";
    case Source::Approx: return "approx";
    case Source::Residual: return "residual";
  }
  return "unknown";
}

Source source_from_string(const std::string& s) {
  if (s == "closed") return Source::ClosedForm;
  if (s == "series") return Source::Series;
  if (s == "empirical") return Source::Empirical;
  if (s == "approx") return Source::Approx;
  if (s == "residual") return Source::Residual;
  fail(ErrorKind::InvalidArgument, "unknown matrix source '" + s + "'");
}

KernelMatrix::KernelMatrix(Eigen::MatrixXd values, Provenance provenance, RunId run)
    : values_(std::move(values)), provenance_(provenance), run_(run) {
  require(values_.rows() == values_.cols(), ErrorKind::InvalidArgument, "kernel matrix must be square");
  require(values_.allFinite(), ErrorKind::InvalidArgument, "kernel matrix has non-finite entries");
  require(run_.p == 0 || run_.p == p(), ErrorKind::Mismatch, "kernel matrix size does not match its run");
}

void mirror_upper(Eigen::MatrixXd& m) {
  m.triangularView<Eigen::StrictlyLower>() = m.transpose();
}

void check_dense_capacity(std::size_t p, std::size_t dense_cap) {
  require(p <= dense_cap, ErrorKind::Capacity,
          "p = " + std::to_string(p) + " exceeds the dense cap " + std::to_string(dense_cap) +
              "; use the matrix-free approx/top-k path or raise the cap");
}

double arc_cosine_entry(double cosine, double norm_product) {
  if (cosine >= 1.0) return 0.5 * norm_product;
  if (cosine <= -1.0) return 0.0;
  const double theta = std::acos(cosine);
  const double sine = std::sqrt((1.0 - cosine) * (1.0 + cosine));
  return norm_product * ((kPi - theta) * cosine + sine) / (2.0 * kPi);
}

KernelMatrix closed_form_J(const ColumnGeometry& geom, std::size_t dense_cap) {
  const std::size_t p = geom.p();
  check_dense_capacity(p, dense_cap);
  const auto n = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd j(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < c; ++r)
      j(r, c) = arc_cosine_entry(geom.unit_gram(r, c), geom.norms[r] * geom.norms[c]);
    j(c, c) = 0.5 * geom.norms[c] * geom.norms[c];
  }
  mirror_upper(j);
  return KernelMatrix(std::move(j), Provenance{Source::ClosedForm}, geom.run);
}

Eigen::MatrixXd closed_form_times(const WeightMatrix& w, const Eigen::MatrixXd& v) {
  const Eigen::VectorXd norms = column_norms(w);
  const auto p = static_cast<Eigen::Index>(w.p());
  require(v.rows() == p, ErrorKind::InvalidArgument, "closed_form_times: V must have p rows");
  const Eigen::MatrixXd unit = w.entries() * norms.cwiseInverse().asDiagonal();

  constexpr Eigen::Index kTile = 256;
  Eigen::MatrixXd y(p, v.cols());
  const Eigen::Index tiles = (p + kTile - 1) / kTile;
#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index t = 0; t < tiles; ++t) {
    const Eigen::Index r0 = t * kTile;
    const Eigen::Index rows = std::min(kTile, p - r0);
    Eigen::MatrixXd tile = unit.middleCols(r0, rows).transpose() * unit;
    for (Eigen::Index c = 0; c < p; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index i = r0 + r;
        tile(r, c) = i == c ? 0.5 * norms[i] * norms[i]
                            : arc_cosine_entry(std::clamp(tile(r, c), -1.0, 1.0), norms[i] * norms[c]);
      }
    y.middleRows(r0, rows).noalias() = tile * v;
  }
  return y;
}

double f_of_z(double z) {
  require(std::abs(z) <= 1.0, ErrorKind::Domain, "f(z) requires |z| <= 1");
  return z * std::asin(z) + std::sqrt((1.0 - z) * (1.0 + z));
}

SeriesCoefficients::SeriesCoefficients(std::size_t max_terms) {
  const std::size_t count = std::max<std::size_t>(max_terms, 1);
  coeff_.resize(count);
  tail_.resize(count);
  // b_n = binom(2n, n) / 4^n via b_n = b_{n-1} (2n - 1) / (2n).
  long double central = 1.0L;
  long double partial = 0.0L;
  const long double total = std::numbers::pi_v<long double> / 2.0L - 1.0L;
  for (std::size_t n = 0; n < count; ++n) {
    const auto nn = static_cast<long double>(n);
    if (n > 0) central *= (2.0L * nn - 1.0L) / (2.0L * nn);
    const long double c = central / ((2.0L * nn + 1.0L) * (2.0L * nn + 2.0L));
    coeff_[n] = static_cast<double>(c);
    partial += c;
    tail_[n] = static_cast<double>(std::max(total - partial, 0.0L));
  }
}

double f_series(double z, std::size_t terms) {
  require(std::abs(z) <= 1.0, ErrorKind::Domain, "f_series requires |z| <= 1");
  const SeriesCoefficients c(terms + 1);
  const double z2 = z * z;
  double power = z2;
  double sum = 0.0;
  for (std::size_t n = 0; n <= terms; ++n) {
    sum += c[n] * power;
    power *= z2;
  }
  return 1.0 + sum;
}

double series_tail_bound(double cosine, double norm_product, std::size_t last,
                         const SeriesCoefficients& coeffs) {
  const double az = std::abs(cosine);
  return norm_product / (2.0 * kPi) * std::pow(az, 2.0 * static_cast<double>(last) + 4.0) *
         coeffs.tail_after(last);
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct SeriesEntry {
  double residual = 0.0;  // (A/2pi) sum_{n=1..last} c_n z^{2n+2}
  double bound = 0.0;
};

SeriesEntry residual_series(double z, double a, const SeriesSpec& spec, const SeriesCoefficients& coeffs) {
  const double z2 = z * z;
  double power = z2 * z2;  // z^4 at n = 1
  double sum = 0.0;
  std::size_t n = 1;
  for (; n <= spec.truncation; ++n) {
    sum += coeffs[n] * power;
    power *= z2;
  }
  std::size_t last = spec.truncation;
  if (spec.tail_tol > 0.0) {
    while (last + 1 < coeffs.size() && series_tail_bound(z, a, last, coeffs) > spec.tail_tol * a) {
      ++last;
      sum += coeffs[last] * power;
      power *= z2;
    }
  }
  return {a / (2.0 * kPi) * sum, series_tail_bound(z, a, last, coeffs) + kRoundingUlps * kEps * a};
}

SeriesCoefficients coefficients_for(const SeriesSpec& spec) {
  std::size_t need = spec.truncation + 1;
  if (spec.tail_tol > 0.0) need = std::max(need, spec.max_terms);
  return SeriesCoefficients(need);
}

KernelMatrix build_series(const ColumnGeometry& geom, const SeriesSpec& spec, std::size_t dense_cap,
                          bool residual_only) {
  const std::size_t p = geom.p();
  check_dense_capacity(p, dense_cap);
  const SeriesCoefficients coeffs = coefficients_for(spec);
  const auto n = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd m(n, n);
  double worst = 0.0;
#pragma omp parallel for schedule(dynamic, 16) reduction(max : worst)
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r <= c; ++r) {
      const double z = r == c ? 1.0 : geom.unit_gram(r, c);
      const double a = geom.norms[r] * geom.norms[c];
      const SeriesEntry e = residual_series(z, a, spec, coeffs);
      double value = e.residual;
      if (!residual_only) value += a / (2.0 * kPi) + z * a / 4.0 + z * z * a / (4.0 * kPi);
      m(r, c) = value;
      worst = std::max(worst, e.bound);
    }
  }
  mirror_upper(m);
  Provenance prov{residual_only ? Source::Residual : Source::Series};
  prov.terms = spec.truncation;
  prov.tail_bound = worst;
  return KernelMatrix(std::move(m), prov, geom.run);
}

}  // namespace

KernelMatrix series_J(const ColumnGeometry& geom, const SeriesSpec& spec, std::size_t dense_cap) {
  return build_series(geom, spec, dense_cap, false);
}

KernelMatrix residual_R(const ColumnGeometry& geom, const SeriesSpec& spec, std::size_t dense_cap) {
  return build_series(geom, spec, dense_cap, true);
}

MonteCarloEstimate expected_kernel_oracle(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                          std::uint64_t samples, std::uint64_t seed, std::size_t workers) {
  require(u.size() == v.size() && u.size() > 0, ErrorKind::InvalidArgument,
          "oracle vectors must have equal nonzero length");
  require(u.squaredNorm() > 0.0 && v.squaredNorm() > 0.0, ErrorKind::InvalidArgument,
          "oracle vectors must be nonzero");
  require(samples >= 1, ErrorKind::InvalidArgument, "oracle needs at least one sample");
  workers = std::max<std::size_t>(workers, 1);

  const auto d = u.size();
  std::vector<long double> sums(workers, 0.0L), squares(workers, 0.0L);
#pragma omp parallel for schedule(static, 1)
  for (std::size_t w = 0; w < workers; ++w) {
    std::uint64_t count = samples / workers + (w < samples % workers ? 1 : 0);
    GaussianStream stream(derive_seed(seed, SeedDomain::Oracle, w));
    Eigen::VectorXd x(d);
    long double s = 0.0L, s2 = 0.0L;
    for (std::uint64_t t = 0; t < count; ++t) {
      for (Eigen::Index k = 0; k < d; ++k) x[k] = stream.normal();
      const double value = std::max(x.dot(u), 0.0) * std::max(x.dot(v), 0.0);
      s += value;
      s2 += static_cast<long double>(value) * value;
    }
    sums[w] = s;
    squares[w] = s2;
  }
  long double s = 0.0L, s2 = 0.0L;
  for (std::size_t w = 0; w < workers; ++w) {
    s += sums[w];
    s2 += squares[w];
  }
  const auto n = static_cast<long double>(samples);
  const long double mean = s / n;
  long double var = samples > 1 ? (s2 - n * mean * mean) / (n - 1.0L) : 0.0L;
  var = std::max(var, 0.0L);
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(var / n)), samples};
}

}  // namespace relufim
