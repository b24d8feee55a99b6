#pragma once

#include <cstdint>
#include <string>
#include <vector>
#include <Eigen/Dense>

#include "relufim/weights.hpp"

namespace relufim {

/// Dense p x p storage is refused above this width unless the caller raises
/// the cap (8 p^2 bytes: 20000 -> 3.2 GB).
inline constexpr std::size_t kDefaultDenseCap = 20000;

enum class Source { ClosedForm, Series, Empirical, Approx, Residual };

std::string to_string(Source s);
Source source_from_string(const std::string& s);

struct Provenance {
  Source source = Source::ClosedForm;
  std::size_t terms = 0;      // Series / Residual truncation N
  double tail_bound = 0.0;    // max entrywise |computed - exact|: series tail plus rounding allowance
  std::uint64_t samples = 0;  // Empirical n
  double sigma2 = 1.0;        // Empirical noise variance (FIM = J / sigma2)
  std::size_t workers = 1;    // Empirical shard count
};

/// A symmetric p x p matrix J (or one of its variants) with provenance.
class KernelMatrix {
 public:
  KernelMatrix(Eigen::MatrixXd values, Provenance provenance, RunId run);

  std::size_t p() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  const RunId& run() const noexcept { return run_; }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double trace() const { return values_.trace(); }

  /// The Fisher information view I = J / sigma2 of an empirical matrix.
  Eigen::MatrixXd fisher_information() const { return values_ / provenance_.sigma2; }

  /// Releases the storage to a consumer that overwrites it (e.g. an in-place
  /// eigensolver). The matrix is empty afterwards.
  Eigen::MatrixXd release_values() && { return std::move(values_); }

 private:
  Eigen::MatrixXd values_;
  Provenance provenance_;
  RunId run_;
};

/// Copies the upper triangle onto the lower one.
void mirror_upper(Eigen::MatrixXd& m);

void check_dense_capacity(std::size_t p, std::size_t dense_cap);

/// E[relu(x.u) relu(x.v)] for x ~ N(0, I) given cos(theta) and |u||v|:
/// (|u||v| / 2 pi) ((pi - theta) cos(theta) + sin(theta)). The endpoints
/// cos = 1 and cos = -1 return their exact limits |u||v|/2 and 0.
double arc_cosine_entry(double cosine, double norm_product);

KernelMatrix closed_form_J(const ColumnGeometry& geom, std::size_t dense_cap = kDefaultDenseCap);

/// Y = J V with J in closed form, computed tile by tile from W without
/// materializing J. V is p x k.
Eigen::MatrixXd closed_form_times(const WeightMatrix& w, const Eigen::MatrixXd& v);

/// f(z) = z asin(z) + sqrt(1 - z^2); domain error for |z| > 1.
double f_of_z(double z);

/// Coefficients c_n = binom(2n,n) / (4^n (2n+1)(2n+2)) of
/// f(z) = 1 + sum_{n>=0} c_n z^{2n+2}, with exact tail sums.
class SeriesCoefficients {
 public:
  explicit SeriesCoefficients(std::size_t max_terms);

  std::size_t size() const noexcept { return coeff_.size(); }
  double operator[](std::size_t n) const { return coeff_.at(n); }
  /// sum_{n > last} c_n, from sum_{n>=0} c_n = f(1) - 1 = pi/2 - 1.
  double tail_after(std::size_t last) const { return tail_.at(last); }

 private:
  std::vector<double> coeff_;
  std::vector<double> tail_;
};

/// Partial sum 1 + sum_{n=0..N} c_n z^{2n+2}.
double f_series(double z, std::size_t terms);

struct SeriesSpec {
  std::size_t truncation = 64;  // terms n = 1..N of the residual series
  double tail_tol = 0.0;        // > 0: extend per entry until tail <= tail_tol * A_ij
  std::size_t max_terms = 4096;
};

/// Floating-point allowance, in units of eps A_ij, that recorded series tail
/// bounds add to the analytic tail. On the diagonal (|z| = 1) the analytic
/// tail is attained exactly, so computed differences straddle it by rounding.
inline constexpr double kRoundingUlps = 64.0;

/// Upper bound on |exact - truncated| for one entry whose series stops at
/// term `last`: (A/2pi) |z|^{2 last + 4} sum_{n>last} c_n.
double series_tail_bound(double cosine, double norm_product, std::size_t last,
                         const SeriesCoefficients& coeffs);

/// J_ij = A/2pi + (W_i.W_j)/4 + (W_i.W_j)^2/(4 pi A) + (1/2pi) sum_{n=1..N} c_n
/// (W_i.W_j)^{2n+2} / A^{2n+1}. provenance.tail_bound is the max entry bound.
KernelMatrix series_J(const ColumnGeometry& geom, const SeriesSpec& spec = {},
                      std::size_t dense_cap = kDefaultDenseCap);

/// R_ij = (1/2pi) sum_{n=1..N} c_n (W_i.W_j)^{2n+2} / A^{2n+1}.
KernelMatrix residual_R(const ColumnGeometry& geom, const SeriesSpec& spec = {},
                        std::size_t dense_cap = kDefaultDenseCap);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

/// Monte Carlo estimate of E[relu(x.u) relu(x.v)], x ~ N(0, I_d). Samples are
/// split over `workers` substreams derived from (seed, worker id) and merged
/// in worker order.
MonteCarloEstimate expected_kernel_oracle(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                          std::uint64_t samples, std::uint64_t seed,
                                          std::size_t workers = 1);

}  // namespace relufim
