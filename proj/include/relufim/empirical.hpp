#pragma once

#include <cstdint>
#include <Eigen/Dense>

#include "relufim/kernel.hpp"
#include "relufim/rng.hpp"
#include "relufim/weights.hpp"

namespace relufim {

/// Draws inputs x ~ N(0, I_d) and emits ReLU features X = relu(x W).
class FeatureSampler {
 public:
  FeatureSampler(const WeightMatrix& w, std::uint64_t seed, std::size_t worker = 0);

  /// Next `count` feature vectors as the rows of a count x p matrix.
  Eigen::MatrixXd next(std::size_t count);

  /// relu(x W) for given inputs (rows of x).
  static Eigen::MatrixXd features(const WeightMatrix& w, const Eigen::MatrixXd& x);

 private:
  const WeightMatrix* w_;
  GaussianStream stream_;
};

/// Running sum of X^T X over feature vectors X (upper triangle only), with
/// optional per-entry second moments for standard errors and optional
/// compensated summation across batches.
class EmpiricalAccumulator {
 public:
  struct Options {
    bool track_moments = false;
    bool compensated = false;
  };

  EmpiricalAccumulator(std::size_t p, RunId run, Options options);
  explicit EmpiricalAccumulator(std::size_t p, RunId run = {}) : EmpiricalAccumulator(p, run, Options{}) {}

  void accumulate(const Eigen::VectorXd& x);
  /// Adds every row of `batch`.
  void accumulate_batch(const Eigen::MatrixXd& batch);
  /// Adds another accumulator's sums and count (same p and options).
  void merge(const EmpiricalAccumulator& other);

  std::uint64_t count() const noexcept { return count_; }
  std::size_t p() const noexcept { return static_cast<std::size_t>(sum_.rows()); }
  const RunId& run() const noexcept { return run_; }

  /// Symmetrized running sum.
  Eigen::MatrixXd sum() const;
  /// Per-entry standard error of the mean of X_i X_j (needs track_moments, count >= 2).
  Eigen::MatrixXd standard_errors() const;

  /// J^(n) = sum / n tagged Empirical(n, sigma2); the FIM view is J^(n) / sigma2.
  KernelMatrix finalize_fim(double sigma2, std::size_t workers = 1) const;

 private:
  void add_upper(Eigen::MatrixXd& target, Eigen::MatrixXd& carry, const Eigen::MatrixXd& increment);

  Eigen::MatrixXd sum_;
  Eigen::MatrixXd carry_;
  Eigen::MatrixXd squares_;
  Eigen::MatrixXd squares_carry_;
  std::uint64_t count_ = 0;
  RunId run_;
  Options options_;
};

struct EmpiricalOptions {
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t batch = 512;
  bool track_moments = false;
  bool compensated = false;
  std::size_t dense_cap = kDefaultDenseCap;
};

/// Sharded accumulation: worker k draws samples/workers (+1 for the first
/// samples % workers) from substream (seed, k); shards are merged in ascending
/// worker order.
EmpiricalAccumulator empirical_accumulate(const WeightMatrix& w, const EmpiricalOptions& options);

KernelMatrix empirical_J(const WeightMatrix& w, const EmpiricalOptions& options, double sigma2 = 1.0);

}  // namespace relufim
