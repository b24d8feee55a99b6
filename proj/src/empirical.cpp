#include "relufim/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "relufim/error.hpp"

namespace relufim {

FeatureSampler::FeatureSampler(const WeightMatrix& w, std::uint64_t seed, std::size_t worker)
    : w_(&w), stream_(derive_seed(seed, SeedDomain::Features, worker)) {}

Eigen::MatrixXd FeatureSampler::features(const WeightMatrix& w, const Eigen::MatrixXd& x) {
  require(x.cols() == w.entries().rows(), ErrorKind::InvalidArgument, "inputs must have d columns");
  return (x * w.entries()).cwiseMax(0.0);
}

Eigen::MatrixXd FeatureSampler::next(std::size_t count) {
  require(count >= 1, ErrorKind::InvalidArgument, "sample count must be >= 1");
  const auto d = w_->entries().rows();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(count), d);
  // Row-major draw order: one input vector at a time.
  for (Eigen::Index t = 0; t < x.rows(); ++t)
    for (Eigen::Index k = 0; k < d; ++k) x(t, k) = stream_.normal();
  return features(*w_, x);
}

EmpiricalAccumulator::EmpiricalAccumulator(std::size_t p, RunId run, Options options)
    : run_(run), options_(options) {
  require(p >= 1, ErrorKind::InvalidArgument, "accumulator needs p >= 1");
  const auto n = static_cast<Eigen::Index>(p);
  sum_ = Eigen::MatrixXd::Zero(n, n);
  if (options_.compensated) carry_ = Eigen::MatrixXd::Zero(n, n);
  if (options_.track_moments) {
    squares_ = Eigen::MatrixXd::Zero(n, n);
    if (options_.compensated) squares_carry_ = Eigen::MatrixXd::Zero(n, n);
  }
}

void EmpiricalAccumulator::add_upper(Eigen::MatrixXd& target, Eigen::MatrixXd& carry,
                                     const Eigen::MatrixXd& increment) {
  const auto n = target.rows();
  if (!options_.compensated) {
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r <= c; ++r) target(r, c) += increment(r, c);
    return;
  }
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r <= c; ++r) {
      const double y = increment(r, c) - carry(r, c);
      const double t = target(r, c) + y;
      carry(r, c) = (t - target(r, c)) - y;
      target(r, c) = t;
    }
}

void EmpiricalAccumulator::accumulate(const Eigen::VectorXd& x) {
  require(static_cast<std::size_t>(x.size()) == p(), ErrorKind::InvalidArgument,
          "feature vector length does not match p");
  require(x.allFinite(), ErrorKind::InvalidArgument, "feature vector has non-finite entries");
  accumulate_batch(x.transpose());
}

void EmpiricalAccumulator::accumulate_batch(const Eigen::MatrixXd& batch) {
  require(static_cast<std::size_t>(batch.cols()) == p(), ErrorKind::InvalidArgument,
          "feature batch width does not match p");
  if (batch.rows() == 0) return;
  if (!options_.compensated) {
    sum_.selfadjointView<Eigen::Upper>().rankUpdate(batch.transpose());
    if (options_.track_moments)
      squares_.selfadjointView<Eigen::Upper>().rankUpdate(batch.cwiseAbs2().transpose());
  } else {
    const auto n = sum_.rows();
    Eigen::MatrixXd increment = Eigen::MatrixXd::Zero(n, n);
    increment.selfadjointView<Eigen::Upper>().rankUpdate(batch.transpose());
    add_upper(sum_, carry_, increment);
    if (options_.track_moments) {
      increment.setZero();
      increment.selfadjointView<Eigen::Upper>().rankUpdate(batch.cwiseAbs2().transpose());
      add_upper(squares_, squares_carry_, increment);
    }
  }
  count_ += static_cast<std::uint64_t>(batch.rows());
}

void EmpiricalAccumulator::merge(const EmpiricalAccumulator& other) {
  require(other.p() == p(), ErrorKind::InvalidArgument, "cannot merge accumulators of different p");
  require(other.options_.track_moments == options_.track_moments, ErrorKind::InvalidArgument,
          "cannot merge accumulators with different moment tracking");
  Eigen::MatrixXd increment = other.sum_;
  if (other.options_.compensated) increment -= other.carry_;
  add_upper(sum_, carry_, increment);
  if (options_.track_moments) {
    Eigen::MatrixXd sq = other.squares_;
    if (other.options_.compensated) sq -= other.squares_carry_;
    add_upper(squares_, squares_carry_, sq);
  }
  count_ += other.count_;
}

Eigen::MatrixXd EmpiricalAccumulator::sum() const {
  Eigen::MatrixXd s = sum_;
  if (options_.compensated) s -= carry_;
  mirror_upper(s);
  return s;
}

Eigen::MatrixXd EmpiricalAccumulator::standard_errors() const {
  require(options_.track_moments, ErrorKind::InvalidArgument, "standard errors need track_moments");
  require(count_ >= 2, ErrorKind::InvalidArgument, "standard errors need at least two samples");
  const double n = static_cast<double>(count_);
  Eigen::MatrixXd sq = squares_;
  if (options_.compensated) sq -= squares_carry_;
  mirror_upper(sq);
  const Eigen::MatrixXd mean = sum() / n;
  const Eigen::MatrixXd var = ((sq / n - mean.cwiseAbs2()) * (n / (n - 1.0))).cwiseMax(0.0);
  return (var / n).cwiseSqrt();
}

KernelMatrix EmpiricalAccumulator::finalize_fim(double sigma2, std::size_t workers) const {
  require(count_ >= 1, ErrorKind::InvalidArgument, "finalize needs at least one accumulated sample");
  require(sigma2 > 0.0 && std::isfinite(sigma2), ErrorKind::InvalidArgument, "sigma2 must be > 0");
  Provenance prov{Source::Empirical};
  prov.samples = count_;
  prov.sigma2 = sigma2;
  prov.workers = workers;
  RunId run = run_;
  if (run.p == 0) run.p = p();
  return KernelMatrix(sum() / static_cast<double>(count_), prov, run);
}

EmpiricalAccumulator empirical_accumulate(const WeightMatrix& w, const EmpiricalOptions& options) {
  require(options.samples >= 1, ErrorKind::InvalidArgument, "empirical J needs n >= 1");
  check_dense_capacity(w.p(), options.dense_cap);
  const std::size_t workers = std::max<std::size_t>(options.workers, 1);
  const std::size_t batch = std::max<std::size_t>(options.batch, 1);
  const EmpiricalAccumulator::Options acc_opts{options.track_moments, options.compensated};

  std::vector<EmpiricalAccumulator> shards;
  shards.reserve(workers);
  for (std::size_t k = 0; k < workers; ++k) shards.emplace_back(w.p(), w.run(), acc_opts);

#pragma omp parallel for schedule(static, 1)
  for (std::size_t k = 0; k < workers; ++k) {
    std::uint64_t remaining = options.samples / workers + (k < options.samples % workers ? 1 : 0);
    FeatureSampler sampler(w, options.seed, k);
    while (remaining > 0) {
      const auto take = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, batch));
      shards[k].accumulate_batch(sampler.next(take));
      remaining -= take;
    }
  }
  EmpiricalAccumulator total(w.p(), w.run(), acc_opts);
  for (const auto& shard : shards) total.merge(shard);
  return total;
}

KernelMatrix empirical_J(const WeightMatrix& w, const EmpiricalOptions& options, double sigma2) {
  return empirical_accumulate(w, options).finalize_fim(sigma2, std::max<std::size_t>(options.workers, 1));
}

}  // namespace relufim
