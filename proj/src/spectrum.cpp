#include "relufim/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>


#include "relufim/rng.hpp"

namespace relufim {

Eigenpairs dense_spectrum(Eigen::MatrixXd&& a, bool want_vectors) {
  require(a.rows() == a.cols(), ErrorKind::InvalidArgument, "dense_spectrum needs a square matrix");
  const auto n = a.rows();
  require(n >= 1, ErrorKind::InvalidArgument, "dense_spectrum of an empty matrix");
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < c; ++r)
      require(a(r, c) == a(c, r), ErrorKind::InvalidArgument, "dense_spectrum input is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.compute(a, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  require(solver.info() == Eigen::Success, ErrorKind::NotConverged, "symmetric eigensolver did not converge");
  a = Eigen::MatrixXd();

  Eigenpairs out;
  out.values = solver.eigenvalues().reverse();
  if (want_vectors) out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Eigenpairs dense_spectrum(const KernelMatrix& j, bool want_vectors) {
  Eigen::MatrixXd copy = j.values();
  return dense_spectrum(std::move(copy), want_vectors);
}

namespace {

Eigen::VectorXd apply_one(const SymmetricOperator& op, const Eigen::VectorXd& v) {
  Eigen::MatrixXd y = op(v);
  require(y.rows() == v.size() && y.cols() == 1, ErrorKind::InvalidArgument, "operator returned wrong shape");
  return y.col(0);
}

void check_symmetry(const SymmetricOperator& op, GaussianStream& stream) {
  const auto p = static_cast<Eigen::Index>(op.p);
  Eigen::VectorXd u(p), v(p);
  for (Eigen::Index i = 0; i < p; ++i) u[i] = stream.normal();
  for (Eigen::Index i = 0; i < p; ++i) v[i] = stream.normal();
  const Eigen::VectorXd au = apply_one(op, u);
  const Eigen::VectorXd av = apply_one(op, v);
  const double scale = u.norm() * av.norm() + v.norm() * au.norm();
  require(std::abs(u.dot(av) - v.dot(au)) <= 1e-8 * scale + std::numeric_limits<double>::min(),
          ErrorKind::InvalidArgument, "operator failed the symmetry probe");
}

// Orthogonalizes w against the first m columns of q (two passes).
void reorthogonalize(const Eigen::MatrixXd& q, Eigen::Index m, Eigen::VectorXd& w) {
  for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(m) * (q.leftCols(m).transpose() * w);
}

}  // namespace

TopK topk_spectrum(const SymmetricOperator& op, const LanczosOptions& options) {
  const std::size_t p = op.p;
  const std::size_t k = options.k;
  require(k >= 1 && k <= p, ErrorKind::InvalidArgument, "top-k needs 1 <= k <= p");
  require(options.tol > 0.0, ErrorKind::InvalidArgument, "top-k tolerance must be positive");
  std::size_t max_iter = options.max_iterations;
  if (max_iter == 0) max_iter = std::min(p, std::max<std::size_t>(4 * k + 100, 300));
  max_iter = std::clamp(max_iter, k, p);

  GaussianStream stream(derive_seed(options.seed, SeedDomain::Lanczos));
  check_symmetry(op, stream);

  const auto np = static_cast<Eigen::Index>(p);
  const auto mmax = static_cast<Eigen::Index>(max_iter);
  Eigen::MatrixXd q(np, mmax);
  std::vector<double> alpha, beta;

  auto random_unit = [&](Eigen::Index m) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::VectorXd r(np);
      for (Eigen::Index i = 0; i < np; ++i) r[i] = stream.normal();
      reorthogonalize(q, m, r);
      const double n = r.norm();
      if (n > 1e-8) return Eigen::VectorXd(r / n);
    }
    fail(ErrorKind::NotConverged, "Lanczos could not find a new direction");
  };

  q.col(0) = random_unit(0);
  TopK best;
  const double eps = std::numeric_limits<double>::epsilon();

  auto ritz = [&](Eigen::Index m, bool& converged) {
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1))
                                : Eigen::VectorXd();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const Eigen::Index kk = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), m);
    const double last_beta = beta[static_cast<std::size_t>(m - 1)];
    const double top = std::abs(tri.eigenvalues()[m - 1]);
    TopK out;
    out.values.resize(kk);
    out.residuals.resize(kk);
    Eigen::MatrixXd s(m, kk);
    converged = kk == static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < kk; ++i) {
      const Eigen::Index src = m - 1 - i;
      out.values[i] = tri.eigenvalues()[src];
      s.col(i) = tri.eigenvectors().col(src);
      out.residuals[i] = std::abs(last_beta * tri.eigenvectors()(m - 1, src));
      const double allowed = std::max(options.tol * std::abs(out.values[i]), 64.0 * eps * top);
      if (out.residuals[i] > allowed) converged = false;
    }
    if (options.want_vectors) out.vectors = q.leftCols(m) * s;
    out.iterations = static_cast<std::size_t>(m);
    return out;
  };

  for (Eigen::Index j = 0; j < mmax; ++j) {
    Eigen::VectorXd w = apply_one(op, q.col(j));
    const double a = q.col(j).dot(w);
    alpha.push_back(a);
    w -= a * q.col(j);
    if (j > 0) w -= beta[j - 1] * q.col(j - 1);
    reorthogonalize(q, j + 1, w);
    double b = w.norm();
    const Eigen::Index m = j + 1;
    const bool exhausted = m == mmax;

    double scale = 0.0;
    for (double x : alpha) scale = std::max(scale, std::abs(x));
    for (double x : beta) scale = std::max(scale, std::abs(x));
    const bool breakdown = b <= 1e-12 * std::max(scale, std::numeric_limits<double>::min());
    beta.push_back(breakdown ? 0.0 : b);

    if (m >= static_cast<Eigen::Index>(k) &&
        (exhausted || breakdown || static_cast<std::size_t>(m) % options.check_every == 0)) {
      bool converged = false;
      best = ritz(m, converged);
      if (converged || m == np) {
        best.values.conservativeResize(static_cast<Eigen::Index>(k));
        return best;
      }
    }
    if (exhausted) break;
    q.col(m) = breakdown ? random_unit(m) : Eigen::VectorXd(w / b);
  }
  throw LanczosNotConverged("Lanczos did not converge within " + std::to_string(max_iter) + " iterations",
                            std::move(best));
}

std::array<double, 3> reference_levels(std::size_t d) {
  const double dd = static_cast<double>(d);
  return {(2.0 * dd + 1.0) / (4.0 * std::numbers::pi), 0.25, 1.0 / (2.0 * std::numbers::pi * dd)};
}

std::size_t grouped_count(std::size_t d) { return d * (d + 3) / 2; }

GroupAnalysis group_analysis(std::span<const double> eig, std::size_t d) {
  require(d >= 1, ErrorKind::InvalidArgument, "group analysis needs d >= 1");
  const std::size_t needed = grouped_count(d);
  require(eig.size() >= needed, ErrorKind::InvalidArgument,
          "group analysis needs at least d(d+3)/2 = " + std::to_string(needed) + " eigenvalues, got " +
              std::to_string(eig.size()));
  GroupAnalysis out;
  out.d = d;
  const auto ref = reference_levels(d);
  const std::array<std::size_t, 4> sizes{1, d, d * (d + 1) / 2 - 1, eig.size() - needed};
  std::size_t first = 0;
  for (std::size_t g = 0; g < 4; ++g) {
    GroupStats& s = out.groups[g];
    s.first = first;
    s.size = sizes[g];
    if (g < 3) s.predicted = ref[g];
    if (s.size > 0) {
      const auto block = eig.subspan(first, s.size);
      s.mean = std::accumulate(block.begin(), block.end(), 0.0) / static_cast<double>(s.size);
      s.min = *std::min_element(block.begin(), block.end());
      s.max = *std::max_element(block.begin(), block.end());
    }
    first += s.size;
  }
  const std::array<std::size_t, 3> edges{1, 1 + d, needed};
  for (std::size_t e = 0; e < 3; ++e) {
    const std::size_t last = edges[e];  // 1-based rank of the last member
    if (last < eig.size() && eig[last] > 0.0) out.gap_ratios[e] = eig[last - 1] / eig[last];
  }
  return out;
}

int group_of_rank(const GroupAnalysis& g, std::size_t rank) {
  for (int i = 0; i < 3; ++i)
    if (rank < g.groups[static_cast<std::size_t>(i)].first + g.groups[static_cast<std::size_t>(i)].size) return i;
  return 3;
}

namespace {

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& m, bool allow_rank_drop) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  require(rank >= 1, ErrorKind::InvalidArgument, "principal angles: degenerate subspace");
  require(allow_rank_drop || rank == m.cols(), ErrorKind::InvalidArgument,
          "principal angles: eigenvector block is rank deficient");
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), rank);
  return q;
}

}  // namespace

std::vector<double> principal_angles(const Eigen::MatrixXd& block, const Eigen::MatrixXd& predicted) {
  require(block.rows() == predicted.rows(), ErrorKind::InvalidArgument, "principal angles: row mismatch");
  require(block.cols() >= 1 && predicted.cols() >= 1, ErrorKind::InvalidArgument,
          "principal angles: empty subspace");
  const Eigen::MatrixXd qa = orthonormal_columns(block, false);
  const Eigen::MatrixXd qb = orthonormal_columns(predicted, true);
  const bool a_small = qa.cols() <= qb.cols();
  const Eigen::MatrixXd& small = a_small ? qa : qb;
  const Eigen::MatrixXd& large = a_small ? qb : qa;

  const Eigen::MatrixXd cross = large.transpose() * small;
  Eigen::JacobiSVD<Eigen::MatrixXd> cos_svd(cross);
  Eigen::JacobiSVD<Eigen::MatrixXd> sin_svd(small - large * cross);
  Eigen::VectorXd cosines = cos_svd.singularValues();  // descending
  Eigen::VectorXd sines = sin_svd.singularValues();    // descending
  const auto n = small.cols();
  std::vector<double> angles(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = std::min(cosines[i], 1.0);
    const double s = std::min(sines[n - 1 - i], 1.0);
    angles[static_cast<std::size_t>(i)] = c * c >= 0.5 ? std::asin(s) : std::acos(c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

SpectrumReport make_spectrum_report(const Eigen::VectorXd& eigenvalues, const Eigen::MatrixXd* vectors,
                                    const FeatureBasis* basis, std::size_t d, std::size_t p,
                                    std::string source) {
  SpectrumReport r;
  r.d = d;
  r.p = p;
  r.source = std::move(source);
  r.eigenvalues = eigenvalues;
  r.groups = group_analysis(std::span<const double>(eigenvalues.data(), static_cast<std::size_t>(eigenvalues.size())), d);
  r.reference = reference_levels(d);
  if (vectors != nullptr && basis != nullptr && vectors->cols() >= static_cast<Eigen::Index>(grouped_count(d))) {
    require(basis->d() == d && basis->p() == p, ErrorKind::Mismatch, "basis does not match the spectrum run");
    const std::size_t pairs = basis->pair_count();
    const std::array<Eigen::MatrixXd, 3> predicted{
        basis->block(0, 1), basis->block(1, d), basis->block(1 + d, pairs + d)};
    for (std::size_t g = 0; g < 3; ++g) {
      const auto& s = r.groups.groups[g];
      if (s.size == 0) continue;
      const Eigen::MatrixXd blk =
          vectors->middleCols(static_cast<Eigen::Index>(s.first), static_cast<Eigen::Index>(s.size));
      r.principal_angles[g] = principal_angles(blk, predicted[g]);
    }
  }
  return r;
}

}  // namespace relufim
