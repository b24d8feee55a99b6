#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>
#include <Eigen/Dense>

#include "relufim/decomposition.hpp"
#include "relufim/error.hpp"
#include "relufim/kernel.hpp"
#include "relufim/operator.hpp"

namespace relufim {

/// Eigenpairs sorted by decreasing eigenvalue; vectors are columns.
struct Eigenpairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // empty when not requested
};

/// Full symmetric eigendecomposition (Householder tridiagonalization and
/// implicit symmetric QR). Rejects non-symmetric input.
Eigenpairs dense_spectrum(const KernelMatrix& j, bool want_vectors = true);
/// Same, consuming the storage of a symmetric matrix.
Eigenpairs dense_spectrum(Eigen::MatrixXd&& symmetric, bool want_vectors = true);

struct LanczosOptions {
  std::size_t k = 1;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 0;  // 0: min(p, max(4k + 100, 300))
  std::size_t check_every = 8;
  bool want_vectors = true;
};

struct TopK {
  Eigen::VectorXd values;     // descending
  Eigen::MatrixXd vectors;    // p x k
  Eigen::VectorXd residuals;  // |A v - lambda v| per pair
  std::size_t iterations = 0;
};

class LanczosNotConverged : public Error {
 public:
  LanczosNotConverged(const std::string& what, TopK best)
      : Error(ErrorKind::NotConverged, what), best_(std::move(best)) {}
  const TopK& best() const noexcept { return best_; }

 private:
  TopK best_;
};

/// Top-k eigenpairs of a symmetric operator by Lanczos with full
/// reorthogonalization. A pair is accepted once its Ritz residual is at most
/// tol |lambda| (or 64 eps |lambda_max| for numerically zero eigenvalues).
/// Invariant-subspace breakdowns restart from a fresh random direction.
TopK topk_spectrum(const SymmetricOperator& op, const LanczosOptions& options);

struct GroupStats {
  std::size_t first = 0;  // 0-based rank of the first member
  std::size_t size = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::optional<double> predicted;
};

/// Partition [1 | d | d(d+1)/2 - 1 | rest] of a descending spectrum.
struct GroupAnalysis {
  std::size_t d = 0;
  std::array<GroupStats, 4> groups;
  /// lambda_k / lambda_{k+1} at the three group edges; empty when the
  /// following eigenvalue does not exist or is not positive.
  std::array<std::optional<double>, 3> gap_ratios;
};

std::array<double, 3> reference_levels(std::size_t d);
std::size_t grouped_count(std::size_t d);  // 1 + d + d(d+1)/2 - 1 = d(d+3)/2

GroupAnalysis group_analysis(std::span<const double> descending, std::size_t d);

/// Principal angles (radians, ascending) between span(block) and
/// span(predicted). Sines are used for small angles and cosines for large
/// ones so that both ends keep full accuracy.
std::vector<double> principal_angles(const Eigen::MatrixXd& block, const Eigen::MatrixXd& predicted);

struct SpectrumReport {
  std::size_t d = 0;
  std::size_t p = 0;
  std::string source;
  Eigen::VectorXd eigenvalues;
  GroupAnalysis groups;
  std::array<double, 3> reference{};
  /// Per leading group: angles between its eigenvector block and the
  /// predicted span ({v0}, {W_l}, {v(a,b), v(g)}). Empty without vectors.
  std::array<std::vector<double>, 3> principal_angles;
};

/// Group index (0..3) of a 0-based rank.
int group_of_rank(const GroupAnalysis& g, std::size_t rank);

SpectrumReport make_spectrum_report(const Eigen::VectorXd& eigenvalues, const Eigen::MatrixXd* vectors,
                                    const FeatureBasis* basis, std::size_t d, std::size_t p,
                                    std::string source);

}  // namespace relufim
