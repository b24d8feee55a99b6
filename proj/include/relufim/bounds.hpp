#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relufim/decomposition.hpp"
#include "relufim/weights.hpp"

namespace relufim {

struct Iota {
  double first;   // sqrt(2/pi) (a + 1/a) exp(-a^2/2)
  double second;  // sqrt(2/pi) (a^3 + 3a + 3/a) exp(-a^2/2)
};

Iota iota(double a);

// Component bound functions, evaluated at a = t = dk^eta.
double xi1(double d1, double eta);
double xi2(double d2, double eta);
double xi1_bar(double d1, double eta);
double xi2_bar(double d2, double eta);

/// The deviation budget xi(d) and its components at d1 = d - 2, d2 = d - 1.
struct XiMachinery {
  std::size_t d = 0;
  double eta = 0.25;
  bool literal = false;  // use xi1_bar(d2) as the fourth term, as printed
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  Iota iota_d1{};  // iota at a = d1^eta
  Iota iota_d2{};  // iota at a = d2^eta
  double xi1 = 0.0;       // xi1(d1)
  double xi2 = 0.0;       // xi2(d2)
  double xi1_bar = 0.0;   // xi1_bar(d1)
  double xi2_bar = 0.0;   // xi2_bar(d2)
  double xi1_bar_d2 = 0.0;
  double xi = 0.0;
};

/// Requires d > 4 and 0 < eta < 1/2.
XiMachinery xi_of_d(std::size_t d, double eta = 0.25, bool literal = false);

/// D = (d+1)(d+2)(d^2+3d+4)/8, the number of inner products among the
/// d(d+3)/2 + 1 basis vectors (norms included).
std::uint64_t pair_count(std::size_t d);

struct ProbabilityFloor {
  double value = 0.0;
  bool vacuous = false;  // C D / (delta^2 p) >= 1
};

/// 1 - C D / (delta^2 p), clipped below at 0.
ProbabilityFloor probability_floor(std::size_t d, std::size_t p, double delta, double c);

/// Smallest delta for which every norm/inner-product deviation bound holds
/// for this basis (nudged up a few ulps against rounding on re-evaluation).
double observed_delta(const GramReport& geom, const XiMachinery& xi);

struct Check {
  std::string claim;
  double lhs = 0.0;
  double rhs = 0.0;
  bool upper = true;  // lhs <= rhs when true, lhs >= rhs otherwise
  bool pass = false;

  double margin() const { return upper ? rhs - lhs : lhs - rhs; }
};

struct CertificateReport {
  RunId run;
  double delta = 0.0;
  double delta_star = 0.0;
  double c = 1.0;
  std::uint64_t D = 0;
  ProbabilityFloor floor;
  XiMachinery xi;
  double trace = 0.0;
  std::vector<Check> checks;

  bool all_pass() const;
  std::size_t failures() const;
};

struct CertifyInputs {
  RunId j_run;
  double trace = 0.0;  // tr(J)
  const QuotientTable* quotients = nullptr;
  const GramReport* geometry = nullptr;
};

/// Evaluates at the given delta: the trace upper bound, every Rayleigh
/// quotient floor, every norm and inner-product deviation bound, and the
/// quotient-floor sum against (3+pi)/(2pi) d/2. Throws Mismatch when the
/// inputs come from different runs.
CertificateReport certify_run(const CertifyInputs& in, const XiMachinery& xi, double delta, double c = 1.0);

struct ConstantEstimate {
  std::size_t seeds = 0;
  std::size_t exceed = 0;  // seeds whose observed delta exceeds `delta`
  double fraction = 0.0;
  double c_hat = 0.0;      // fraction * delta^2 p / D
  double mean_delta_star = 0.0;
};

/// Fraction of seeds first_seed .. first_seed + seeds - 1 whose observed
/// delta exceeds `delta`, and the implied constant under the Chebyshev form
/// P <= C D / (delta^2 p).
ConstantEstimate estimate_constant(std::size_t d, std::size_t p, double delta, std::size_t seeds,
                                   std::uint64_t first_seed, const XiMachinery& xi);

}  // namespace relufim
