#include "relufim/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "relufim/error.hpp"

namespace relufim {

namespace {

using real = long double;
constexpr real kPiL = std::numbers::pi_v<long double>;

real gauss_factor(real a) { return std::sqrt(2.0L / kPiL) * std::exp(-a * a / 2.0L); }

real iota1_l(real a) { return gauss_factor(a) * (a + 1.0L / a); }
real iota2_l(real a) { return gauss_factor(a) * (a * a * a + 3.0L * a + 3.0L / a); }

void check_eta(double eta) {
  require(eta > 0.0 && eta < 0.5, ErrorKind::Domain, "eta must lie in (0, 1/2)");
}

void check_dim(double dk) { require(dk > 1.0, ErrorKind::Domain, "xi components need d1, d2 > 1"); }

// lhs <= rhs, or lhs >= rhs when !upper
Check make_check(std::string claim, double lhs, double rhs, bool upper) {
  Check c{std::move(claim), lhs, rhs, upper, false};
  c.pass = upper ? lhs <= rhs : lhs >= rhs;
  return c;
}

// Deviation allowance beyond delta for one norm or inner product.
double norm_allowance(VectorKind kind, const XiMachinery& xi) {
  return kind == VectorKind::Pair || kind == VectorKind::Gamma ? xi.xi : 0.0;
}

double pair_allowance(const GramReport& g, std::size_t a, std::size_t b, const XiMachinery& xi) {
  return g.both_gamma(a, b) ? xi.xi / (static_cast<double>(g.d) - 1.0) : 0.0;
}

bool deviations_hold(const GramReport& g, const XiMachinery& xi, double delta) {
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!(g.norm_deviation(k) <= delta + norm_allowance(g.kinds[k], xi))) return false;
  for (std::size_t b = 0; b < g.size(); ++b)
    for (std::size_t a = 0; a < b; ++a)
      if (!(g.pair_deviation(a, b) <= delta + pair_allowance(g, a, b, xi))) return false;
  return true;
}

}  // namespace

Iota iota(double a) {
  require(a > 0.0, ErrorKind::Domain, "iota requires a > 0");
  return {static_cast<double>(iota1_l(a)), static_cast<double>(iota2_l(a))};
}

double xi1(double d1, double eta) {
  check_eta(eta);
  check_dim(d1);
  const real d = d1, e = eta;
  const real a = std::pow(d, e);
  const real tail = 1.0L - 2.0L * std::exp(-std::pow(d, 2.0L * e) / 8.0L);
  const real ratio = (d + 2.0L) / (d + std::pow(d, 0.5L + e) + 2.0L * std::pow(d, 2.0L * e));
  const real one_minus = 1.0L - iota1_l(a);
  return static_cast<double>(1.0L - one_minus * one_minus * tail * ratio);
}

double xi2(double d2, double eta) {
  check_eta(eta);
  check_dim(d2);
  const real d = d2, e = eta;
  const real a = std::pow(d, e);
  const real tail = 1.0L - 2.0L * std::exp(-std::pow(d, 2.0L * e) / 8.0L);
  const real ratio = (d + 1.0L) / (d + std::pow(d, 0.5L + e) + std::pow(d, 2.0L * e));
  return static_cast<double>(1.5L - (3.0L - iota2_l(a)) / 2.0L * tail * ratio);
}

double xi1_bar(double d1, double eta) {
  check_eta(eta);
  check_dim(d1);
  const real d = d1, e = eta;
  return static_cast<double>((1.0L + 2.0L / d) * (1.0L + 1.0L / (std::pow(d, 0.5L - e) - 1.0L)) +
                             2.0L * (d + 2.0L) * std::exp(-std::pow(d, 2.0L * e) / 8.0L) - 1.0L);
}

double xi2_bar(double d2, double eta) {
  check_eta(eta);
  check_dim(d2);
  const real d = d2, e = eta;
  return static_cast<double>(1.5L * (1.0L + 1.0L / d) * (1.0L + 1.0L / (std::pow(d, 0.5L - e) - 1.0L)) +
                             2.0L * (d + 1.0L) * std::exp(-std::pow(d, 2.0L * e) / 8.0L) - 1.5L);
}

XiMachinery xi_of_d(std::size_t d, double eta, bool literal) {
  require(d > 4, ErrorKind::Domain, "d > 4 required (got d = " + std::to_string(d) + ")");
  check_eta(eta);
  XiMachinery m;
  m.d = d;
  m.eta = eta;
  m.literal = literal;
  m.d1 = d - 2;
  m.d2 = d - 1;
  const auto d1 = static_cast<double>(m.d1);
  const auto d2 = static_cast<double>(m.d2);
  m.iota_d1 = iota(std::pow(d1, eta));
  m.iota_d2 = iota(std::pow(d2, eta));
  m.xi1 = xi1(d1, eta);
  m.xi2 = xi2(d2, eta);
  m.xi1_bar = xi1_bar(d1, eta);
  m.xi2_bar = xi2_bar(d2, eta);
  m.xi1_bar_d2 = xi1_bar(d2, eta);
  m.xi = std::max({m.xi1, m.xi2, m.xi1_bar, literal ? m.xi1_bar_d2 : m.xi2_bar});
  return m;
}

std::uint64_t pair_count(std::size_t d) {
  const std::uint64_t n = d;
  // (d+1)(d+2) is even and d^2+3d+4 = (d+1)(d+2)+2 is even, so the
  // product is divisible by 8 in two exact steps.
  return ((n + 1) * (n + 2) / 2) * ((n * n + 3 * n + 4) / 2) / 2;
}

ProbabilityFloor probability_floor(std::size_t d, std::size_t p, double delta, double c) {
  require(d > 4, ErrorKind::Domain, "d > 4 required");
  require(p >= 1, ErrorKind::Domain, "p must be >= 1");
  require(delta > 0.0, ErrorKind::Domain, "delta must be > 0");
  require(c > 0.0, ErrorKind::Domain, "C must be > 0");
  const long double loss = static_cast<long double>(c) * static_cast<long double>(pair_count(d)) /
                           (static_cast<long double>(delta) * delta * static_cast<long double>(p));
  ProbabilityFloor f;
  f.vacuous = loss >= 1.0L;
  f.value = f.vacuous ? 0.0 : static_cast<double>(1.0L - loss);
  return f;
}

double observed_delta(const GramReport& g, const XiMachinery& xi) {
  double delta = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    delta = std::max(delta, g.norm_deviation(k) - norm_allowance(g.kinds[k], xi));
  for (std::size_t b = 0; b < g.size(); ++b)
    for (std::size_t a = 0; a < b; ++a) delta = std::max(delta, g.pair_deviation(a, b) - pair_allowance(g, a, b, xi));
  for (int guard = 0; guard < 64 && !deviations_hold(g, xi, delta); ++guard)
    delta = std::nextafter(delta, std::numeric_limits<double>::infinity());
  return delta;
}

bool CertificateReport::all_pass() const { return failures() == 0; }

std::size_t CertificateReport::failures() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.pass; }));
}

CertificateReport certify_run(const CertifyInputs& in, const XiMachinery& xi, double delta, double c) {
  require(in.quotients != nullptr && in.geometry != nullptr, ErrorKind::InvalidArgument,
          "certify_run needs quotients and basis geometry");
  const GramReport& g = *in.geometry;
  const QuotientTable& q = *in.quotients;
  require(in.j_run == g.run && q.run == g.run, ErrorKind::Mismatch,
          "certify_run inputs come from different runs (d, p, seed)");
  require(xi.d == g.d, ErrorKind::Mismatch, "xi machinery was evaluated for a different d");
  require(q.entries.size() == g.size(), ErrorKind::Mismatch, "quotient table does not match the basis");
  require(delta >= 0.0, ErrorKind::Domain, "delta must be >= 0");

  CertificateReport r;
  r.run = g.run;
  r.delta = delta;
  r.delta_star = observed_delta(g, xi);
  r.c = c;
  r.D = pair_count(g.d);
  if (delta > 0.0) r.floor = probability_floor(g.d, g.run.p, delta, c);
  else r.floor = {0.0, true};
  r.xi = xi;
  r.trace = in.trace;

  const double d = static_cast<double>(g.d);
  const double pi = std::numbers::pi;
  r.checks.push_back(make_check("trace_upper", in.trace, d / 2.0 * (1.0 + delta), true));

  const double top = (2.0 * d + 1.0) / (4.0 * pi);
  const double quad = 1.0 / (2.0 * pi * d);
  for (const auto& e : q.entries) {
    double floor = 0.0;
    switch (g.kinds[e.index]) {
      case VectorKind::Norm: floor = top * (1.0 - delta); break;
      case VectorKind::Row: floor = 0.25 * (1.0 - delta); break;
      case VectorKind::Pair:
      case VectorKind::Gamma: floor = quad * (1.0 - delta - xi.xi); break;
    }
    r.checks.push_back(make_check("quotient:" + e.id, e.value, floor, false));
  }

  for (std::size_t k = 0; k < g.size(); ++k)
    r.checks.push_back(
        make_check("norm:" + g.labels[k], g.norm_deviation(k), delta + norm_allowance(g.kinds[k], xi), true));
  for (std::size_t b = 0; b < g.size(); ++b)
    for (std::size_t a = 0; a < b; ++a)
      r.checks.push_back(make_check("inner:" + g.labels[a] + "|" + g.labels[b], g.pair_deviation(a, b),
                                    delta + pair_allowance(g, a, b, xi), true));

  const double remark = (3.0 + pi) / (2.0 * pi);
  r.checks.push_back(make_check("remark_constant", remark, 0.977, false));
  const double floor_sum = top + 0.25 * d + quad * (d * (d - 1.0) / 2.0 + d - 1.0);
  r.checks.push_back(make_check("quotient_floor_sum", floor_sum, remark * d / 2.0, false));
  r.checks.push_back(make_check("trace_lower", in.trace, remark * d / 2.0 * (1.0 - delta), false));
  return r;
}

ConstantEstimate estimate_constant(std::size_t d, std::size_t p, double delta, std::size_t seeds,
                                   std::uint64_t first_seed, const XiMachinery& xi) {
  require(seeds >= 1, ErrorKind::InvalidArgument, "need at least one seed");
  require(delta > 0.0, ErrorKind::Domain, "delta must be > 0");
  require(xi.d == d, ErrorKind::Mismatch, "xi machinery was evaluated for a different d");
  ConstantEstimate est;
  est.seeds = seeds;
  double total = 0.0;
  for (std::size_t s = 0; s < seeds; ++s) {
    const WeightMatrix w = generate_weights(d, p, first_seed + s);
    const FeatureBasis basis(w);
    const double ds = observed_delta(basis_geometry(basis), xi);
    total += ds;
    if (ds > delta) ++est.exceed;
  }
  est.fraction = static_cast<double>(est.exceed) / static_cast<double>(seeds);
  est.c_hat = est.fraction * delta * delta * static_cast<double>(p) / static_cast<double>(pair_count(d));
  est.mean_delta_star = total / static_cast<double>(seeds);
  return est;
}

}  // namespace relufim
