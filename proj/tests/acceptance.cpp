// One line per acceptance criterion; exits nonzero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "relufim/bounds.hpp"
#include "relufim/decomposition.hpp"
#include "relufim/empirical.hpp"
#include "relufim/kernel.hpp"
#include "relufim/operator.hpp"
#include "relufim/rng.hpp"
#include "relufim/spectrum.hpp"

using namespace relufim;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Largest analytic tail over all entries, without the rounding allowance.
double analytic_tail(const ColumnGeometry& g, std::size_t terms) {
  const SeriesCoefficients c(terms + 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.p(); ++i)
    for (std::size_t k = 0; k < g.p(); ++k) {
      const double z = i == k ? 1.0 : g.unit_gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      worst = std::max(worst, series_tail_bound(z, g.norm_product(i, k), terms, c));
    }
  return worst;
}

Outcome monte_carlo_agreement() {
  const auto w = generate_weights(10, 50, 1);
  EmpiricalOptions o;
  o.samples = 1'000'000;
  o.seed = 1;
  o.track_moments = true;
  const auto acc = empirical_accumulate(w, o);
  const Eigen::MatrixXd diff = acc.sum() / static_cast<double>(acc.count()) -
                               closed_form_J(column_geometry(w)).values();
  const Eigen::MatrixXd z = diff.cwiseAbs().cwiseQuotient(acc.standard_errors());
  return {z.maxCoeff() <= 5.0, fmt("max |J(n) - J| / se = %.3f over %td entries", z.maxCoeff(), z.size())};
}

Outcome series_identity() {
  const auto g = column_geometry(generate_weights(10, 50, 2));
  const auto s = series_J(g, {64, 0.0, 4096});
  const double diff = max_abs(s.values() - closed_form_J(g).values());
  const double bound = s.provenance().tail_bound;
  return {diff <= bound, fmt("max diff %.6e <= recorded bound %.6e (analytic tail %.6e)", diff, bound,
                             analytic_tail(g, 64))};
}

Outcome decomposition_identity() {
  bool pass = true;
  std::string detail;
  for (std::size_t d : {5, 10})
    for (std::size_t p : {50, 500}) {
      const auto w = generate_weights(d, p, 3);
      const auto g = column_geometry(w);
      const auto r = residual_R(g, {64, 0.0, 4096});
      const double gap =
          max_abs(closed_form_J(g).values() - assemble_approx(FeatureBasis(w)).values() - r.values());
      pass = pass && gap <= r.provenance().tail_bound;
      detail += fmt("%sd=%zu p=%zu: %.4e <= %.4e (analytic %.4e)", detail.empty() ? "" : "; ", d, p, gap, r.provenance().tail_bound,
                    analytic_tail(g, 64));
    }
  return {pass, detail};
}

Outcome residual_psd() {
  bool pass = true;
  double worst = 0.0;
  std::size_t runs = 0;
  for (std::size_t p : {50, 500})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = residual_R(column_geometry(generate_weights(10, p, seed)));
      const double trace = r.trace();
      const double lowest = dense_spectrum(r, false).values.minCoeff();
      pass = pass && lowest >= -1e-10 * trace;
      worst = std::min(worst, lowest / trace);
      ++runs;
    }
  return {pass, fmt("%zu runs, min eigenvalue / trace = %.3e", runs, worst)};
}

Outcome grouping() {
  const std::size_t d = 10;
  const auto e = dense_spectrum(closed_form_J(column_geometry(generate_weights(d, 2000, 4))), false);
  const auto values = std::span<const double>(e.values.data(), static_cast<std::size_t>(e.values.size()));
  const auto g = group_analysis(values, d);
  const auto ref = reference_levels(d);
  const auto within = [](double x, double target, double rel) { return std::abs(x - target) <= rel * target; };
  const double ratio = g.gap_ratios[1].value_or(0.0);
  const bool pass = g.groups[0].size == 1 && g.groups[1].size == 10 && g.groups[2].size == 54 &&
                    within(g.groups[0].mean, ref[0], 0.10) && within(g.groups[1].mean, ref[1], 0.10) &&
                    within(g.groups[2].mean, ref[2], 0.50) && ratio >= 3.0;
  return {pass, fmt("sizes %zu/%zu/%zu, means %.4f/%.4f/%.5f, gap ratio %.2f", g.groups[0].size,
                    g.groups[1].size, g.groups[2].size, g.groups[0].mean, g.groups[1].mean, g.groups[2].mean,
                    ratio)};
}

Outcome certificate() {
  const std::size_t d = 10;
  const auto w = generate_weights(d, 10000, 5);
  const FeatureBasis b(w);
  const auto geom = basis_geometry(b);
  const auto xi = xi_of_d(d);
  const double delta = observed_delta(geom, xi);
  const auto q = rayleigh_quotients(closed_form_operator(w), b);
  const double trace = 0.5 * w.entries().squaredNorm();
  const auto r = certify_run({w.run(), trace, &q, &geom}, xi, delta);
  std::size_t deviation = 0, floors = 0;
  bool trace_ok = false, remark_ok = false;
  for (const auto& c : r.checks) {
    if (c.claim.starts_with("norm:") || c.claim.starts_with("inner:")) deviation += c.pass ? 0 : 1;
    if (c.claim.starts_with("quotient:")) floors += c.pass ? 0 : 1;
    if (c.claim == "trace_upper") trace_ok = c.pass;
    if (c.claim == "remark_constant") remark_ok = c.pass;
  }
  const bool trace_direct = trace <= 0.5 * static_cast<double>(d) * (1.0 + delta);
  const bool remark_direct = (3.0 + kPi) / (2.0 * kPi) >= 0.977;
  const bool pass = deviation == 0 && floors == 0 && trace_ok && trace_direct && remark_ok && remark_direct;
  return {pass, fmt("delta* = %.4f, %zu checks, %zu deviation and %zu quotient failures", delta, r.checks.size(),
                    deviation, floors)};
}

Outcome gaussian_expectations() {
  const std::size_t d = 20;
  const std::uint64_t n = 1'000'000;
  GaussianStream rng(derive_seed(8, SeedDomain::Oracle));
  std::vector<double> z(d);
  double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
  for (std::uint64_t k = 0; k < n; ++k) {
    double norm2 = 0;
    for (auto& x : z) {
      x = rng.normal();
      norm2 += x * x;
    }
    const double a = static_cast<double>(d) * z[0] * z[0] * z[1] * z[1] / norm2;
    const double b = static_cast<double>(d) * z[0] * z[0] * z[0] * z[0] / norm2;
    s1 += a;
    q1 += a * a;
    s2 += b;
    q2 += b * b;
  }
  const double nd = static_cast<double>(n);
  const double m1 = s1 / nd, m2 = s2 / nd;
  const double se1 = std::sqrt((q1 / nd - m1 * m1) / (nd - 1));
  const double se2 = std::sqrt((q2 / nd - m2 * m2) / (nd - 1));
  const double lo1 = 1 - xi1(18, 0.25), hi1 = 1 + xi1_bar(18, 0.25);
  const double lo2 = 3 - 2 * xi2(19, 0.25), hi2 = 3 + 2 * xi2_bar(19, 0.25);
  const bool pass = m1 >= lo1 - 4 * se1 && m1 <= hi1 + 4 * se1 && m2 >= lo2 - 4 * se2 && m2 <= hi2 + 4 * se2;
  return {pass, fmt("E1 = %.4f +- %.4f in [%.4f, %.4f]; E2 = %.4f +- %.4f in [%.4f, %.4f]", m1, se1, lo1, hi1, m2,
                    se2, lo2, hi2)};
}

Outcome convergence_rate() {
  double small = 0, large = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto w = generate_weights(10, 50, seed);
    const Eigen::MatrixXd exact = closed_form_J(column_geometry(w)).values();
    EmpiricalOptions o;
    o.seed = seed;
    o.samples = 10'000;
    small += max_abs(empirical_J(w, o).values() - exact);
    o.seed = seed + 1000;
    o.samples = 40'000;
    large += max_abs(empirical_J(w, o).values() - exact);
  }
  const double ratio = small / large;
  return {ratio >= 1.7 && ratio <= 2.3, fmt("mean error %.4e -> %.4e, ratio %.3f", small / 10, large / 10, ratio)};
}

Outcome property_suites() {
  std::string detail;
  bool pass = true;

  const std::size_t d = 10;
  const auto w = generate_weights(d, 500, 6);
  const FeatureBasis b(w);
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(500);
  for (std::size_t g = 0; g < d; ++g) sum += b.vector(b.gamma_index(g));
  const double sumgamma = sum.cwiseAbs().maxCoeff();
  pass = pass && sumgamma <= 1e-12 * std::sqrt(static_cast<double>(d));
  detail += fmt("sum of gamma vectors %.1e; ", sumgamma);

  const auto j = closed_form_J(column_geometry(w));
  const auto e = dense_spectrum(j);
  const double trace = 0.5 * w.entries().squaredNorm();
  const double trace_err = std::abs(e.values.sum() - trace) / trace;
  pass = pass && trace_err <= 1e-8;
  detail += fmt("trace rule %.1e; ", trace_err);

  LanczosOptions lo;
  lo.k = grouped_count(d);
  lo.tol = 1e-10;
  lo.seed = 6;
  lo.want_vectors = false;
  const auto top = topk_spectrum(closed_form_operator(w), lo);
  double lanczos_err = 0;
  for (Eigen::Index k = 0; k < top.values.size(); ++k)
    lanczos_err = std::max(lanczos_err, std::abs(top.values[k] - e.values[k]) / std::abs(e.values[k]));
  pass = pass && lanczos_err <= 1e-8;
  detail += fmt("Lanczos vs dense %.1e over %td; ", lanczos_err, top.values.size());

  const double sigma2 = 2.5;
  EmpiricalOptions o;
  o.samples = 200'000;
  o.seed = 6;
  const auto emp = empirical_J(w, o, sigma2);
  const auto plain = dense_spectrum(emp);
  const auto fim = dense_spectrum(Eigen::MatrixXd(emp.fisher_information()));
  double angle = 0;
  const auto n = static_cast<Eigen::Index>(grouped_count(d));
  for (Eigen::Index cols : {Eigen::Index{1}, Eigen::Index{1 + 10}, n})
    for (double a : principal_angles(plain.vectors.leftCols(cols), fim.vectors.leftCols(cols)))
      angle = std::max(angle, a);
  pass = pass && angle <= 1e-8;
  detail += fmt("sigma^2 scaling angle %.1e", angle);
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"closed form vs Monte Carlo (d=10, p=50, n=1e6)", monte_carlo_agreement},
      {"series identity (N=64)", series_identity},
      {"decomposition identity J = approx + R + tail", decomposition_identity},
      {"residual R is PSD", residual_psd},
      {"eigenvalue grouping at d=10, p=2000", grouping},
      {"certificate at d=10, p=10000", certificate},
      {"expectation spot-check at d=20", gaussian_expectations},
      {"empirical convergence rate", convergence_rate},
      {"property suites", property_suites},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
