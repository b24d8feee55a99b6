#pragma once

// Independent reference values and brute-force implementations used by the
// tests. Nothing here calls into the library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>
#include <Eigen/Dense>

namespace oracle {

// Frozen high-precision values (50-digit evaluation).
inline constexpr double f_half = 1.12782479158358808;          // f(0.5)
inline constexpr double iota1_at_1 = 0.967882898076573399;     // sqrt(2/pi) 2 e^{-1/2}
inline constexpr double iota2_at_1 = 3.38759014326800690;      // sqrt(2/pi) 7 e^{-1/2}
inline constexpr double xi1_d8 = 1.06848227000462119;          // eta = 1/4
inline constexpr double xi2_d9 = 1.59164801153250087;
inline constexpr double xi1_bar_d8 = 16.1271715292569961;
inline constexpr double xi2_bar_d9 = 16.1891612487935084;
inline constexpr double xi1_bar_d9 = 17.0121729602490356;
inline constexpr double xi1_d18 = 1.0574658438636475;
inline constexpr double xi1_bar_d18 = 24.6959879207716929;
inline constexpr double xi2_d19 = 1.57306985689164595;
inline constexpr double xi2_bar_d19 = 24.7273194878158228;
inline constexpr double coeff_tail_after_64 = 0.000178809437529365850;  // pi/2 - 1 - sum_{n<=64} c_n
inline constexpr double coeff_sum_1_to_200 = 0.0707633663909038813;
inline constexpr double f_half_minus_series10 = 2.28227e-11;

inline constexpr double pi = std::numbers::pi;

// c_n = binom(2n, n) / (4^n (2n+1)(2n+2)) via log-gamma.
inline double coefficient(std::size_t n) {
  const double x = static_cast<double>(n);
  const double log_binom = std::lgamma(2.0 * x + 1.0) - 2.0 * std::lgamma(x + 1.0);
  return std::exp(log_binom - x * std::log(4.0)) / ((2.0 * x + 1.0) * (2.0 * x + 2.0));
}

// (|u||v| / 2pi) ((pi - theta) cos theta + sin theta), long double throughout.
inline double arc_cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  long double uu = 0, vv = 0, uv = 0;
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    uu += static_cast<long double>(u[k]) * u[k];
    vv += static_cast<long double>(v[k]) * v[k];
    uv += static_cast<long double>(u[k]) * v[k];
  }
  const long double a = std::sqrt(uu) * std::sqrt(vv);
  long double c = uv / a;
  c = std::clamp(c, -1.0L, 1.0L);
  const long double theta = std::acos(c);
  const long double pi_l = std::numbers::pi_v<long double>;
  return static_cast<double>(a / (2 * pi_l) * ((pi_l - theta) * c + std::sin(theta)));
}

inline Eigen::MatrixXd closed_form(const Eigen::MatrixXd& w) {
  const auto p = w.cols();
  Eigen::MatrixXd j(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index k = 0; k < p; ++k)
      j(i, k) = i == k ? w.col(i).squaredNorm() / 2.0 : arc_cosine(w.col(i), w.col(k));
  return j;
}

// Feature vectors straight from their definitions, one per row in canonical
// order: v0, W_1..W_d, v(a,b) for a<b, v(g).
inline Eigen::MatrixXd basis(const Eigen::MatrixXd& w) {
  const auto d = w.rows();
  const auto p = w.cols();
  const double sd = std::sqrt(static_cast<double>(d));
  std::vector<Eigen::RowVectorXd> rows;
  Eigen::RowVectorXd v0(p);
  for (Eigen::Index i = 0; i < p; ++i) v0[i] = w.col(i).norm() / sd;
  rows.push_back(v0);
  for (Eigen::Index l = 0; l < d; ++l) rows.push_back(w.row(l));
  auto pair = [&](Eigen::Index a, Eigen::Index b) {
    Eigen::RowVectorXd v(p);
    for (Eigen::Index i = 0; i < p; ++i) v[i] = sd * w(a, i) * w(b, i) / w.col(i).norm();
    return v;
  };
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = a + 1; b < d; ++b) rows.push_back(pair(a, b));
  for (Eigen::Index g = 0; g < d; ++g) rows.push_back((pair(g, g) - v0) / std::sqrt(2.0));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = rows[k];
  return out;
}

// Symmetric eigenvalues, descending, by Eigen's dense solver.
inline Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

}  // namespace oracle
