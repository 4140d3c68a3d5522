#include "rkm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rkm/solvers.hpp"

namespace rkm {

BoundConstants bound_constants(const SvdBasis& basis, double frob_norm,
                               int level) {
  const Vector& sigma = basis.sigma;
  const int m = static_cast<int>(basis.v.rows());
  if (level < 1 || level > m)
    throw config_error("bound_constants: level " + std::to_string(level) +
                       " outside [1, " + std::to_string(m) + "]");

  BoundConstants c;
  c.level = level;
  c.frob_norm = frob_norm;
  const double frob_sq = frob_norm * frob_norm;
  const double sigma_level = (level <= sigma.size()) ? sigma(level - 1) : 0.0;
  c.c1 = sigma_level * sigma_level / frob_sq;
  double tail = 0.0;
  for (Eigen::Index i = level; i < sigma.size(); ++i)
    tail += sigma(i) * sigma(i);
  c.c2 = tail / frob_sq;
  if (c.c1 > 0.0) {
    c.alpha = c.c2 / c.c1;
    c.alpha_defined = true;
  }
  return c;
}

std::pair<double, double> conditional_band_expectation(
    const LinearSystem& system, const FrequencySplit& split, const Vector& e,
    const Vector* eta) {
  const Matrix& a = system.a;
  const SvdBasis& basis = *split.basis;
  const int level = split.level;
  const Eigen::Index n = a.rows();
  const Eigen::Index m = a.cols();
  const Eigen::Index r = basis.sigma.size();
  if (e.size() != m)
    throw config_error(
        "conditional_band_expectation: error vector length mismatch");
  if (eta && eta->size() != n)
    throw config_error(
        "conditional_band_expectation: noise vector length mismatch");

  const Vector p = row_probabilities(a);
  const Vector norms_sq = a.rowwise().squaredNorm();

  // The updated error for row i is e + t_i a_i with
  // t_i = (eta_i - <a_i, e>) / ||a_i||^2; its coefficients in the right
  // singular basis are c + t_i * (row i of U Sigma).
  Vector coeff = basis.v.transpose() * e;
  Vector t = -(a * e);
  if (eta) t += *eta;
  t.array() /= norms_sq.array();

  Matrix w = basis.u * basis.sigma.asDiagonal();  // n x r
  w.array().colwise() *= t.array();
  w.rowwise() += coeff.head(r).transpose();

  const Eigen::Index level_r = std::min<Eigen::Index>(level, r);
  double low = p.dot(w.leftCols(level_r).rowwise().squaredNorm().matrix());
  double high =
      p.dot(w.rightCols(r - level_r).rowwise().squaredNorm().matrix());
  // Coefficients beyond the factorization rank are untouched by any row.
  if (level > r) low += coeff.segment(r, level - r).squaredNorm();
  high += coeff.tail(m - std::max<Eigen::Index>(level, r)).squaredNorm();
  return {low, high};
}

double conditional_error_expectation(const LinearSystem& system,
                                     const Vector& e, const Vector* eta) {
  const Matrix& a = system.a;
  if (e.size() != a.cols())
    throw config_error(
        "conditional_error_expectation: error vector length mismatch");
  if (eta && eta->size() != a.rows())
    throw config_error(
        "conditional_error_expectation: noise vector length mismatch");

  const Vector p = row_probabilities(a);
  const Vector norms_sq = a.rowwise().squaredNorm();
  const Vector ae = a * e;
  const double e_sq = e.squaredNorm();

  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double eta_i = eta ? (*eta)(i) : 0.0;
    const double t = (eta_i - ae(i)) / norms_sq(i);
    total += p(i) * (e_sq + 2.0 * t * ae(i) + t * t * norms_sq(i));
  }
  return total;
}

std::pair<double, double> exact_step_bound(const BoundConstants& c,
                                           double e_low, double e_high) {
  return {(1.0 - c.c1) * e_low + c.c2 * e_high,
          c.c2 * e_low + (1.0 + c.c2) * e_high};
}

std::pair<double, double> noisy_step_bound(const BoundConstants& c,
                                           double e_low, double e_high,
                                           double delta_abs) {
  if (delta_abs < 0.0)
    throw config_error("noisy_step_bound: delta_abs must be nonnegative");
  auto [low, high] = exact_step_bound(c, e_low, e_high);
  const double frob_sq = c.frob_norm * c.frob_norm;
  const double noise = delta_abs * delta_abs / frob_sq +
                       (2.0 * delta_abs / c.frob_norm) * std::sqrt(c.c2) *
                           std::sqrt(e_low + e_high);
  return {low + noise, high + noise};
}

Propagation make_propagation(const BoundConstants& c) {
  const double c1 = c.c1;
  const double c2 = c.c2;
  Propagation p;
  p.d << 1.0 - c1, c2, c2, 1.0 + c2;

  const double trace_shift = c1 + c2;
  const double s = std::hypot(trace_shift, 2.0 * c2);
  p.lambda_plus = (2.0 - c1 + c2 + s) / 2.0;
  p.lambda_minus = (2.0 - c1 + c2 - s) / 2.0;

  if (c2 > 0.0) {
    // (2c2, c1+c2+s) solves the first eigen equation for lambda_plus; the
    // orthogonal direction is the other eigenvector.  This form avoids the
    // cancellation in s - (c1+c2) when c2 << c1.
    Eigen::Vector2d plus(2.0 * c2, trace_shift + s);
    p.v_plus = plus.normalized();
    p.v_minus = Eigen::Vector2d(p.v_plus(1), -p.v_plus(0));
  } else {
    p.v_plus = Eigen::Vector2d(0.0, 1.0);
    p.v_minus = Eigen::Vector2d(1.0, 0.0);
  }

  if (c.alpha_defined && c.alpha <= 1e-3) {
    p.approx_valid = true;
    p.lambda_plus_approx = 1.0 + c1 * c.alpha;
    p.lambda_minus_approx = 1.0 - c1;
    p.approx_deviation_plus = std::abs(p.lambda_plus - p.lambda_plus_approx);
    p.approx_deviation_minus =
        std::abs(p.lambda_minus - p.lambda_minus_approx);
  }
  return p;
}

std::pair<double, double> propagate(const Propagation& p, std::int64_t k,
                                    double e_low0, double e_high0) {
  if (k < 0) throw config_error("propagate: k must be nonnegative");
  Eigen::Vector2d w(e_low0, e_high0);
  if (k == 0) return {w(0), w(1)};
  if (k <= 100) {
    for (std::int64_t j = 0; j < k; ++j) w = p.d * w;
    return {w(0), w(1)};
  }
  const double a_minus = p.v_minus.dot(w);
  const double a_plus = p.v_plus.dot(w);
  const double k_d = static_cast<double>(k);
  w = a_minus * std::pow(p.lambda_minus, k_d) * p.v_minus +
      a_plus * std::pow(p.lambda_plus, k_d) * p.v_plus;
  return {w(0), w(1)};
}

namespace {

// sum_{j<k} lambda^j, stable across lambda = 1.
double geometric_sum(double lambda, std::int64_t k) {
  if (std::abs(1.0 - lambda) < 1e-12) return static_cast<double>(k);
  return (1.0 - std::pow(lambda, static_cast<double>(k))) / (1.0 - lambda);
}

}  // namespace

std::pair<double, double> noisy_propagation(const BoundConstants& c,
                                            double eps, double delta_abs,
                                            std::int64_t k, double e_low0,
                                            double e_high0) {
  if (eps <= 0.0)
    throw config_error("noisy_propagation: eps must be positive");
  if (delta_abs < 0.0)
    throw config_error("noisy_propagation: delta_abs must be nonnegative");
  if (k < 0) throw config_error("noisy_propagation: k must be nonnegative");

  BoundConstants barred = c;
  barred.c1 = c.c1 - eps * c.c2;
  barred.c2 = (1.0 + eps) * c.c2;
  if (barred.c1 <= 0.0)
    throw config_error(
        "noisy_propagation: c1 - eps*c2 must stay positive; choose a smaller "
        "eps");
  barred.alpha_defined = true;
  barred.alpha = barred.c2 / barred.c1;

  const Propagation p = make_propagation(barred);
  auto [low, high] = propagate(p, k, e_low0, e_high0);

  if (delta_abs > 0.0 && k > 0) {
    const double frob_sq = c.frob_norm * c.frob_norm;
    const double scale = (1.0 + 1.0 / eps) * delta_abs * delta_abs / frob_sq;
    const Eigen::Vector2d ones(1.0, 1.0);
    const Eigen::Vector2d source =
        p.v_minus.dot(ones) * geometric_sum(p.lambda_minus, k) * p.v_minus +
        p.v_plus.dot(ones) * geometric_sum(p.lambda_plus, k) * p.v_plus;
    low += scale * source(0);
    high += scale * source(1);
  }
  return {low, high};
}

double contraction_envelope(const SpectralConstants& spectral, std::int64_t k,
                            double e0_sq, double delta_abs) {
  if (k < 0) throw config_error("contraction_envelope: k must be nonnegative");
  if (delta_abs < 0.0)
    throw config_error("contraction_envelope: delta_abs must be nonnegative");
  const double rate = 1.0 - 1.0 / (spectral.kappa * spectral.kappa);
  return std::pow(rate, static_cast<double>(k)) * e0_sq +
         delta_abs * delta_abs / (spectral.sigma_min * spectral.sigma_min);
}

SgdStatistics sgd_statistics(const LinearSystem& system, const Vector& x,
                             const Vector& b_used) {
  const Matrix& a = system.a;
  if (x.size() != a.cols())
    throw config_error("sgd_statistics: x length mismatch");
  const Vector norms_sq = a.rowwise().squaredNorm();
  const double frob_sq = norms_sq.sum();
  const double n = static_cast<double>(a.rows());

  Vector r = a * x - b_used;
  SgdStatistics stats;
  stats.mean = (a.transpose() * r) / n;

  Matrix scaled = a;
  scaled.array().colwise() *= (r.array() / norms_sq.array().sqrt());
  stats.covariance = (frob_sq / (n * n)) * (scaled.transpose() * scaled) -
                     stats.mean * stats.mean.transpose();
  return stats;
}

SgdStatistics sgd_statistics_by_sum(const LinearSystem& system,
                                    const Vector& x, const Vector& b_used) {
  const Matrix& a = system.a;
  if (x.size() != a.cols())
    throw config_error("sgd_statistics_by_sum: x length mismatch");
  const Vector p = row_probabilities(a);
  const Vector norms_sq = a.rowwise().squaredNorm();
  const double frob_sq = norms_sq.sum();

  SgdStatistics stats;
  stats.mean = Vector::Zero(a.cols());
  Matrix second = Matrix::Zero(a.cols(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Vector g = partial_gradient(system, x, b_used, static_cast<int>(i),
                                frob_sq, norms_sq(i));
    stats.mean += p(i) * g;
    second += p(i) * (g * g.transpose());
  }
  stats.covariance = second - stats.mean * stats.mean.transpose();
  return stats;
}

BandErrorRecord band_errors(const FrequencySplit& split, const Vector& x,
                            const Vector& x_true, const LinearSystem& system,
                            const Vector& b_used) {
  if (x.size() != x_true.size())
    throw config_error("band_errors: iterate and solution lengths differ");
  Vector e = x - x_true;
  BandErrorRecord rec;
  auto [low, high] = band_energies(split, e);
  rec.e_low = low;
  rec.e_high = high;
  rec.e_total = e.squaredNorm();
  rec.residual_sq = residual_sq(system, x, b_used);
  return rec;
}

}  // namespace rkm
