#pragma once

#include <cstdint>
#include <utility>

#include "rkm/linalg.hpp"
#include "rkm/problems.hpp"

namespace rkm {

// Spectral constants steering the two-band error recursion.  With truncation
// level L:
//   c1 = sigma_L^2 / ||A||_F^2      (low-band contraction speed)
//   c2 = sum_{i>L} sigma_i^2 / ||A||_F^2   (cross-band leakage)
// alpha = c2/c1 is undefined when sigma_L = 0.
struct BoundConstants {
  int level = 0;
  double c1 = 0.0;
  double c2 = 0.0;
  double frob_norm = 0.0;
  double alpha = 0.0;
  bool alpha_defined = false;
};

BoundConstants bound_constants(const SvdBasis& basis, double frob_norm,
                               int level);

// Exact conditional expectations (E ||P_low e_next||^2, E ||P_high e_next||^2)
// of the randomized step from error e, as a direct weighted sum over all rows:
//   sum_i p_i ||P_band((I - a_i a_i^T/||a_i||^2) e + eta_i a_i/||a_i||^2)||^2.
// eta = nullptr means exact data.
std::pair<double, double> conditional_band_expectation(
    const LinearSystem& system, const FrequencySplit& split, const Vector& e,
    const Vector* eta = nullptr);

// Same conditional expectation for the full squared error, computed without
// any singular basis; serves as an independent cross-check of the band sums.
double conditional_error_expectation(const LinearSystem& system,
                                     const Vector& e,
                                     const Vector* eta = nullptr);

// One-step band recursion bounds for exact data:
//   low  <= (1 - c1) e_low + c2 e_high
//   high <= c2 e_low + (1 + c2) e_high
std::pair<double, double> exact_step_bound(const BoundConstants& c,
                                           double e_low, double e_high);

// Noisy variant; both components gain
//   delta^2/||A||_F^2 + (2 delta/||A||_F) sqrt(c2) ||e||.
std::pair<double, double> noisy_step_bound(const BoundConstants& c,
                                           double e_low, double e_high,
                                           double delta_abs);

// Two-band propagation matrix D = [[1-c1, c2], [c2, 1+c2]] with closed-form
// eigenpairs.  When alpha <= 1e-3 the first-order forms
// lambda_plus ~ 1 + c1*alpha, lambda_minus ~ 1 - c1 are recorded along with
// their deviation from the exact values.
struct Propagation {
  Eigen::Matrix2d d;
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  Eigen::Vector2d v_plus;
  Eigen::Vector2d v_minus;
  bool approx_valid = false;
  double lambda_plus_approx = 0.0;
  double lambda_minus_approx = 0.0;
  double approx_deviation_plus = 0.0;
  double approx_deviation_minus = 0.0;
};

Propagation make_propagation(const BoundConstants& c);

// D^k applied to (e_low0, e_high0).  k = 0 returns the input unchanged.
// Small powers multiply iteratively; large ones go through the
// eigendecomposition.
std::pair<double, double> propagate(const Propagation& p, std::int64_t k,
                                    double e_low0, double e_high0);

// k-step noisy bound: the cross term is split with Young's inequality at
// weight eps, giving modified constants c1_bar = c1 - eps*c2 (must stay
// positive) and c2_bar = (1+eps)*c2, plus the accumulated source
//   (1 + 1/eps) delta^2/||A||_F^2 * sum_{j<k} D_bar^j (1,1)^T.
// The geometric sum is evaluated per eigenvalue, so an eigenvalue at 1
// (singular I - D_bar) degrades gracefully to the partial-sum value k.
std::pair<double, double> noisy_propagation(const BoundConstants& c,
                                            double eps, double delta_abs,
                                            std::int64_t k, double e_low0,
                                            double e_high0);

// Classical expected-error envelope (1 - 1/kappa^2)^k ||e_0||^2, plus
// delta^2/sigma_min^2 under noise.
double contraction_envelope(const SpectralConstants& spectral, std::int64_t k,
                            double e0_sq, double delta_abs);

// Mean and covariance of the importance-weighted stochastic gradient g_i at
// x.  sgd_statistics uses the closed forms
//   mean = (1/n) A^T (A x - b)
//   cov  = (||A||_F^2/n^2) sum_i r_i^2 a_i a_i^T / ||a_i||^2 - mean mean^T,
// sgd_statistics_by_sum accumulates the literal weighted sums over row draws.
struct SgdStatistics {
  Vector mean;
  Matrix covariance;
};

SgdStatistics sgd_statistics(const LinearSystem& system, const Vector& x,
                             const Vector& b_used);

SgdStatistics sgd_statistics_by_sum(const LinearSystem& system,
                                    const Vector& x, const Vector& b_used);

// One monitored iterate: squared band masses of the error, total squared
// error, squared residual against the observed data, and the position of the
// record in the iteration/cost timeline.
struct BandErrorRecord {
  std::int64_t k = 0;
  std::int64_t cost_units = 0;
  double e_total = 0.0;
  double e_low = 0.0;
  double e_high = 0.0;
  double residual_sq = 0.0;
};

BandErrorRecord band_errors(const FrequencySplit& split, const Vector& x,
                            const Vector& x_true, const LinearSystem& system,
                            const Vector& b_used);

}  // namespace rkm
