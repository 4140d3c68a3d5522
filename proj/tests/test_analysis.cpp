#include <doctest.h>

#include <cmath>

#include "rkm/analysis.hpp"
#include "rkm/solvers.hpp"

using namespace rkm;

namespace {

SvdBasis identity_basis(int m) {
  SvdBasis basis;
  basis.u = Matrix::Identity(m, m);
  basis.sigma = Vector::Ones(m);
  basis.v = Matrix::Identity(m, m);
  return basis;
}

LinearSystem identity_system(int m) {
  LinearSystem sys;
  sys.name = "identity";
  sys.a = Matrix::Identity(m, m);
  sys.b = Vector::Zero(m);
  sys.x_true = Vector::Zero(m);
  return sys;
}

LinearSystem random_system(int n, int m, std::uint64_t seed) {
  Rng rng(seed);
  LinearSystem sys;
  sys.name = "random";
  sys.a = Matrix(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) sys.a(i, j) = rng.gaussian();
  Vector x(m);
  for (int j = 0; j < m; ++j) x(j) = rng.gaussian();
  sys.b = sys.a * x;
  sys.x_true = x;
  return sys;
}

}  // namespace

TEST_CASE("band constants of diag(3,2,1)") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 3.0;
  a(1, 1) = 2.0;
  a(2, 2) = 1.0;
  const SvdBasis basis = svd(a);
  const double frob = a.norm();  // sqrt(14)

  const BoundConstants c1 = bound_constants(basis, frob, 1);
  CHECK(c1.c1 == doctest::Approx(9.0 / 14.0).epsilon(1e-14));
  CHECK(c1.c2 == doctest::Approx(5.0 / 14.0).epsilon(1e-14));
  REQUIRE(c1.alpha_defined);
  CHECK(c1.alpha == doctest::Approx(5.0 / 9.0).epsilon(1e-14));

  const BoundConstants c3 = bound_constants(basis, frob, 3);
  CHECK(c3.c1 == doctest::Approx(1.0 / 14.0).epsilon(1e-14));
  CHECK(c3.c2 == 0.0);
  CHECK(c3.alpha == 0.0);
}

TEST_CASE("band constants past the rank") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 2.0;
  a(1, 1) = 1.0;
  const SvdBasis basis = svd(a);
  const BoundConstants c = bound_constants(basis, a.norm(), 3);
  CHECK(c.c1 == 0.0);
  CHECK(c.c2 == 0.0);
  CHECK(!c.alpha_defined);
}

TEST_CASE("conditional expectation on the identity") {
  // Projecting e = (1,1,1) onto a coordinate hyperplane zeroes one entry;
  // averaging over the three rows gives (2/3, 4/3) for the L = 1 split.
  const LinearSystem sys = identity_system(3);
  const SvdBasis basis = identity_basis(3);
  const FrequencySplit split = make_split(basis, 1);
  const Vector e = Vector::Ones(3);

  auto [exp_low, exp_high] = conditional_band_expectation(sys, split, e);
  CHECK(exp_low == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(exp_high == doctest::Approx(4.0 / 3.0).epsilon(1e-13));

  // Full expectation carries the (1 - 1/n) factor for any identity size.
  for (int m : {3, 10, 25}) {
    const LinearSystem id = identity_system(m);
    Rng rng(m);
    Vector z(m);
    for (int j = 0; j < m; ++j) z(j) = rng.gaussian();
    const double expect = conditional_error_expectation(id, z);
    CHECK(expect == doctest::Approx((1.0 - 1.0 / m) * z.squaredNorm())
                        .epsilon(1e-13));
  }
}

TEST_CASE("conditional expectation halves on the circle") {
  const LinearSystem sys = make_circle(100);
  Vector e(2);
  e << 1.0, 2.0;
  CHECK(conditional_error_expectation(sys, e) ==
        doctest::Approx(2.5).epsilon(1e-12));

  const SvdBasis basis = svd(sys.a);
  const FrequencySplit split = make_split(basis, 2);
  auto [exp_low, exp_high] = conditional_band_expectation(sys, split, e);
  CHECK(exp_low + exp_high == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(exp_high <= 1e-12);
}

TEST_CASE("conditional expectation matches a sampled average") {
  const LinearSystem sys = random_system(5, 3, 61);
  const SvdBasis basis = svd(sys.a);
  const FrequencySplit split = make_split(basis, 1);
  Rng rng(62);
  Vector e(3);
  for (int j = 0; j < 3; ++j) e(j) = rng.gaussian();
  const Vector x = *sys.x_true + e;

  auto [exp_low, exp_high] = conditional_band_expectation(sys, split, e);

  double mean_low = 0.0, mean_high = 0.0;
  double sq_low = 0.0, sq_high = 0.0;
  constexpr int kTrials = 20000;
  for (int t = 0; t < kTrials; ++t) {
    SolverState s = make_solver_state(sys, x, 1000 + t);
    rkm_step(s, sys, sys.b);
    auto [lo, hi] = band_energies(split, s.x - *sys.x_true);
    mean_low += lo;
    mean_high += hi;
    sq_low += lo * lo;
    sq_high += hi * hi;
  }
  mean_low /= kTrials;
  mean_high /= kTrials;
  const double se_low =
      std::sqrt((sq_low / kTrials - mean_low * mean_low) / kTrials);
  const double se_high =
      std::sqrt((sq_high / kTrials - mean_high * mean_high) / kTrials);
  CHECK(std::abs(mean_low - exp_low) <= 3.0 * se_low + 1e-12);
  CHECK(std::abs(mean_high - exp_high) <= 3.0 * se_high + 1e-12);
}

TEST_CASE("one-step bound formulas") {
  BoundConstants c;
  c.c1 = 0.25;
  c.c2 = 0.1;
  c.frob_norm = 2.0;
  auto [low, high] = exact_step_bound(c, 3.0, 5.0);
  CHECK(low == doctest::Approx(0.75 * 3.0 + 0.1 * 5.0).epsilon(1e-15));
  CHECK(high == doctest::Approx(0.1 * 3.0 + 1.1 * 5.0).epsilon(1e-15));

  auto [nlow, nhigh] = noisy_step_bound(c, 3.0, 5.0, 0.0);
  CHECK(nlow == low);
  CHECK(nhigh == high);

  const double delta = 0.3;
  const double extra = delta * delta / 4.0 +
                       2.0 * delta / 2.0 * std::sqrt(0.1) * std::sqrt(8.0);
  auto [dlow, dhigh] = noisy_step_bound(c, 3.0, 5.0, delta);
  CHECK(dlow == doctest::Approx(low + extra).epsilon(1e-14));
  CHECK(dhigh == doctest::Approx(high + extra).epsilon(1e-14));

  CHECK_THROWS_AS(noisy_step_bound(c, 3.0, 5.0, -0.1), config_error);
}

TEST_CASE("propagation eigenpairs") {
  BoundConstants c;
  c.c1 = 0.5;
  c.c2 = 0.1;
  c.frob_norm = 1.0;
  const Propagation p = make_propagation(c);

  // trace 1.6, gap sqrt((c1+c2)^2 + 4 c2^2) = sqrt(0.4)
  CHECK(p.lambda_plus ==
        doctest::Approx((1.6 + std::sqrt(0.4)) / 2.0).epsilon(1e-15));
  CHECK(p.lambda_minus ==
        doctest::Approx((1.6 - std::sqrt(0.4)) / 2.0).epsilon(1e-15));
  CHECK((p.d * p.v_plus - p.lambda_plus * p.v_plus).norm() <= 1e-14);
  CHECK((p.d * p.v_minus - p.lambda_minus * p.v_minus).norm() <= 1e-14);
  CHECK(p.v_plus.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(p.v_plus.dot(p.v_minus)) <= 1e-14);

  // Decoupled bands: the matrix is diagonal and the axes are eigenvectors.
  c.c2 = 0.0;
  const Propagation axes = make_propagation(c);
  CHECK(axes.lambda_plus == 1.0);
  CHECK(axes.lambda_minus == 0.5);
  CHECK(std::abs(axes.v_plus(0)) <= 1e-15);
  CHECK(std::abs(axes.v_minus(1)) <= 1e-15);
}

TEST_CASE("propagated powers match literal multiplication") {
  BoundConstants c;
  c.c1 = 0.3;
  c.c2 = 0.12;
  c.frob_norm = 1.0;
  const Propagation p = make_propagation(c);

  auto [l0, h0] = propagate(p, 0, 2.0, 7.0);
  CHECK(l0 == 2.0);
  CHECK(h0 == 7.0);
  CHECK_THROWS_AS(propagate(p, -1, 1.0, 1.0), config_error);

  Eigen::Vector2d w(2.0, 7.0);
  for (int k = 1; k <= 12; ++k) {
    w = p.d * w;
    auto [low, high] = propagate(p, k, 2.0, 7.0);
    CHECK(low == doctest::Approx(w(0)).epsilon(1e-13));
    CHECK(high == doctest::Approx(w(1)).epsilon(1e-13));
  }
}

TEST_CASE("noisy propagation closed forms") {
  BoundConstants c;
  c.c1 = 0.5;
  c.c2 = 0.0;
  c.frob_norm = 1.0;
  const double eps = 0.25;
  const double delta = 0.2;
  // With c2 = 0 the bands decouple: the high band keeps eigenvalue exactly 1
  // and accumulates k source terms, the low band sums a geometric series.
  const double source = (1.0 + 1.0 / eps) * delta * delta;
  auto [low, high] = noisy_propagation(c, eps, delta, 3, 8.0, 2.0);
  CHECK(high == doctest::Approx(2.0 + 3.0 * source).epsilon(1e-13));
  const double geo = (1.0 - std::pow(0.5, 3)) / 0.5;
  CHECK(low == doctest::Approx(std::pow(0.5, 3) * 8.0 + geo * source)
                   .epsilon(1e-13));

  // Zero noise reduces to the plain recursion with the shifted constants.
  BoundConstants mixed;
  mixed.c1 = 0.4;
  mixed.c2 = 0.05;
  mixed.frob_norm = 1.5;
  auto [clean_low, clean_high] = noisy_propagation(mixed, 0.5, 0.0, 6, 3.0, 1.0);
  BoundConstants barred = mixed;
  barred.c1 = 0.4 - 0.5 * 0.05;
  barred.c2 = 1.5 * 0.05;
  auto [ref_low, ref_high] = propagate(make_propagation(barred), 6, 3.0, 1.0);
  CHECK(clean_low == doctest::Approx(ref_low).epsilon(1e-13));
  CHECK(clean_high == doctest::Approx(ref_high).epsilon(1e-13));

  CHECK_THROWS_AS(noisy_propagation(mixed, 0.4 / 0.05 + 1.0, 0.1, 2, 1.0, 1.0),
                  config_error);
  CHECK_THROWS_AS(noisy_propagation(mixed, 0.0, 0.1, 2, 1.0, 1.0),
                  config_error);
}

TEST_CASE("contraction envelope") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 1.0;
  const SpectralConstants sc = spectral_constants(svd(a), a.norm());
  // kappa^2 = 5, so the clean rate is (1 - 1/5) per step.
  CHECK(contraction_envelope(sc, 2, 1.0, 0.0) ==
        doctest::Approx(0.64).epsilon(1e-14));
  CHECK(contraction_envelope(sc, 2, 1.0, 0.3) ==
        doctest::Approx(0.64 + 0.09).epsilon(1e-14));
  CHECK(contraction_envelope(sc, 0, 2.0, 0.0) == 2.0);
}

TEST_CASE("gradient statistics routes agree") {
  const LinearSystem sys = random_system(6, 4, 71);
  Rng rng(72);
  Vector x(4);
  for (int j = 0; j < 4; ++j) x(j) = rng.gaussian();

  const SgdStatistics closed = sgd_statistics(sys, x, sys.b);
  const SgdStatistics summed = sgd_statistics_by_sum(sys, x, sys.b);
  CHECK((closed.mean - summed.mean).norm() <= 1e-12);
  CHECK((closed.mean - full_gradient(sys, x, sys.b)).norm() <= 1e-12);
  CHECK((closed.covariance - summed.covariance).cwiseAbs().maxCoeff() <=
        1e-12);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      Eigen::MatrixXd(closed.covariance));
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);

  const SgdStatistics at_solution = sgd_statistics(sys, *sys.x_true, sys.b);
  CHECK(at_solution.mean.norm() <= 1e-12);
  CHECK(at_solution.covariance.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("band error records") {
  const LinearSystem sys = random_system(5, 3, 81);
  const SvdBasis basis = svd(sys.a);
  const FrequencySplit split = make_split(basis, 1);
  Rng rng(82);
  Vector x(3);
  for (int j = 0; j < 3; ++j) x(j) = rng.gaussian();

  const BandErrorRecord rec = band_errors(split, x, *sys.x_true, sys, sys.b);
  const Vector e = x - *sys.x_true;
  CHECK(rec.e_total == doctest::Approx(e.squaredNorm()).epsilon(1e-13));
  CHECK(rec.e_low + rec.e_high ==
        doctest::Approx(e.squaredNorm()).epsilon(1e-12));
  CHECK(rec.residual_sq ==
        doctest::Approx((sys.a * x - sys.b).squaredNorm()).epsilon(1e-12));
}
