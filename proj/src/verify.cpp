#include "rkm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rkm/experiment.hpp"
#include "rkm/rng.hpp"
#include "rkm/solvers.hpp"

namespace rkm {

namespace {

constexpr double kTol = 1e-10;

Vector gaussian_vector(Rng& rng, Eigen::Index size) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = rng.gaussian();
  return v;
}

LinearSystem diagonal_system(std::string name, const Vector& diag) {
  LinearSystem sys;
  sys.name = std::move(name);
  sys.a = Matrix::Zero(diag.size(), diag.size());
  for (Eigen::Index i = 0; i < diag.size(); ++i) sys.a(i, i) = diag(i);
  sys.b = Vector::Zero(diag.size());
  sys.x_true = Vector::Zero(diag.size());
  return sys;
}

struct MarginTracker {
  double value = std::numeric_limits<double>::infinity();
  void note(double margin) { value = std::min(value, margin); }
};

CheckResult make_result(std::string name, double margin) {
  return CheckResult{std::move(name), margin, margin >= 0.0};
}

}  // namespace

const std::vector<VerificationSystem>& verification_systems() {
  static const std::vector<VerificationSystem> systems = [] {
    std::vector<LinearSystem> raw;
    {
      Vector ones = Vector::Ones(50);
      raw.push_back(diagonal_system("identity50", ones));
    }
    {
      Vector d(3);
      d << 3.0, 2.0, 1.0;
      raw.push_back(diagonal_system("diag321", d));
    }
    raw.push_back(make_circle(100));
    raw.back().name = "circle100";
    raw.push_back(make_problem(ProblemKind::phillips, 200));
    raw.push_back(make_problem(ProblemKind::gravity, 200));
    raw.push_back(make_problem(ProblemKind::shaw, 200));

    std::vector<VerificationSystem> out;
    for (auto& sys : raw) {
      VerificationSystem v;
      v.frob_norm = sys.a.norm();
      v.basis = svd(sys.a);
      v.spectral = spectral_constants(v.basis, v.frob_norm);
      v.system = std::move(sys);
      out.push_back(std::move(v));
    }
    return out;
  }();
  return systems;
}

std::vector<int> verification_levels(int m) {
  std::vector<int> levels;
  for (int level : {1, 5, 10, m})
    if (level >= 1 && level <= m &&
        std::find(levels.begin(), levels.end(), level) == levels.end())
      levels.push_back(level);
  std::sort(levels.begin(), levels.end());
  return levels;
}

std::vector<CheckResult> verify_band_lemmas() {
  std::vector<CheckResult> results;
  for (const auto& vs : verification_systems()) {
    const Matrix& a = vs.system.a;
    const SvdBasis& basis = vs.basis;
    const int m = static_cast<int>(a.cols());
    const Eigen::Index r = basis.sigma.size();

    {
      // ||A||_F^2 equals the singular value mass and the row norm mass.
      const double frob_sq = vs.frob_norm * vs.frob_norm;
      const double sigma_sq = basis.sigma.squaredNorm();
      const double rows_sq = a.rowwise().squaredNorm().sum();
      const double dev =
          std::max(std::abs(frob_sq - sigma_sq), std::abs(frob_sq - rows_sq));
      results.push_back(make_result(vs.system.name + "/frob-mass",
                                    kTol * (1.0 + frob_sq) - dev));
    }
    {
      // sum_i a_i a_i^T equals A^T A.
      Matrix outer = Matrix::Zero(m, m);
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        outer += a.row(i).transpose() * a.row(i);
      const Matrix gram = a.transpose() * a;
      const double dev = (outer - gram).cwiseAbs().maxCoeff();
      const double scale = gram.cwiseAbs().maxCoeff();
      results.push_back(make_result(vs.system.name + "/row-outer-sum",
                                    kTol * (1.0 + scale) - dev));
    }

    for (int level : verification_levels(m)) {
      const double sigma_level = (level <= r) ? basis.sigma(level - 1) : 0.0;
      const double sigma_next = (level < r) ? basis.sigma(level) : 0.0;
      const auto v_low = basis.v.leftCols(level);
      const auto v_high = basis.v.rightCols(m - level);

      Rng rng = Rng::for_stream(0x1e33a5, 97 * level + m);
      MarginTracker low_lower, low_upper, high_upper, ortho;
      for (int t = 0; t < 100; ++t) {
        Vector e_low = v_low * gaussian_vector(rng, level).normalized();
        const double a_low = (a * e_low).norm();
        low_lower.note(a_low - sigma_level * e_low.norm() + kTol);
        low_upper.note(vs.spectral.sigma_max * e_low.norm() + kTol - a_low);
        if (level < m) {
          Vector e_high =
              v_high * gaussian_vector(rng, m - level).normalized();
          const Vector a_e_high = a * e_high;
          high_upper.note(sigma_next * e_high.norm() + kTol -
                          a_e_high.norm());
          ortho.note(kTol - std::abs((a * e_low).dot(a_e_high)));
        }
      }
      const std::string tag = vs.system.name + "/L=" + std::to_string(level);
      results.push_back(make_result(tag + "/low-band-lower", low_lower.value));
      results.push_back(make_result(tag + "/low-band-upper", low_upper.value));
      if (level < m) {
        results.push_back(
            make_result(tag + "/high-band-upper", high_upper.value));
        results.push_back(
            make_result(tag + "/cross-band-orthogonal", ortho.value));
      }

      // Row masses in the high band: each below sigma_{L+1}^2, their sum
      // below the spectral tail mass.
      if (level < m) {
        const Vector row_mass = (a * v_high).rowwise().squaredNorm();
        MarginTracker per_row;
        for (Eigen::Index i = 0; i < row_mass.size(); ++i)
          per_row.note(sigma_next * sigma_next + kTol - row_mass(i));
        double tail = 0.0;
        for (Eigen::Index i = level; i < r; ++i)
          tail += basis.sigma(i) * basis.sigma(i);
        results.push_back(make_result(tag + "/row-high-mass", per_row.value));
        results.push_back(make_result(tag + "/row-high-mass-sum",
                                      tail + kTol - row_mass.sum()));
      }
    }
  }
  return results;
}

std::vector<CheckResult> verify_exact_dominance() {
  std::vector<CheckResult> results;
  for (const auto& vs : verification_systems()) {
    const int m = static_cast<int>(vs.system.a.cols());
    for (int level : verification_levels(m)) {
      const FrequencySplit split = make_split(vs.basis, level);
      const BoundConstants c = bound_constants(vs.basis, vs.frob_norm, level);
      Rng rng = Rng::for_stream(0xd0317a7e, 131 * level + m);
      MarginTracker worst;
      for (int t = 0; t < 100; ++t) {
        Vector e = gaussian_vector(rng, m);
        auto [e_low, e_high] = band_energies(split, e);
        auto [exp_low, exp_high] =
            conditional_band_expectation(vs.system, split, e);
        auto [bound_low, bound_high] = exact_step_bound(c, e_low, e_high);
        worst.note(bound_low - exp_low + kTol);
        worst.note(bound_high - exp_high + kTol);
      }
      results.push_back(make_result(
          vs.system.name + "/L=" + std::to_string(level) + "/step-bound",
          worst.value));
    }

    // At L = m with full column rank the low-band rate matches the global
    // contraction rate 1 - 1/kappa^2.
    if (vs.spectral.numeric_rank == m) {
      const BoundConstants c = bound_constants(vs.basis, vs.frob_norm, m);
      const double kinv_sq = 1.0 / (vs.spectral.kappa * vs.spectral.kappa);
      const double dev = std::abs(c.c1 - kinv_sq);
      results.push_back(make_result(vs.system.name + "/full-rank-rate",
                                    1e-12 * (1.0 + kinv_sq) - dev));
    }
  }
  return results;
}

std::vector<CheckResult> verify_noisy_dominance() {
  std::vector<CheckResult> results;
  for (const auto& vs : verification_systems()) {
    const int m = static_cast<int>(vs.system.a.cols());
    const Eigen::Index n = vs.system.a.rows();
    for (int level : verification_levels(m)) {
      const FrequencySplit split = make_split(vs.basis, level);
      const BoundConstants c = bound_constants(vs.basis, vs.frob_norm, level);
      Rng rng = Rng::for_stream(0x7035f00d, 131 * level + m);
      MarginTracker worst;
      for (int t = 0; t < 100; ++t) {
        Vector e = gaussian_vector(rng, m);
        auto [e_low, e_high] = band_energies(split, e);
        for (int j = 0; j < 20; ++j) {
          const double scale = vs.frob_norm / std::sqrt(double(n)) *
                               std::pow(10.0, -4.0 + 4.0 * j / 19.0);
          Vector eta = scale * gaussian_vector(rng, n);
          auto [exp_low, exp_high] =
              conditional_band_expectation(vs.system, split, e, &eta);
          auto [bound_low, bound_high] =
              noisy_step_bound(c, e_low, e_high, eta.norm());
          worst.note(bound_low - exp_low + kTol);
          worst.note(bound_high - exp_high + kTol);
        }
      }
      results.push_back(make_result(
          vs.system.name + "/L=" + std::to_string(level) + "/noisy-bound",
          worst.value));
    }

    // The two band expectations must sum to the full-error expectation
    // computed without any singular basis.
    {
      const int level = std::max(1, m / 3);
      const FrequencySplit split = make_split(vs.basis, level);
      Rng rng = Rng::for_stream(0xba9d5c0e, m);
      MarginTracker worst;
      for (int t = 0; t < 10; ++t) {
        Vector e = gaussian_vector(rng, m);
        for (int j = 0; j < 5; ++j) {
          Vector eta = 0.3 * gaussian_vector(rng, n);
          const Vector* eta_ptr = (j == 0) ? nullptr : &eta;
          auto [exp_low, exp_high] =
              conditional_band_expectation(vs.system, split, e, eta_ptr);
          const double full =
              conditional_error_expectation(vs.system, e, eta_ptr);
          const double dev = std::abs(exp_low + exp_high - full);
          worst.note(kTol * (1.0 + full) - dev);
        }
      }
      results.push_back(
          make_result(vs.system.name + "/band-sum-consistency", worst.value));
    }
  }
  return results;
}

std::vector<CheckResult> verify_sgd_properties() {
  std::vector<CheckResult> results;
  for (const auto& vs : verification_systems()) {
    const LinearSystem& sys = vs.system;
    const Matrix& a = sys.a;
    const int m = static_cast<int>(a.cols());
    const Eigen::Index n = a.rows();
    const Vector norms_sq = a.rowwise().squaredNorm();
    const double frob_sq = vs.frob_norm * vs.frob_norm;

    {
      // Row projection == importance weighted gradient step, relative 1e-12.
      Rng rng = Rng::for_stream(0x9d41Ff, m);
      MarginTracker worst;
      for (int t = 0; t < 100; ++t) {
        Vector x = gaussian_vector(rng, m);
        const int row = std::min(static_cast<int>(n) - 1,
                                 static_cast<int>(rng.uniform() * double(n)));
        Vector via_projection = x;
        apply_row_update(via_projection, sys, sys.b, row, norms_sq(row));
        Vector via_gradient =
            x - (static_cast<double>(n) / frob_sq) *
                    partial_gradient(sys, x, sys.b, row, frob_sq,
                                     norms_sq(row));
        const double rel = (via_projection - via_gradient).norm() /
                           (1.0 + via_projection.norm());
        worst.note(1e-12 - rel);
      }
      results.push_back(
          make_result(sys.name + "/projection-gradient-step", worst.value));
    }
    {
      Rng rng = Rng::for_stream(0x5d5d17, m);
      Vector x = gaussian_vector(rng, m);
      const SgdStatistics closed = sgd_statistics(sys, x, sys.b);
      const SgdStatistics summed = sgd_statistics_by_sum(sys, x, sys.b);
      const Vector grad = full_gradient(sys, x, sys.b);

      const double mean_dev =
          std::max((closed.mean - summed.mean).norm(),
                   (closed.mean - grad).norm());
      results.push_back(
          make_result(sys.name + "/gradient-mean",
                      kTol * (1.0 + grad.norm()) - mean_dev));

      const double cov_scale = closed.covariance.cwiseAbs().maxCoeff();
      const double cov_dev =
          (closed.covariance - summed.covariance).cwiseAbs().maxCoeff();
      results.push_back(make_result(sys.name + "/covariance-routes",
                                    kTol * (1.0 + cov_scale) - cov_dev));

      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          Eigen::MatrixXd(closed.covariance));
      results.push_back(make_result(sys.name + "/covariance-psd",
                                    es.eigenvalues().minCoeff() + kTol));
    }
    if (sys.x_true) {
      const SgdStatistics at_solution = sgd_statistics(sys, *sys.x_true, sys.b);
      const double dev =
          std::max(at_solution.mean.norm(),
                   at_solution.covariance.cwiseAbs().maxCoeff());
      results.push_back(
          make_result(sys.name + "/vanish-at-solution", kTol - dev));
    }
    {
      // Recentred estimate g_i(x) - g_i(x_snap) + g(x_snap) stays unbiased.
      Rng rng = Rng::for_stream(0x0b1a5ed, m);
      Vector x = gaussian_vector(rng, m);
      Vector x_snap = gaussian_vector(rng, m);
      const Vector p = row_probabilities(a);
      const Vector g_snap = full_gradient(sys, x_snap, sys.b);
      Vector mean = Vector::Zero(m);
      for (Eigen::Index i = 0; i < n; ++i) {
        mean += p(i) * (partial_gradient(sys, x, sys.b, static_cast<int>(i),
                                         frob_sq, norms_sq(i)) -
                        partial_gradient(sys, x_snap, sys.b,
                                         static_cast<int>(i), frob_sq,
                                         norms_sq(i)) +
                        g_snap);
      }
      const Vector grad = full_gradient(sys, x, sys.b);
      results.push_back(
          make_result(sys.name + "/recentred-unbiased",
                      kTol * (1.0 + grad.norm()) - (mean - grad).norm()));
    }
  }
  return results;
}

std::vector<CheckResult> verify_propagation() {
  std::vector<CheckResult> results;
  const double c1_grid[] = {1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9};

  {
    MarginTracker worst;
    for (double c1 : c1_grid) {
      for (double f : {0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0}) {
        BoundConstants c;
        c.c1 = c1;
        c.c2 = f * c1;
        c.frob_norm = 1.0;
        c.alpha_defined = true;
        c.alpha = f;
        const Propagation p = make_propagation(c);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(p.d);
        const double ref_minus = es.eigenvalues()(0);
        const double ref_plus = es.eigenvalues()(1);
        worst.note(1e-12 - std::abs(p.lambda_minus - ref_minus));
        worst.note(1e-12 - std::abs(p.lambda_plus - ref_plus));
        worst.note(1e-12 -
                   (1.0 - std::abs(p.v_minus.dot(es.eigenvectors().col(0)))));
        worst.note(1e-12 -
                   (1.0 - std::abs(p.v_plus.dot(es.eigenvectors().col(1)))));
        worst.note(kTol - (p.d * p.v_plus - p.lambda_plus * p.v_plus).norm());
        worst.note(kTol -
                   (p.d * p.v_minus - p.lambda_minus * p.v_minus).norm());
      }
    }
    results.push_back(make_result("eigens-closed-form", worst.value));
  }
  {
    // For alpha <= 1e-3 the eigenvalues sit within 10*c1*alpha^2 of the
    // first-order forms.
    MarginTracker worst;
    for (double c1 : c1_grid) {
      for (double alpha : {1e-3, 1e-4, 1e-5, 1e-6}) {
        BoundConstants c;
        c.c1 = c1;
        c.c2 = alpha * c1;
        c.frob_norm = 1.0;
        c.alpha_defined = true;
        c.alpha = alpha;
        const Propagation p = make_propagation(c);
        const double budget = 10.0 * c1 * alpha * alpha;
        worst.note(budget - p.approx_deviation_plus);
        worst.note(budget - p.approx_deviation_minus);
      }
    }
    results.push_back(make_result("eigens-alpha-expansion", worst.value));
  }
  {
    BoundConstants c;
    c.c1 = 0.2;
    c.c2 = 0.05;
    c.frob_norm = 1.0;
    const Propagation p = make_propagation(c);
    auto [l0, h0] = propagate(p, 0, 0.7, 0.4);
    MarginTracker worst;
    worst.note(kTol - std::abs(l0 - 0.7));
    worst.note(kTol - std::abs(h0 - 0.4));
    // The eigendecomposition route agrees with literal multiplication.
    Eigen::Vector2d w(0.7, 0.4);
    for (int j = 0; j < 150; ++j) w = p.d * w;
    auto [l, h] = propagate(p, 150, 0.7, 0.4);
    worst.note(kTol - std::abs(l - w(0)) / (1.0 + std::abs(w(0))));
    worst.note(kTol - std::abs(h - w(1)) / (1.0 + std::abs(w(1))));
    results.push_back(make_result("power-consistency", worst.value));
  }
  {
    // One noisy step equals the recursion applied once plus the source term.
    MarginTracker worst;
    for (double eps : {0.05, 0.1, 0.5}) {
      BoundConstants c;
      c.c1 = 0.3;
      c.c2 = 0.02;
      c.frob_norm = 2.0;
      const double delta = 0.07;
      auto [low, high] = noisy_propagation(c, eps, delta, 1, 0.9, 0.5);
      const double c1b = c.c1 - eps * c.c2;
      const double c2b = (1.0 + eps) * c.c2;
      const double source =
          (1.0 + 1.0 / eps) * delta * delta / (c.frob_norm * c.frob_norm);
      const double want_low = (1.0 - c1b) * 0.9 + c2b * 0.5 + source;
      const double want_high = c2b * 0.9 + (1.0 + c2b) * 0.5 + source;
      worst.note(1e-12 - std::abs(low - want_low) / (1.0 + want_low));
      worst.note(1e-12 - std::abs(high - want_high) / (1.0 + want_high));

      auto [clean_low, clean_high] = noisy_propagation(c, eps, 0.0, 7, 0.9, 0.5);
      BoundConstants barred = c;
      barred.c1 = c1b;
      barred.c2 = c2b;
      auto [ref_low, ref_high] =
          propagate(make_propagation(barred), 7, 0.9, 0.5);
      worst.note(1e-12 - std::abs(clean_low - ref_low));
      worst.note(1e-12 - std::abs(clean_high - ref_high));
    }
    results.push_back(make_result("noisy-one-step", worst.value));
  }
  {
    // Oversized eps must be rejected: c1 - eps*c2 <= 0.
    BoundConstants c;
    c.c1 = 0.1;
    c.c2 = 0.09;
    c.frob_norm = 1.0;
    bool threw = false;
    try {
      noisy_propagation(c, 2.0, 0.1, 5, 1.0, 1.0);
    } catch (const config_error&) {
      threw = true;
    }
    results.push_back(make_result("eps-precondition", threw ? 0.0 : -1.0));
  }
  {
    // Monte-Carlo dominance: averaged band errors of the randomized method
    // stay below the propagated noisy bounds.
    ExperimentConfig cfg;
    cfg.problem = "phillips";
    cfg.n = 200;
    cfg.delta_rel = 1e-2;
    cfg.method = Method::rkm;
    cfg.iterations = 50;
    cfg.runs = 100;
    cfg.seed = 424242;
    cfg.level = 5;
    cfg.stride = 1;
    const ExperimentResult res = run_experiment(cfg);
    const BoundConstants c =
        bound_constants(*res.basis, res.system.a.norm(), cfg.level);
    const double e_low0 = res.averaged.records.front().e_low;
    const double e_high0 = res.averaged.records.front().e_high;
    MarginTracker worst;
    for (const auto& rec : res.averaged.records) {
      auto [bound_low, bound_high] = noisy_propagation(
          c, 0.1, res.noise.delta_abs, rec.k, e_low0, e_high0);
      worst.note(bound_low - rec.e_low);
      worst.note(bound_high - rec.e_high);
    }
    results.push_back(make_result("noisy-mc-dominance", worst.value));
  }
  return results;
}

std::vector<CheckResult> run_suite(std::string_view suite) {
  std::vector<CheckResult> results;
  auto append = [&](std::vector<CheckResult> more) {
    for (auto& r : more) results.push_back(std::move(r));
  };
  if (suite == "lemmas") {
    append(verify_band_lemmas());
  } else if (suite == "theorem33") {
    append(verify_exact_dominance());
  } else if (suite == "theorem35") {
    append(verify_noisy_dominance());
  } else if (suite == "props") {
    append(verify_sgd_properties());
  } else if (suite == "propagation") {
    append(verify_propagation());
  } else if (suite == "all") {
    append(verify_band_lemmas());
    append(verify_exact_dominance());
    append(verify_noisy_dominance());
    append(verify_sgd_properties());
    append(verify_propagation());
  } else {
    throw config_error("unknown verify suite: " + std::string(suite));
  }
  return results;
}

}  // namespace rkm
