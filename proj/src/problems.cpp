#include "rkm/problems.hpp"

#include <cmath>
#include <numbers>

namespace rkm {

namespace {

using std::numbers::pi;

double sinc(double u) {
  if (std::abs(u) < 1e-8) return 1.0 - u * u / 6.0;
  return std::sin(u) / u;
}

double shaw_kernel(double s, double t) {
  const double c = std::cos(s) + std::cos(t);
  const double u = pi * (std::sin(s) + std::sin(t));
  const double sc = sinc(u);
  return c * c * sc * sc;
}

double shaw_solution(double t) {
  return 2.0 * std::exp(-6.0 * (t - 0.8) * (t - 0.8)) +
         std::exp(-6.0 * (t + 0.5) * (t + 0.5));
}

double gravity_kernel(double s, double t) {
  const double d = 0.25;
  const double q = d * d + (s - t) * (s - t);
  return d / (q * std::sqrt(q));
}

double gravity_solution(double t) {
  return std::sin(pi * t) + 0.5 * std::sin(2.0 * pi * t);
}

double phillips_kernel(double s, double t) {
  const double u = s - t;
  if (std::abs(u) >= 3.0) return 0.0;
  return 1.0 + std::cos(pi * u / 3.0);
}

double phillips_solution(double t) {
  if (std::abs(t) >= 3.0) return 0.0;
  return 1.0 + std::cos(pi * t / 3.0);
}

LinearSystem discretize(const std::string& name, int n, double lo, double hi,
                        double (*kernel)(double, double),
                        double (*solution)(double)) {
  const double h = (hi - lo) / n;
  Matrix a(n, n);
  Vector x(n);
  for (int j = 0; j < n; ++j) {
    const double t = lo + (j + 0.5) * h;
    x(j) = solution(t);
  }
  for (int i = 0; i < n; ++i) {
    const double s = lo + (i + 0.5) * h;
    for (int j = 0; j < n; ++j) {
      const double t = lo + (j + 0.5) * h;
      a(i, j) = h * kernel(s, t);
    }
  }
  LinearSystem sys;
  sys.name = name;
  sys.b = a * x;
  sys.a = std::move(a);
  sys.x_true = std::move(x);
  return sys;
}

}  // namespace

LinearSystem make_circle(int n) {
  if (n < 3)
    throw config_error("make_circle: need n >= 3, got " + std::to_string(n));
  const double theta = 2.0 * pi / n;
  Matrix a(n, 2);
  for (int i = 0; i < n; ++i) {
    a(i, 0) = std::cos(i * theta);
    a(i, 1) = std::sin(i * theta);
  }
  LinearSystem sys;
  sys.name = "circle";
  sys.a = std::move(a);
  sys.b = Vector::Zero(n);
  sys.x_true = Vector::Zero(2);
  return sys;
}

ProblemKind parse_problem_kind(std::string_view name) {
  if (name == "phillips") return ProblemKind::phillips;
  if (name == "gravity") return ProblemKind::gravity;
  if (name == "shaw") return ProblemKind::shaw;
  throw config_error("unknown problem kind: " + std::string(name));
}

LinearSystem make_problem(ProblemKind kind, int n) {
  if (n < 10)
    throw config_error("make_problem: need n >= 10, got " + std::to_string(n));
  switch (kind) {
    case ProblemKind::phillips:
      return discretize("phillips", n, -6.0, 6.0, phillips_kernel,
                        phillips_solution);
    case ProblemKind::gravity:
      return discretize("gravity", n, 0.0, 1.0, gravity_kernel,
                        gravity_solution);
    case ProblemKind::shaw:
      return discretize("shaw", n, -pi / 2.0, pi / 2.0, shaw_kernel,
                        shaw_solution);
  }
  throw config_error("make_problem: unhandled kind");
}

LinearSystem make_named_system(std::string_view name, int n) {
  if (name == "circle") return make_circle(n);
  return make_problem(parse_problem_kind(name), n);
}

NoisyObservation add_noise(const Vector& b, double delta_rel, Rng& rng) {
  if (delta_rel < 0.0)
    throw config_error("add_noise: delta_rel must be nonnegative");
  NoisyObservation obs;
  obs.delta_rel = delta_rel;
  obs.eta = Vector::Zero(b.size());
  if (delta_rel > 0.0) {
    const double scale = delta_rel * b.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < b.size(); ++i)
      obs.eta(i) = scale * rng.gaussian();
  }
  obs.b_delta = b + obs.eta;
  obs.delta_abs = obs.eta.norm();
  return obs;
}

Vector random_solution(int m, Rng& rng) {
  if (m < 1) throw config_error("random_solution: need m >= 1");
  Vector x(m);
  for (int i = 0; i < m; ++i) x(i) = rng.gaussian();
  return x;
}

}  // namespace rkm
