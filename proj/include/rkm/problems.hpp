#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rkm/linalg.hpp"
#include "rkm/rng.hpp"

namespace rkm {

struct LinearSystem {
  std::string name;
  Matrix a;
  Vector b;                      // consistent right-hand side A * x_true
  std::optional<Vector> x_true;
};

struct NoisyObservation {
  Vector b_delta;
  Vector eta;        // realized perturbation, b_delta - b
  double delta_rel;
  double delta_abs;  // ||eta||_2
};

// n x 2 system whose rows are unit vectors at angles (i-1) * 2*pi/n,
// with b = 0 and x_true = 0.  Requires n >= 3 so that the row directions
// average out isotropically.
LinearSystem make_circle(int n);

// First-kind Fredholm test problems discretized by the midpoint rule:
// the classical phillips, gravity and shaw instances.  gravity and shaw are
// severely ill-posed, phillips mildly so.  Requires n >= 10.
enum class ProblemKind { phillips, gravity, shaw };

ProblemKind parse_problem_kind(std::string_view name);

LinearSystem make_problem(ProblemKind kind, int n);

// Accepts "phillips", "gravity", "shaw" or "circle".
LinearSystem make_named_system(std::string_view name, int n);

// b_delta_i = b_i + delta_rel * max_j |b_j| * xi_i with xi_i iid standard
// normal drawn from rng in index order.  delta_rel must be >= 0.
NoisyObservation add_noise(const Vector& b, double delta_rel, Rng& rng);

// Vector of iid standard normal entries; a rough solution with no preferred
// frequency content, unlike the smooth x_true of the test problems.
Vector random_solution(int m, Rng& rng);

}  // namespace rkm
