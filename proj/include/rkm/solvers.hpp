#pragma once

#include <cstdint>

#include "rkm/problems.hpp"
#include "rkm/rng.hpp"

namespace rkm {

// Shared iteration state for the row-action methods.  Row norms and sampling
// tables are computed once at construction.  A state is owned by a single
// run; it is never shared across threads.
struct SolverState {
  Vector x;
  std::int64_t k = 0;      // completed iterations
  Vector p;                // row sampling probabilities ||a_i||^2 / ||A||_F^2
  Vector cumulative_p;     // prefix sums of p, final entry exactly 1
  Vector row_norms_sq;
  double frob_sq = 0.0;    // ||A||_F^2 = sum of row_norms_sq
  Rng rng{0};
};

SolverState make_solver_state(const LinearSystem& system, Vector x0,
                              std::uint64_t seed);

// Orthogonal projection of x onto the hyperplane of row i:
// x += (b_i - <a_i, x>) / ||a_i||^2 * a_i.
void apply_row_update(Vector& x, const LinearSystem& system,
                      const Vector& b_used, int row, double row_norm_sq);

// Cyclic sweep: processes row (k mod n), then increments k.  Ignores the
// sampling table and rng.
void km_step(SolverState& s, const LinearSystem& system, const Vector& b_used);

// Inverse-CDF draw: consumes one uniform and binary-searches cumulative_p.
int sample_row_index(SolverState& s);

// Randomized row action: samples a row with probability p_i, projects onto
// its hyperplane, increments k.
void rkm_step(SolverState& s, const LinearSystem& system, const Vector& b_used);

// Full-gradient step x - (1/||A||_F^2) * A^T (A x - b_used).  Optionally
// reports ||A x - b_used||^2, which the step computes anyway.
Vector landweber_step(const Vector& x, const LinearSystem& system,
                      const Vector& b_used, double frob_sq,
                      double* residual_sq_out = nullptr);

// g(x) = (1/n) A^T (A x - b_used), the objective gradient the stochastic
// methods estimate.
Vector full_gradient(const LinearSystem& system, const Vector& x,
                     const Vector& b_used);

// g_i(x) = (||A||_F^2 / (n ||a_i||^2)) (<a_i, x> - b_i) a_i, the importance
// weighted per-row estimate with E[g_i] = g.
Vector partial_gradient(const LinearSystem& system, const Vector& x,
                        const Vector& b_used, int row, double frob_sq,
                        double row_norm_sq);

// Variance-reduced randomized row action.  Runs plain randomized steps until
// the first snapshot at k = epoch_length, then recenters each step with the
// snapshot gradient:
//   x <- x - (n/||A||_F^2) * (g_i(x) - g_i(x_snap) + g_snap).
// A snapshot (full gradient at the current iterate) is refreshed whenever
// k is a positive multiple of epoch_length, before that step's row draw.
struct RkmvrState {
  SolverState inner;
  std::int64_t epoch_length = 0;
  bool have_snapshot = false;
  Vector snapshot_x;
  Vector snapshot_grad;
  // Set by the most recent step:
  bool snapshot_taken = false;
  double snapshot_residual_sq = 0.0;  // ||A x - b_used||^2 at the snapshot
};

RkmvrState make_rkmvr_state(const LinearSystem& system, Vector x0,
                            std::int64_t epoch_length, std::uint64_t seed);

void rkmvr_step(RkmvrState& s, const LinearSystem& system,
                const Vector& b_used);

// Residual-based stopping: accept x once ||A x - b_delta|| <= tau * delta_abs.
struct StoppingRule {
  double tau = 1.1;
  double delta_abs = 0.0;
};

bool discrepancy_check(const Vector& x, const LinearSystem& system,
                       const Vector& b_delta, const StoppingRule& rule);

double residual_sq(const LinearSystem& system, const Vector& x,
                   const Vector& b_used);

}  // namespace rkm
