#include "rkm/solvers.hpp"

#include <algorithm>
#include <string>

namespace rkm {

SolverState make_solver_state(const LinearSystem& system, Vector x0,
                              std::uint64_t seed) {
  const Matrix& a = system.a;
  if (x0.size() != a.cols())
    throw config_error("make_solver_state: x0 length " +
                       std::to_string(x0.size()) + " does not match " +
                       std::to_string(a.cols()) + " columns");

  SolverState s{Vector(), 0, Vector(), Vector(), Vector(), 0.0, Rng(seed)};
  s.x = std::move(x0);
  s.p = row_probabilities(a);
  s.row_norms_sq = a.rowwise().squaredNorm();
  s.frob_sq = s.row_norms_sq.sum();
  s.cumulative_p.resize(s.p.size());
  double running = 0.0;
  for (Eigen::Index i = 0; i < s.p.size(); ++i) {
    running += s.row_norms_sq(i);
    s.cumulative_p(i) = running;
  }
  s.cumulative_p /= running;  // final entry exactly 1
  return s;
}

void apply_row_update(Vector& x, const LinearSystem& system,
                      const Vector& b_used, int row, double row_norm_sq) {
  const auto a_i = system.a.row(row);
  const double coef = (b_used(row) - a_i.dot(x)) / row_norm_sq;
  x += coef * a_i.transpose();
}

void km_step(SolverState& s, const LinearSystem& system,
             const Vector& b_used) {
  const int row = static_cast<int>(s.k % system.a.rows());
  apply_row_update(s.x, system, b_used, row, s.row_norms_sq(row));
  ++s.k;
}

int sample_row_index(SolverState& s) {
  const double u = s.rng.uniform();
  const double* begin = s.cumulative_p.data();
  const double* end = begin + s.cumulative_p.size();
  const double* it = std::upper_bound(begin, end, u);
  if (it == end) --it;  // u == 1 cannot occur, but stay in range
  return static_cast<int>(it - begin);
}

void rkm_step(SolverState& s, const LinearSystem& system,
              const Vector& b_used) {
  const int row = sample_row_index(s);
  apply_row_update(s.x, system, b_used, row, s.row_norms_sq(row));
  ++s.k;
}

Vector landweber_step(const Vector& x, const LinearSystem& system,
                      const Vector& b_used, double frob_sq,
                      double* residual_sq_out) {
  Vector r = system.a * x - b_used;
  if (residual_sq_out) *residual_sq_out = r.squaredNorm();
  return x - (system.a.transpose() * r) / frob_sq;
}

Vector full_gradient(const LinearSystem& system, const Vector& x,
                     const Vector& b_used) {
  Vector r = system.a * x - b_used;
  return (system.a.transpose() * r) / static_cast<double>(system.a.rows());
}

Vector partial_gradient(const LinearSystem& system, const Vector& x,
                        const Vector& b_used, int row, double frob_sq,
                        double row_norm_sq) {
  const auto a_i = system.a.row(row);
  const double scale = frob_sq / (static_cast<double>(system.a.rows()) *
                                  row_norm_sq);
  return scale * (a_i.dot(x) - b_used(row)) * a_i.transpose();
}

RkmvrState make_rkmvr_state(const LinearSystem& system, Vector x0,
                            std::int64_t epoch_length, std::uint64_t seed) {
  if (epoch_length < 1)
    throw config_error("make_rkmvr_state: epoch length must be >= 1");
  RkmvrState s;
  s.inner = make_solver_state(system, std::move(x0), seed);
  s.epoch_length = epoch_length;
  return s;
}

void rkmvr_step(RkmvrState& s, const LinearSystem& system,
                const Vector& b_used) {
  SolverState& in = s.inner;
  s.snapshot_taken = false;
  if (in.k > 0 && in.k % s.epoch_length == 0) {
    Vector r = system.a * in.x - b_used;
    s.snapshot_residual_sq = r.squaredNorm();
    s.snapshot_grad =
        (system.a.transpose() * r) / static_cast<double>(system.a.rows());
    s.snapshot_x = in.x;
    s.have_snapshot = true;
    s.snapshot_taken = true;
  }

  const int row = sample_row_index(in);
  if (!s.have_snapshot) {
    // Snapshot terms are still zero; this is exactly the randomized step.
    apply_row_update(in.x, system, b_used, row, in.row_norms_sq(row));
  } else {
    const auto a_i = system.a.row(row);
    const double norm_sq = in.row_norms_sq(row);
    const double coef = (b_used(row) - a_i.dot(in.x)) / norm_sq;
    const double coef_snap = (b_used(row) - a_i.dot(s.snapshot_x)) / norm_sq;
    const double n = static_cast<double>(system.a.rows());
    in.x += (coef - coef_snap) * a_i.transpose() -
            (n / in.frob_sq) * s.snapshot_grad;
  }
  ++in.k;
}

bool discrepancy_check(const Vector& x, const LinearSystem& system,
                       const Vector& b_delta, const StoppingRule& rule) {
  if (rule.delta_abs < 0.0)
    throw config_error("discrepancy_check: delta_abs must be nonnegative");
  const double r = (system.a * x - b_delta).norm();
  return r <= rule.tau * rule.delta_abs;
}

double residual_sq(const LinearSystem& system, const Vector& x,
                   const Vector& b_used) {
  return (system.a * x - b_used).squaredNorm();
}

}  // namespace rkm
