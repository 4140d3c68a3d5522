#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "rkm/errors.hpp"

namespace rkm {

// Row-major storage: every solver touches whole rows, so rows are kept
// contiguous.  No sparse path.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Singular values below kRankDropTol * sigma_max count as zero for rank and
// condition-number purposes.
inline constexpr double kRankDropTol = 1e-12;

// Full singular value decomposition A = U diag(sigma) V^T.
//   u:     n x n, orthonormal columns
//   sigma: length min(n, m), nonincreasing, nonnegative
//   v:     m x m, orthonormal columns
struct SvdBasis {
  Matrix u;
  Vector sigma;
  Matrix v;
};

struct SpectralConstants {
  double frob_norm;    // ||A||_F
  double sigma_max;    // largest singular value
  double sigma_min;    // smallest singular value above the drop tolerance
  double kappa;        // frob_norm / sigma_min
  int numeric_rank;    // count of singular values above the drop tolerance
};

// Truncation level splitting the right singular basis into a low band
// span{v_1..v_level} and its complement.  Holds a non-owning reference.
struct FrequencySplit {
  const SvdBasis* basis;
  int level;
};

// Throws config_error on empty or non-finite input.
SvdBasis svd(const Matrix& a);

// frob_norm is passed in (computed from the matrix) so the consistency
// ||A||_F^2 = sum sigma_i^2 stays testable against the factorization.
// Throws config_error when every singular value is zero.
SpectralConstants spectral_constants(const SvdBasis& basis, double frob_norm);

// Sampling weights p_i = ||a_i||^2 / ||A||_F^2.  Throws config_error on a
// zero row, naming its index.
Vector row_probabilities(const Matrix& a);

// Validates 1 <= level <= m.
FrequencySplit make_split(const SvdBasis& basis, int level);

// z decomposed as (z_low, z_high) with z_low in span{v_1..v_level}.
std::pair<Vector, Vector> project(const FrequencySplit& split, const Vector& z);

// Squared band masses (||P_low z||^2, ||P_high z||^2) without materializing
// the projected vectors.
std::pair<double, double> band_energies(const FrequencySplit& split,
                                        const Vector& z);

// Components of z over consecutive index bands [1..b_1], [b_1+1..b_2], ...,
// [b_B+1..m] of the right singular basis.  boundaries must be strictly
// increasing within [1, m]; B boundaries give B+1 components.
std::vector<Vector> multi_band_project(const SvdBasis& basis,
                                       const std::vector<int>& boundaries,
                                       const Vector& z);

// Squared band masses for the same partition.
std::vector<double> multi_band_energies(const SvdBasis& basis,
                                        const std::vector<int>& boundaries,
                                        const Vector& z);

}  // namespace rkm
