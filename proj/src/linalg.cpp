#include "rkm/linalg.hpp"

#include <Eigen/SVD>
#include <string>

namespace rkm {

SvdBasis svd(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0)
    throw config_error("svd: matrix must be nonempty");
  if (!a.allFinite())
    throw config_error("svd: matrix has non-finite entries");

  Eigen::BDCSVD<Eigen::MatrixXd> dec(a, Eigen::ComputeFullU |
                                            Eigen::ComputeFullV);
  SvdBasis basis;
  basis.u = dec.matrixU();
  basis.sigma = dec.singularValues();
  basis.v = dec.matrixV();
  return basis;
}

SpectralConstants spectral_constants(const SvdBasis& basis, double frob_norm) {
  const Vector& sigma = basis.sigma;
  const double sigma_max = sigma(0);
  if (sigma_max <= 0.0)
    throw config_error(
        "spectral_constants: zero matrix, condition number undefined");

  const double drop = kRankDropTol * sigma_max;
  int rank = 0;
  double sigma_min = sigma_max;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > drop) {
      sigma_min = sigma(i);
      ++rank;
    }
  }

  SpectralConstants c;
  c.frob_norm = frob_norm;
  c.sigma_max = sigma_max;
  c.sigma_min = sigma_min;
  c.kappa = frob_norm / sigma_min;
  c.numeric_rank = rank;
  return c;
}

Vector row_probabilities(const Matrix& a) {
  Vector norms_sq = a.rowwise().squaredNorm();
  for (Eigen::Index i = 0; i < norms_sq.size(); ++i) {
    if (norms_sq(i) <= 0.0)
      throw config_error("row_probabilities: row " + std::to_string(i) +
                         " is zero and carries no information");
  }
  return norms_sq / norms_sq.sum();
}

FrequencySplit make_split(const SvdBasis& basis, int level) {
  const int m = static_cast<int>(basis.v.rows());
  if (level < 1 || level > m)
    throw config_error("make_split: level " + std::to_string(level) +
                       " outside [1, " + std::to_string(m) + "]");
  return FrequencySplit{&basis, level};
}

std::pair<Vector, Vector> project(const FrequencySplit& split,
                                  const Vector& z) {
  const Matrix& v = split.basis->v;
  if (z.size() != v.rows())
    throw config_error("project: vector length does not match basis dimension");
  const auto v_low = v.leftCols(split.level);
  Vector z_low = v_low * (v_low.transpose() * z);
  Vector z_high = z - z_low;
  return {std::move(z_low), std::move(z_high)};
}

std::pair<double, double> band_energies(const FrequencySplit& split,
                                        const Vector& z) {
  const Matrix& v = split.basis->v;
  if (z.size() != v.rows())
    throw config_error(
        "band_energies: vector length does not match basis dimension");
  Vector coeff = v.transpose() * z;
  const double low = coeff.head(split.level).squaredNorm();
  const double high = coeff.tail(coeff.size() - split.level).squaredNorm();
  return {low, high};
}

namespace {

void check_boundaries(const std::vector<int>& boundaries, int m) {
  if (boundaries.empty())
    throw config_error("multi_band_project: no band boundaries given");
  int prev = 0;
  for (int b : boundaries) {
    if (b < 1 || b > m)
      throw config_error("multi_band_project: boundary " + std::to_string(b) +
                         " outside [1, " + std::to_string(m) + "]");
    if (b <= prev)
      throw config_error(
          "multi_band_project: boundaries must be strictly increasing");
    prev = b;
  }
}

}  // namespace

std::vector<Vector> multi_band_project(const SvdBasis& basis,
                                       const std::vector<int>& boundaries,
                                       const Vector& z) {
  const Matrix& v = basis.v;
  const int m = static_cast<int>(v.rows());
  check_boundaries(boundaries, m);
  if (z.size() != m)
    throw config_error(
        "multi_band_project: vector length does not match basis dimension");

  std::vector<Vector> parts;
  int lo = 0;
  for (std::size_t j = 0; j <= boundaries.size(); ++j) {
    const int hi = (j < boundaries.size()) ? boundaries[j] : m;
    const int width = hi - lo;
    if (width == 0) {
      parts.push_back(Vector::Zero(m));
    } else {
      const auto cols = v.middleCols(lo, width);
      parts.push_back(cols * (cols.transpose() * z));
    }
    lo = hi;
  }
  return parts;
}

std::vector<double> multi_band_energies(const SvdBasis& basis,
                                        const std::vector<int>& boundaries,
                                        const Vector& z) {
  const Matrix& v = basis.v;
  const int m = static_cast<int>(v.rows());
  check_boundaries(boundaries, m);
  if (z.size() != m)
    throw config_error(
        "multi_band_energies: vector length does not match basis dimension");

  Vector coeff = v.transpose() * z;
  std::vector<double> masses;
  int lo = 0;
  for (std::size_t j = 0; j <= boundaries.size(); ++j) {
    const int hi = (j < boundaries.size()) ? boundaries[j] : m;
    masses.push_back(coeff.segment(lo, hi - lo).squaredNorm());
    lo = hi;
  }
  return masses;
}

}  // namespace rkm
