#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rkm/analysis.hpp"

namespace rkm {

// One property check over a sweep.  margin is the worst room left before the
// check would fail, so pass == (margin >= 0).
struct CheckResult {
  std::string name;
  double margin = 0.0;
  bool pass = false;
};

struct VerificationSystem {
  LinearSystem system;
  SvdBasis basis;
  double frob_norm = 0.0;
  SpectralConstants spectral;
};

// Fixture set spanning the structural corner cases: identity (flat spectrum),
// a tiny diagonal, the planar circle rows, and the three integral-equation
// problems (mild through severe decay).  Built once per process.
const std::vector<VerificationSystem>& verification_systems();

// Truncation levels exercised per system: {1, 5, 10, m} clipped to [1, m].
std::vector<int> verification_levels(int m);

// Band inequalities of the split singular basis: two-sided low-band
// envelopes, the high-band envelope, cross-band orthogonality, per-row
// high-band mass bounds and their sum.
std::vector<CheckResult> verify_band_lemmas();

// One-step dominance of the exact-data band recursion over the exact
// conditional expectation, swept over random errors, plus the reduction of
// the L = m low-band rate to the global contraction rate.
std::vector<CheckResult> verify_exact_dominance();

// Same dominance under additive noise, swept over random errors and noise
// vectors, plus the band-sum consistency against the independently computed
// full-error expectation.
std::vector<CheckResult> verify_noisy_dominance();

// Stochastic-gradient identities: the row projection equals the importance
// weighted gradient step, mean/covariance closed forms match the literal
// weighted sums, the covariance is positive semidefinite and vanishes at the
// solution, and the recentered variance-reduced estimate stays unbiased.
std::vector<CheckResult> verify_sgd_properties();

// Propagation matrix eigenstructure: closed forms against a direct
// eigensolver, the small-alpha expansions, power consistency, the noisy
// recursion's one-step identity and its Monte-Carlo dominance.
std::vector<CheckResult> verify_propagation();

// Suite names accepted by the command line: lemmas, theorem33, theorem35,
// props, propagation, all.
std::vector<CheckResult> run_suite(std::string_view suite);

}  // namespace rkm
