#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "trislit/core.hpp"
#include "trislit/units.hpp"

namespace trislit::quantum {

using SparseReal = Eigen::SparseMatrix<double>;
using StateVector = Eigen::VectorXcd;

inline constexpr long default_max_product_dim = 262144;

/// Ladder and number operators of the three modes on the truncated product
/// space |n1, n2, n3> with n_k < cutoff_k, plus the three-wave interaction
/// a1 a2 a3^dag + a1^dag a2^dag a3 (hermitian by construction).  All
/// matrices are real; the evolution generator carries the factor i
/// separately.  Instances are immutable after construction and safe to
/// share across threads.
class ModeOperatorSet {
 public:
  explicit ModeOperatorSet(const std::array<int, 3>& cutoffs,
                           long max_dim = default_max_product_dim)
      : cutoffs_(cutoffs) {
    for (int c : cutoffs_)
      if (c < 2) throw std::invalid_argument("mode cutoffs must be >= 2");
    dim_ = long(cutoffs_[0]) * cutoffs_[1] * cutoffs_[2];
    if (dim_ > max_dim)
      throw std::invalid_argument(
          "product dimension " + std::to_string(dim_) + " exceeds the memory cap " +
          std::to_string(max_dim) + "; use a smaller Fock cutoff");

    for (int k = 0; k < 3; ++k) occupation_[k].resize(dim_);
    for (long i = 0; i < dim_; ++i) {
      const auto n = unpack(i);
      for (int k = 0; k < 3; ++k) occupation_[k][i] = double(n[k]);
    }

    for (int k = 0; k < 3; ++k) {
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(dim_);
      for (long i = 0; i < dim_; ++i) {
        auto n = unpack(i);
        if (n[k] == 0) continue;
        const double amp = std::sqrt(double(n[k]));
        auto m = n;
        m[k] -= 1;
        trips.emplace_back(pack(m), i, amp);  // a_k |n> = sqrt(n) |n-1>
      }
      lower_[k].resize(dim_, dim_);
      lower_[k].setFromTriplets(trips.begin(), trips.end());
      lower_[k].makeCompressed();
    }

    sfg_ = (lower_[0] * lower_[1] * SparseReal(lower_[2].transpose())).pruned();
    interaction_ = (sfg_ + SparseReal(sfg_.transpose())).pruned();
    interaction_.makeCompressed();
  }

  const std::array<int, 3>& cutoffs() const { return cutoffs_; }
  long dim() const { return dim_; }

  const SparseReal& lower(int mode) const { return lower_.at(mode); }
  const Eigen::VectorXd& occupation(int mode) const { return occupation_.at(mode); }

  /// a1 a2 a3^dag.
  const SparseReal& sfg_term() const { return sfg_; }
  /// a1 a2 a3^dag + a1^dag a2^dag a3; the evolution is exp(i Gamma * this).
  const SparseReal& interaction() const { return interaction_; }

  long pack(const std::array<int, 3>& n) const {
    return (long(n[0]) * cutoffs_[1] + n[1]) * cutoffs_[2] + n[2];
  }

  std::array<int, 3> unpack(long i) const {
    const int n3 = int(i % cutoffs_[2]);
    const long r = i / cutoffs_[2];
    return {int(r / cutoffs_[1]), int(r % cutoffs_[1]), n3};
  }

  double mode_expectation(int mode, const StateVector& psi) const {
    return occupation_[mode].dot(psi.cwiseAbs2());
  }

  /// <n1 + n2 + 2 n3>, conserved by the interaction.
  double conserved_charge(const StateVector& psi) const {
    const Eigen::VectorXd p = psi.cwiseAbs2();
    return occupation_[0].dot(p) + occupation_[1].dot(p) + 2.0 * occupation_[2].dot(p);
  }

  /// Probability mass sitting on the top Fock level of any mode; the
  /// truncation is trustworthy only while this stays negligible.
  double edge_occupation(const StateVector& psi) const {
    double mass = 0.0;
    for (long i = 0; i < dim_; ++i) {
      const auto n = unpack(i);
      if (n[0] == cutoffs_[0] - 1 || n[1] == cutoffs_[1] - 1 || n[2] == cutoffs_[2] - 1)
        mass += std::norm(psi[i]);
    }
    return mass;
  }

 private:
  std::array<int, 3> cutoffs_;
  long dim_ = 0;
  std::array<SparseReal, 3> lower_;
  std::array<Eigen::VectorXd, 3> occupation_;
  SparseReal sfg_;
  SparseReal interaction_;
};

inline ModeOperatorSet build_operators(const std::array<int, 3>& cutoffs,
                                       long max_dim = default_max_product_dim) {
  return ModeOperatorSet(cutoffs, max_dim);
}

/// Smallest admissible cutoff for a coherent amplitude: the Poisson tail of
/// |alpha|^2 must be contained, cutoff >= |alpha|^2 + 6 |alpha|.
inline int min_cutoff(Complex alpha) {
  const double a = std::abs(alpha);
  return std::max(2, int(std::ceil(a * a + 6.0 * a)));
}

/// Truncated coherent state, renormalized to unit norm.  Coefficients follow
/// c_n = c_{n-1} alpha / sqrt(n) from c_0 = exp(-|alpha|^2/2).
inline Eigen::VectorXcd coherent_state(Complex alpha, int cutoff) {
  if (cutoff < 2) throw std::invalid_argument("coherent_state: cutoff must be >= 2");
  if (cutoff < min_cutoff(alpha))
    throw std::invalid_argument("coherent_state: cutoff " + std::to_string(cutoff) +
                                " below the tail rule for |alpha| = " +
                                std::to_string(std::abs(alpha)));
  Eigen::VectorXcd v(cutoff);
  v[0] = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < cutoff; ++n) v[n] = v[n - 1] * alpha / std::sqrt(double(n));
  v /= v.norm();
  return v;
}

/// |alpha1> x |alpha2> x |alpha3> on the operator set's product space.
inline StateVector product_coherent_state(const ModeOperatorSet& ops,
                                          const std::array<Complex, 3>& alphas) {
  std::array<Eigen::VectorXcd, 3> parts;
  for (int k = 0; k < 3; ++k) parts[k] = coherent_state(alphas[k], ops.cutoffs()[k]);
  StateVector psi(ops.dim());
  for (long i = 0; i < ops.dim(); ++i) {
    const auto n = ops.unpack(i);
    psi[i] = parts[0][n[0]] * parts[1][n[1]] * parts[2][n[2]];
  }
  return psi;
}

}  // namespace trislit::quantum
