#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace covert {

/// Symmetric positive definite matrix stored as its lower band, with in-place
/// Cholesky factorization. Cost O(n p^2) to factor, O(n p) per solve.
class BandedSpd {
 public:
  BandedSpd() = default;
  BandedSpd(std::size_t n, std::size_t half_bandwidth);

  std::size_t size() const { return n_; }
  std::size_t half_bandwidth() const { return p_; }

  void set_zero();
  /// Adds v to entry (i, j) and its mirror. Requires |i - j| <= half_bandwidth.
  void add(std::size_t i, std::size_t j, double v);
  void add_diagonal(double v);
  double operator()(std::size_t i, std::size_t j) const;

  /// Overwrites the band with its Cholesky factor. Returns false when a pivot is not positive.
  bool factorize();
  bool factorized() const { return factorized_; }

  /// Solves A x = b in place using the factor.
  void solve_in_place(Eigen::Ref<Eigen::VectorXd> b) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  /// y = A x (before factorization).
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;

 private:
  double& at(std::size_t i, std::size_t j) { return band_[i * (p_ + 1) + (i - j)]; }
  double at(std::size_t i, std::size_t j) const { return band_[i * (p_ + 1) + (i - j)]; }

  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<double> band_;
  bool factorized_ = false;
};

}  // namespace covert
