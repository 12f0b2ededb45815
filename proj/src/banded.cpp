#include "covert_pursuit/banded.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace covert {

BandedSpd::BandedSpd(std::size_t n, std::size_t half_bandwidth)
    : n_(n), p_(half_bandwidth), band_(n * (half_bandwidth + 1), 0.0) {}

void BandedSpd::set_zero() {
  std::fill(band_.begin(), band_.end(), 0.0);
  factorized_ = false;
}

void BandedSpd::add(std::size_t i, std::size_t j, double v) {
  if (i < j) std::swap(i, j);
  if (i - j > p_) throw std::out_of_range("entry outside the band");
  at(i, j) += v;
}

void BandedSpd::add_diagonal(double v) {
  for (std::size_t i = 0; i < n_; ++i) at(i, i) += v;
}

double BandedSpd::operator()(std::size_t i, std::size_t j) const {
  if (i < j) std::swap(i, j);
  if (i - j > p_) return 0.0;
  return at(i, j);
}

bool BandedSpd::factorize() {
  for (std::size_t j = 0; j < n_; ++j) {
    const std::size_t k0 = j > p_ ? j - p_ : 0;
    double d = at(j, j);
    for (std::size_t k = k0; k < j; ++k) d -= at(j, k) * at(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      factorized_ = false;
      return false;
    }
    const double ljj = std::sqrt(d);
    at(j, j) = ljj;
    const std::size_t i_end = std::min(n_ - 1, j + p_);
    for (std::size_t i = j + 1; i <= i_end; ++i) {
      const std::size_t kk0 = i > p_ ? i - p_ : 0;
      double s = at(i, j);
      for (std::size_t k = kk0; k < j; ++k) s -= at(i, k) * at(j, k);
      at(i, j) = s / ljj;
    }
  }
  factorized_ = true;
  return true;
}

void BandedSpd::solve_in_place(Eigen::Ref<Eigen::VectorXd> b) const {
  assert(factorized_);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t k0 = i > p_ ? i - p_ : 0;
    double s = b[i];
    for (std::size_t k = k0; k < i; ++k) s -= at(i, k) * b[k];
    b[i] = s / at(i, i);
  }
  for (std::size_t ii = n_; ii-- > 0;) {
    const std::size_t k_end = std::min(n_ - 1, ii + p_);
    double s = b[ii];
    for (std::size_t k = ii + 1; k <= k_end; ++k) s -= at(k, ii) * b[k];
    b[ii] = s / at(ii, ii);
  }
}

Eigen::VectorXd BandedSpd::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = b;
  solve_in_place(x);
  return x;
}

Eigen::VectorXd BandedSpd::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t k0 = i > p_ ? i - p_ : 0;
    for (std::size_t k = k0; k < i; ++k) {
      y[i] += at(i, k) * x[k];
      y[k] += at(i, k) * x[i];
    }
    y[i] += at(i, i) * x[i];
  }
  return y;
}

}  // namespace covert
