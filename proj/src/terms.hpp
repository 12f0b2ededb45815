#pragma once

// Row and objective terms of the window subproblem expressed as smooth functions of
// at most five affine forms of the packed decision vector. Shared by the value-only
// audits in dc_transform.cpp and the Newton engine in subproblem_solver.cpp.

#include <array>
#include <cmath>
#include <cstddef>

#include <Eigen/Core>

#include "covert_pursuit/dc_transform.hpp"

namespace covert::detail {

inline constexpr int kX = 0;
inline constexpr int kY = 1;
inline constexpr int kZ = 2;
inline constexpr int kQ = 3;

inline int var(std::size_t k, int coord) { return static_cast<int>(4 * k) + coord; }

/// constant + sum coef[i] * X[idx[i]]
struct LinForm {
  int nnz = 0;
  std::array<int, 4> idx{};
  std::array<double, 4> coef{};
  double constant = 0.0;

  void add(int i, double c) {
    idx[nnz] = i;
    coef[nnz] = c;
    ++nnz;
  }
  double eval(const Eigen::VectorXd& X) const {
    double v = constant;
    for (int i = 0; i < nnz; ++i) v += coef[i] * X[idx[i]];
    return v;
  }
};

/// phi(w_0, ..., w_{m-1}) with first and second derivatives in w.
struct Term {
  int m = 0;
  std::array<LinForm, 5> w;
  std::array<double, 5> wv{};
  double val = 0.0;
  std::array<double, 5> g{};
  std::array<std::array<double, 5>, 5> h{};

  void reset() {
    m = 0;
    val = 0.0;
    g.fill(0.0);
    for (auto& row : h) row.fill(0.0);
  }
  int push(const LinForm& f, const Eigen::VectorXd& X) {
    w[m] = f;
    wv[m] = f.eval(X);
    return m++;
  }
};

/// Reads coordinates of window slot k, with k = -1 mapped to the anchor constants.
class FormBuilder {
 public:
  explicit FormBuilder(const ConvexSubproblem& sub) : sub_(sub) {}

  LinForm coord(long k, int c) const {
    LinForm f;
    if (k >= 0) {
      f.add(var(static_cast<std::size_t>(k), c), 1.0);
    } else if (k == -1) {
      f.constant = anchor_value(c);
    } else {
      f.constant = sub_.z_before_anchor.value_or(sub_.anchor.z);
    }
    return f;
  }

  /// coordinate c of slot k minus that of slot k - 1.
  LinForm diff(long k, int c) const { return combine(coord(k, c), 1.0, coord(k - 1, c), -1.0); }

  /// (z_k - z_{k-1}) - (z_{k-1} - z_{k-2}).
  LinForm accel(long k) const {
    LinForm f = combine(coord(k, kZ), 1.0, coord(k - 1, kZ), -2.0);
    return combine(f, 1.0, coord(k - 2, kZ), 1.0);
  }

  static LinForm combine(const LinForm& a, double ca, const LinForm& b, double cb) {
    LinForm f;
    f.constant = ca * a.constant + cb * b.constant;
    for (int i = 0; i < a.nnz; ++i) f.add(a.idx[i], ca * a.coef[i]);
    for (int i = 0; i < b.nnz; ++i) {
      bool merged = false;
      for (int j = 0; j < f.nnz; ++j) {
        if (f.idx[j] == b.idx[i]) {
          f.coef[j] += cb * b.coef[i];
          merged = true;
        }
      }
      if (!merged) f.add(b.idx[i], cb * b.coef[i]);
    }
    return f;
  }

 private:
  double anchor_value(int c) const {
    switch (c) {
      case kX: return sub_.anchor.x;
      case kY: return sub_.anchor.y;
      case kZ: return sub_.anchor.z;
      default: return 0.0;
    }
  }
  const ConvexSubproblem& sub_;
};

// ---- scalar pieces ---------------------------------------------------------

/// (u^2 + v^2 + eps^2)^{3/2} - eps^3 with derivatives in (u, v).
inline void smoothed_cube(double u, double v, double eps, double scale, Term& t, int iu, int iv) {
  const double r2 = u * u + v * v + eps * eps;
  const double r = std::sqrt(r2);
  t.val += scale * (r2 * r - eps * eps * eps);
  t.g[iu] += scale * 3.0 * u * r;
  t.g[iv] += scale * 3.0 * v * r;
  const double inv = r > 0.0 ? 1.0 / r : 0.0;
  t.h[iu][iu] += scale * (3.0 * r + 3.0 * u * u * inv);
  t.h[iv][iv] += scale * (3.0 * r + 3.0 * v * v * inv);
  t.h[iu][iv] += scale * 3.0 * u * v * inv;
  t.h[iv][iu] += scale * 3.0 * u * v * inv;
}

/// sqrt(u^2 + v^2 + eps^2) - eps with derivatives in (u, v).
inline void smoothed_norm(double u, double v, double eps, double scale, Term& t, int iu, int iv) {
  const double r = std::sqrt(u * u + v * v + eps * eps);
  t.val += scale * (r - eps);
  if (r == 0.0) return;
  t.g[iu] += scale * u / r;
  t.g[iv] += scale * v / r;
  const double r3 = r * r * r;
  t.h[iu][iu] += scale * (1.0 / r - u * u / r3);
  t.h[iv][iv] += scale * (1.0 / r - v * v / r3);
  t.h[iu][iv] -= scale * u * v / r3;
  t.h[iv][iu] -= scale * u * v / r3;
}

/// Surrogate propulsion of slot k, optionally plus thrust and minus linear solar
/// (the per-slot consumption entering energy causality).
inline void propulsion_term(const ConvexSubproblem& sub, const FormBuilder& fb, std::size_t k,
                            const Eigen::VectorXd& X, bool with_energy_terms, Term& t) {
  t.reset();
  const long kk = static_cast<long>(k);
  const int iu = t.push(fb.diff(kk, kX), X);
  const int iv = t.push(fb.diff(kk, kY), X);
  const int iq = t.push(fb.coord(kk, kQ), X);
  const double u = t.wv[iu];
  const double v = t.wv[iv];
  const auto& c = sub.propulsion;
  t.val = c.p0 + c.quad * (u * u + v * v) + c.p1 * t.wv[iq];
  t.g[iu] = 2.0 * c.quad * u;
  t.g[iv] = 2.0 * c.quad * v;
  t.g[iq] = c.p1;
  t.h[iu][iu] = 2.0 * c.quad;
  t.h[iv][iv] = 2.0 * c.quad;
  smoothed_cube(u, v, sub.smoothing_eps, c.cubic, t, iu, iv);
  if (with_energy_terms) {
    const int idz = t.push(fb.diff(kk, kZ), X);
    const int iz = t.push(fb.coord(kk, kZ), X);
    t.val += sub.thrust_per_meter * t.wv[idz] - sub.solar_c1 * t.wv[iz] - sub.solar_c2;
    t.g[idz] = sub.thrust_per_meter;
    t.g[iz] = -sub.solar_c1;
  }
}

inline void linear_term(const LinForm& f, double sign, double offset, const Eigen::VectorXd& X, Term& t) {
  t.reset();
  const int i = t.push(f, X);
  t.val = sign * t.wv[i] + offset;
  t.g[i] = sign;
}

/// Quadratic penalty for leaving the flight region: squared hinges on the trailing
/// rows plus the squared normalized excess of the distance row.
inline void soft_ffr_term(const SoftFfrRow& r, double weight, const FormBuilder& fb, const Eigen::VectorXd& X,
                          Term& t) {
  t.reset();
  const long k = static_cast<long>(r.k);
  LinForm fx = fb.coord(k, kX);
  fx.constant -= r.a;
  LinForm fy = fb.coord(k, kY);
  fy.constant -= r.b;
  LinForm fz = fb.coord(k, kZ);
  fz.constant -= r.h;
  const int ix = t.push(fx, X);
  const int iy = t.push(fy, X);
  const int iz = t.push(fz, X);
  for (int i : {ix, iy}) {
    if (t.wv[i] > 0.0) {
      t.val += weight * t.wv[i] * t.wv[i];
      t.g[i] += 2.0 * weight * t.wv[i];
      t.h[i][i] += 2.0 * weight;
    }
  }
  const double d2 = t.wv[ix] * t.wv[ix] + t.wv[iy] * t.wv[iy] + t.wv[iz] * t.wv[iz];
  const double e = (d2 - r.radius * r.radius) / (2.0 * r.radius);
  if (e > 0.0) {
    t.val += weight * e * e;
    for (int i : {ix, iy, iz}) {
      t.g[i] += 2.0 * weight * e * t.wv[i] / r.radius;
      for (int j : {ix, iy, iz}) {
        t.h[i][j] += 2.0 * weight * t.wv[i] * t.wv[j] / (r.radius * r.radius);
      }
      t.h[i][i] += 2.0 * weight * e / r.radius;
    }
  }
}

/// Calls fn(term) for every one-sided row g(X) <= 0 except energy causality, in the
/// order used by constraint_slacks. Returns false if X leaves the domain (q <= 0).
template <typename Fn>
bool for_each_local_row(const ConvexSubproblem& sub, const Eigen::VectorXd& X, Fn&& fn) {
  FormBuilder fb(sub);
  Term t;
  for (const auto& r : sub.horizontal) {
    t.reset();
    const long k = static_cast<long>(r.k);
    const int iu = t.push(fb.diff(k, kX), X);
    const int iv = t.push(fb.diff(k, kY), X);
    t.val = t.wv[iu] * t.wv[iu] + t.wv[iv] * t.wv[iv] - r.radius * r.radius;
    t.g[iu] = 2.0 * t.wv[iu];
    t.g[iv] = 2.0 * t.wv[iv];
    t.h[iu][iu] = 2.0;
    t.h[iv][iv] = 2.0;
    fn(t);
  }
  for (const auto& r : sub.vertical) {
    const LinForm f = fb.diff(static_cast<long>(r.k), kZ);
    linear_term(f, 1.0, -r.bound, X, t);
    fn(t);
    linear_term(f, -1.0, -r.bound, X, t);
    fn(t);
  }
  for (const auto& r : sub.accel) {
    const LinForm f = fb.accel(static_cast<long>(r.k));
    linear_term(f, 1.0, -r.bound, X, t);
    fn(t);
    linear_term(f, -1.0, -r.bound, X, t);
    fn(t);
  }
  for (const auto& r : sub.ffr_distance) {
    t.reset();
    const long k = static_cast<long>(r.k);
    LinForm fx = fb.coord(k, kX);
    fx.constant -= r.a;
    LinForm fy = fb.coord(k, kY);
    fy.constant -= r.b;
    LinForm fz = fb.coord(k, kZ);
    fz.constant -= r.h;
    const int ix = t.push(fx, X);
    const int iy = t.push(fy, X);
    const int iz = t.push(fz, X);
    t.val = t.wv[ix] * t.wv[ix] + t.wv[iy] * t.wv[iy] + t.wv[iz] * t.wv[iz] - r.radius * r.radius;
    for (int i : {ix, iy, iz}) {
      t.g[i] = 2.0 * t.wv[i];
      t.h[i][i] = 2.0;
    }
    fn(t);
  }
  for (const auto& r : sub.ffr_bounds) {
    const LinForm f = fb.coord(static_cast<long>(r.k), r.coord);
    if (r.upper) {
      linear_term(f, 1.0, -r.bound, X, t);
    } else {
      linear_term(f, -1.0, r.bound, X, t);
    }
    fn(t);
  }
  for (const auto& r : sub.sca) {
    t.reset();
    const long k = static_cast<long>(r.k);
    const int iu = t.push(fb.diff(k, kX), X);
    const int iv = t.push(fb.diff(k, kY), X);
    const int iq = t.push(fb.coord(k, kQ), X);
    const double q = t.wv[iq];
    if (!(q > 0.0)) return false;
    const auto& e = r.expansion;
    t.val = 1.0 / (q * q) - e(t.wv[iu], t.wv[iv], q);
    t.g[iu] = -e.coef_dx;
    t.g[iv] = -e.coef_dy;
    t.g[iq] = -2.0 / (q * q * q) - e.coef_q;
    t.h[iq][iq] = 6.0 / (q * q * q * q);
    fn(t);
  }
  for (std::size_t k : sub.q_nonneg) {
    linear_term(fb.coord(static_cast<long>(k), kQ), -1.0, 0.0, X, t);
    fn(t);
  }
  for (const auto& r : sub.heading) {
    const long k = static_cast<long>(r.k);
    // slope * dx - dy <= 0
    const LinForm f = FormBuilder::combine(fb.diff(k, kX), r.slope, fb.diff(k, kY), -1.0);
    linear_term(f, 1.0, 0.0, X, t);
    fn(t);
    linear_term(fb.diff(k, kX), -1.0, 0.0, X, t);
    fn(t);
  }
  return true;
}

/// Accumulates `weight * term` into value, gradient and (lower) banded Hessian.
template <typename Hess>
void accumulate(const Term& t, double weight, double& value, Eigen::VectorXd& grad, Hess* hess,
                double outer_weight = 0.0) {
  value += weight * t.val;
  for (int i = 0; i < t.m; ++i) {
    const double gi = weight * t.g[i];
    if (gi == 0.0) continue;
    for (int a = 0; a < t.w[i].nnz; ++a) grad[t.w[i].idx[a]] += gi * t.w[i].coef[a];
  }
  if (hess == nullptr) return;
  for (int i = 0; i < t.m; ++i) {
    for (int j = 0; j < t.m; ++j) {
      const double hij = weight * t.h[i][j] + outer_weight * t.g[i] * t.g[j];
      if (hij == 0.0) continue;
      for (int a = 0; a < t.w[i].nnz; ++a) {
        for (int b = 0; b < t.w[j].nnz; ++b) {
          const int ia = t.w[i].idx[a];
          const int jb = t.w[j].idx[b];
          if (ia >= jb) hess->add(ia, jb, hij * t.w[i].coef[a] * t.w[j].coef[b]);
        }
      }
    }
  }
}

}  // namespace covert::detail
