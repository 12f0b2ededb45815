#include "covert_pursuit/power_models.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include "covert_pursuit/errors.hpp"

namespace covert {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(name) + " must be strictly positive");
  }
}

}  // namespace

void PropulsionParams::validate() const {
  require_positive(p0, "p0");
  require_positive(p1, "p1");
  require_positive(u_tip, "u_tip");
  require_positive(v0, "v0");
  require_positive(d_f, "d_f");
  require_positive(rho, "rho");
  require_positive(s, "s");
  require_positive(a_disc, "a_disc");
}

void ThrustParams::validate() const {
  require_positive(mass, "mass");
  require_positive(g, "g");
}

void SolarParams::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("eta must lie in (0,1)");
  require_positive(s_panel, "s_panel");
  require_positive(p_i, "p_i");
  require_positive(alpha, "alpha");
  if (!(cos_zenith > 0.0 && cos_zenith <= 1.0)) {
    throw DomainError("cos_zenith must lie in (0,1]");
  }
}

double propulsion_power_exact(double v_h, const PropulsionParams& p) {
  if (!(v_h >= 0.0)) throw DomainError("horizontal speed must be nonnegative");
  const double v2 = v_h * v_h;
  const double blade = p.p0 * (1.0 + 3.0 * v2 / (p.u_tip * p.u_tip));
  const double induced = p.p1 * solve_q_exact(v_h, p.v0);
  const double parasite = 0.5 * p.d_f * p.rho * p.s * p.a_disc * v2 * v_h;
  return blade + induced + parasite;
}

double solve_q_exact(double v_h, double v0) {
  if (!(v_h >= 0.0)) throw DomainError("horizontal speed must be nonnegative");
  if (!(v0 > 0.0)) throw DomainError("v0 must be strictly positive");
  const double r = (v_h * v_h) / (v0 * v0);
  // (sqrt(r^2+4) - r)/2 rewritten as 2/(sqrt(r^2+4) + r) to avoid cancellation at high speed.
  const double q2 = 2.0 / (std::sqrt(r * r + 4.0) + r);
  return std::sqrt(q2);
}

double thrust_power(double z_curr, double z_prev, const ThrustParams& tp, double delta) {
  if (!(delta > 0.0)) throw DomainError("slot length must be strictly positive");
  return tp.weight_force() * (z_curr - z_prev) / delta;
}

double solar_power_exact(double z, const SolarParams& sp) {
  if (!(z >= 0.0 && z < kSolarMaxAltitude)) {
    throw DomainError("altitude outside the solar model range");
  }
  const double base = 1.0 - kSolarAltitudeCoeff * z;
  const double extinction = sp.alpha / sp.cos_zenith;
  return sp.eta * sp.s_panel * sp.p_i *
         std::exp(-extinction * std::pow(base, kSolarAltitudeExponent));
}

void audit_solar_linear(const SolarParams& sp, SolarLinearApprox& approx, int n_points) {
  const double lo = approx.z_band[0];
  const double hi = approx.z_band[1];
  double max_excess = -INFINITY;
  double max_gap = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const double z = lo + (hi - lo) * static_cast<double>(i) / (n_points - 1);
    const double exact = solar_power_exact(z, sp);
    const double line = approx(z);
    max_excess = std::max(max_excess, line - exact);
    max_gap = std::max(max_gap, (exact - line) / exact);
  }
  approx.max_excess = max_excess;
  approx.max_relative_gap = max_gap;
}

SolarLinearApprox fit_solar_linear(const SolarParams& sp, std::array<double, 2> z_band,
                                   int n_samples) {
  const double lo = z_band[0];
  const double hi = z_band[1];
  if (!(hi > lo)) throw DomainError("solar fit band is empty");
  if (n_samples < 2) throw DomainError("solar fit needs at least two samples");
  if (!(lo >= 0.0 && hi < kSolarMaxAltitude)) {
    throw DomainError("solar fit band outside the solar model range");
  }

  std::vector<double> zs(n_samples);
  std::vector<double> ps(n_samples);
  double mean_z = 0.0;
  double mean_p = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    zs[i] = lo + (hi - lo) * static_cast<double>(i) / (n_samples - 1);
    ps[i] = solar_power_exact(zs[i], sp);
    mean_z += zs[i];
    mean_p += ps[i];
  }
  mean_z /= n_samples;
  mean_p /= n_samples;
  double sxy = 0.0;
  double sxx = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    sxy += (zs[i] - mean_z) * (ps[i] - mean_p);
    sxx += (zs[i] - mean_z) * (zs[i] - mean_z);
  }

  SolarLinearApprox approx;
  approx.z_band = z_band;
  approx.c1 = sxy / sxx;
  approx.c2 = mean_p - approx.c1 * mean_z;

  // Lower the line below every sample, then by the worst dip of the curve between
  // samples (curvature * h^2 / 8, curvature taken from second differences).
  double shift = 0.0;
  double curvature = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    shift = std::max(shift, approx(zs[i]) - ps[i]);
    if (i > 0 && i + 1 < n_samples) {
      const double h = zs[i + 1] - zs[i];
      curvature = std::max(curvature, std::abs(ps[i + 1] - 2.0 * ps[i] + ps[i - 1]) / (h * h));
    }
  }
  const double h = (hi - lo) / (n_samples - 1);
  approx.c2 -= shift + 2.0 * curvature * h * h / 8.0;
  approx.source = "fitted";
  approx.audited = true;
  audit_solar_linear(sp, approx);
  return approx;
}

SolarLinearApprox solar_override(const SolarParams& sp, double c1, double c2,
                                 std::array<double, 2> z_band) {
  SolarLinearApprox approx;
  approx.c1 = c1;
  approx.c2 = c2;
  approx.z_band = z_band;
  approx.source = "override";
  approx.audited = false;
  audit_solar_linear(sp, approx);
  if (approx.max_excess > 0.0) {
    std::cerr << "warning: solar coefficients c1=" << c1 << ", c2=" << c2
              << " exceed the exact solar model by up to " << approx.max_excess
              << " W on [" << z_band[0] << ", " << z_band[1]
              << "] m; energy causality is not guaranteed\n";
  }
  return approx;
}

}  // namespace covert
