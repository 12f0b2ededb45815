#pragma once

// Physical power models of a solar-powered rotary-wing UAV.
//
// All functions are pure and operate on immutable parameter records.
// Units: W, m, s, kg unless noted.

#include <array>
#include <optional>
#include <string>

namespace covert {

struct PropulsionParams {
  double p0 = 3.4;       // blade profile power (W)
  double p1 = 118.0;     // induced power (W)
  double u_tip = 60.0;   // rotor tip speed (m/s)
  double v0 = 5.4;       // mean rotor induced velocity in hover (m/s)
  double d_f = 0.3;      // fuselage drag ratio
  double rho = 1.225;    // air density (kg/m^3)
  double s = 0.03;       // rotor solidity
  double a_disc = 0.28;  // rotor disc area (m^2)

  void validate() const;
};

struct ThrustParams {
  double mass = 4.0;  // kg
  double g = 9.8;     // m/s^2

  double weight_force() const { return mass * g; }
  void validate() const;
};

struct SolarParams {
  double eta = 0.4;         // panel efficiency
  double s_panel = 0.5;     // panel size (m^2)
  double p_i = 1367.0;      // beam intensity above the atmosphere (W/m^2)
  double alpha = 0.8978;    // sum atmospheric extinction
  double cos_zenith = 1.0;  // fixed for the mission

  void validate() const;
};

/// Linear under-estimator c1 * z + c2 of the harvested solar power on an altitude band.
struct SolarLinearApprox {
  double c1 = 0.0;
  double c2 = 0.0;
  std::array<double, 2> z_band{0.0, 0.0};
  /// max over the audit grid of (line - exact); <= 0 when the line is a valid lower bound.
  double max_excess = 0.0;
  /// max over the audit grid of (exact - line) / exact.
  double max_relative_gap = 0.0;
  bool audited = true;
  std::string source = "fitted";  // "fitted" or "override"

  double operator()(double z) const { return c1 * z + c2; }
};

/// Barometric coefficient of the altitude attenuation term.
inline constexpr double kSolarAltitudeCoeff = 2.2556e-5;
inline constexpr double kSolarAltitudeExponent = 5.2561;
/// Upper altitude limit of the solar model (base of the power law reaches zero).
inline constexpr double kSolarMaxAltitude = 1.0 / kSolarAltitudeCoeff;

/// Horizontal-flight propulsion power at speed v_h. Throws DomainError for v_h < 0.
double propulsion_power_exact(double v_h, const PropulsionParams& p);

/// Positive root q of 1/q^2 = q^2 + v_h^2/v0^2; P1 * q is the induced-power term.
double solve_q_exact(double v_h, double v0);

/// Vertical thrust power W * (z_curr - z_prev) / delta. Negative on descent.
double thrust_power(double z_curr, double z_prev, const ThrustParams& tp, double delta);

/// Harvested solar power at altitude z. Strictly increasing on [0, kSolarMaxAltitude).
double solar_power_exact(double z, const SolarParams& sp);

/// Least-squares line through the exact solar curve on `z_band`, shifted down until it
/// lies below the curve everywhere on the band. Throws DomainError on an empty band.
SolarLinearApprox fit_solar_linear(const SolarParams& sp, std::array<double, 2> z_band,
                                   int n_samples);

/// Wraps user-provided coefficients. The lower-bound audit is recorded but not enforced.
SolarLinearApprox solar_override(const SolarParams& sp, double c1, double c2,
                                 std::array<double, 2> z_band);

/// Dense-grid audit of `approx` against the exact model; fills max_excess and max_relative_gap.
void audit_solar_linear(const SolarParams& sp, SolarLinearApprox& approx, int n_points = 10001);

}  // namespace covert
