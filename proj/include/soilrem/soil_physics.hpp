#pragma once

// Van Genuchten-Mualem closures and the explicit finite-volume discretization
// of the 1D Richards equation.
//
// Conventions: node 0 is the surface compartment, node node_count-1 the
// bottom one. Depth z is positive downward and so are fluxes, so infiltration
// at the top and drainage at the bottom are both positive numbers.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>

namespace soilrem {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using HeadState = Eigen::VectorXd;  // capillary pressure head per node (m)

/// Capacity returned for h >= 0, where the retention curve is flat (1/m).
inline constexpr double kSaturatedCapacityFloor = 1e-8;

inline constexpr double kSecondsPerDay = 86400.0;

struct SoilHydraulicParams {
  double saturated_conductivity = 0.0;  // K_s (m/s)
  double theta_s = 0.0;                 // saturated moisture content (m3/m3)
  double theta_r = 0.0;                 // residual moisture content (m3/m3)
  double alpha = 0.0;                   // (1/m)
  double n = 0.0;                       // (-), > 1

  /// Throws Error(kConfiguration) when the parameter bundle is inadmissible.
  void validate() const;

  /// Loam soil column used throughout the case studies.
  static SoilHydraulicParams loam() { return {2.89e-6, 0.430, 0.0780, 3.60, 1.56}; }
};

double hydraulic_conductivity(double head, const SoilHydraulicParams& params);
double capillary_capacity(double head, const SoilHydraulicParams& params);
double moisture_from_head(double head, const SoilHydraulicParams& params);

/// dK/dh and dc/dh. Both are zero on the saturated branch; dK/dh grows
/// without bound as h approaches 0 from below.
double conductivity_derivative(double head, const SoilHydraulicParams& params);
double capacity_derivative(double head, const SoilHydraulicParams& params);

/// Analytic inverse of the retention curve. theta_s maps to h = 0.
double head_from_moisture(double theta, const SoilHydraulicParams& params);

struct SinkConfig {
  bool enabled = false;
  double crop_coefficient = 1.0;         // K_c (-)
  double evapotranspiration_rate = 0.0;  // E_t (m/s)
  double root_depth = 0.0;               // (m)

  void validate(double column_depth) const;
};

inline constexpr double mm_per_day_to_m_per_s(double v) { return v * 1e-3 / kSecondsPerDay; }
inline constexpr double m_per_s_to_mm_per_day(double v) { return v * 1e3 * kSecondsPerDay; }

/// Uniform root extraction K_c*E_t/root_depth over nodes whose centre lies
/// inside the root zone (m3 m-3 s-1). The head argument is unused: there is no
/// water-stress reduction.
double sink_rate(double head, std::size_t node, const SinkConfig& sink, double dz);

enum class ConductivityMean { kArithmetic, kGeometric };

/// Replaces K(h) and C(h) by constants. Used to reduce the column to the
/// linear diffusion equation in tests.
struct ConstantClosure {
  double conductivity = 0.0;
  double capacity = 1.0;
};

struct ColumnModel {
  double depth = 0.30;
  std::size_t node_count = 16;
  SoilHydraulicParams params = SoilHydraulicParams::loam();
  double dt = 120.0;  // sampling interval (s)
  int substeps = 12;
  SinkConfig sink;
  ConductivityMean mean = ConductivityMean::kArithmetic;
  std::optional<ConstantClosure> constant_closure;
  double max_internal_step = 60.0;     // stability guard on dt/substeps (s)
  double max_head_change = 1.0;        // per substep, larger jumps count as blow-up (m)

  double dz() const { return depth / static_cast<double>(node_count); }
  double internal_step() const { return dt / substeps; }
  void validate() const;

  double conductivity(double head) const;
  double capacity(double head) const;
  double conductivity_slope(double head) const;
  double capacity_slope(double head) const;
};

/// Water moved across the column boundaries during one step_state call (m).
struct WaterBalance {
  double infiltration = 0.0;
  double drainage = 0.0;
  double extraction = 0.0;
};

/// Total water stored in the column, sum(theta_i * dz) (m).
double water_storage(const HeadState& x, const ColumnModel& column);

/// Advances one sampling interval with `column.substeps` explicit Euler steps.
/// Throws InstabilityError on a non-finite or runaway head.
HeadState step_state(const HeadState& x, double irrigation, const ColumnModel& column,
                     WaterBalance* balance = nullptr);

/// step_state together with its exact Jacobian, propagated through the
/// substeps alongside the state.
HeadState step_state_with_jacobian(const HeadState& x, double irrigation, const ColumnModel& column,
                                   Matrix& jacobian, WaterBalance* balance = nullptr);

Matrix state_jacobian(const HeadState& x, double irrigation, const ColumnModel& column);

/// Volumetric moisture at the sensed nodes.
Vector output_map(const HeadState& x, std::span<const std::size_t> sensors,
                  const SoilHydraulicParams& params);

Matrix output_jacobian(const HeadState& x, std::span<const std::size_t> sensors,
                       const SoilHydraulicParams& params);

}  // namespace soilrem
