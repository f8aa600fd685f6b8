#include "soilrem/soil_physics.hpp"

#include "soilrem/errors.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace soilrem {

namespace {

void require_finite(double head, const char* what) {
  if (!std::isfinite(head)) {
    throw Error(ErrorCode::kDomain, std::string(what) + ": non-finite pressure head");
  }
}

// (-alpha*h)^n for h < 0.
double scaled_suction_power(double head, const SoilHydraulicParams& p) {
  return std::pow(-p.alpha * head, p.n);
}

}  // namespace

void SoilHydraulicParams::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfiguration, "soil parameters: " + m); };
  if (!(saturated_conductivity > 0.0) || !std::isfinite(saturated_conductivity)) fail("K_s must be positive");
  if (!(theta_r >= 0.0 && theta_r < theta_s && theta_s <= 1.0)) fail("need 0 <= theta_r < theta_s <= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be positive");
  if (!(n > 1.0) || !std::isfinite(n)) fail("n must exceed 1");
}

double hydraulic_conductivity(double head, const SoilHydraulicParams& p) {
  require_finite(head, "hydraulic_conductivity");
  if (head >= 0.0) return p.saturated_conductivity;
  const double m = 1.0 - 1.0 / p.n;
  const double s = scaled_suction_power(head, p);
  const double se = std::pow(1.0 + s, -m);
  // Se^(1/m) = 1/(1+s); 1 - (1 - Se^(1/m))^m evaluated without cancellation.
  const double inner = -std::expm1(m * std::log1p(-1.0 / (1.0 + s)));
  return p.saturated_conductivity * std::sqrt(se) * inner * inner;
}

double capillary_capacity(double head, const SoilHydraulicParams& p) {
  require_finite(head, "capillary_capacity");
  if (head >= 0.0) return kSaturatedCapacityFloor;
  const double m = 1.0 - 1.0 / p.n;
  const double x = -p.alpha * head;
  return (p.theta_s - p.theta_r) * p.alpha * p.n * m * std::pow(x, p.n - 1.0) *
         std::pow(1.0 + std::pow(x, p.n), -(2.0 - 1.0 / p.n));
}

double conductivity_derivative(double head, const SoilHydraulicParams& p) {
  require_finite(head, "conductivity_derivative");
  if (head >= 0.0) return 0.0;
  const double m = 1.0 - 1.0 / p.n;
  const double x = -p.alpha * head;
  const double s = std::pow(x, p.n);
  if (!(s > 0.0)) return 0.0;
  const double se = std::pow(1.0 + s, -m);
  const double w = 1.0 / (1.0 + s);              // Se^(1/m)
  const double one_minus_w = s / (1.0 + s);
  const double g = -std::expm1(m * std::log1p(-w));
  const double dg_dse = std::pow(one_minus_w, m - 1.0) * w / se;
  const double dse_dh = p.alpha * p.n * m * std::pow(x, p.n - 1.0) * std::pow(1.0 + s, -(m + 1.0));
  const double root = std::sqrt(se);
  return p.saturated_conductivity * (0.5 * g * g / root + 2.0 * root * g * dg_dse) * dse_dh;
}

double capacity_derivative(double head, const SoilHydraulicParams& p) {
  require_finite(head, "capacity_derivative");
  if (head >= 0.0) return 0.0;
  const double m = 1.0 - 1.0 / p.n;
  const double x = -p.alpha * head;
  const double s = std::pow(x, p.n);
  return (p.theta_s - p.theta_r) * p.alpha * p.alpha * p.n * m * std::pow(x, p.n - 2.0) *
         std::pow(1.0 + s, -(m + 2.0)) * (p.n * s - (p.n - 1.0));
}

double moisture_from_head(double head, const SoilHydraulicParams& p) {
  require_finite(head, "moisture_from_head");
  if (head >= 0.0) return p.theta_s;
  const double m = 1.0 - 1.0 / p.n;
  return (p.theta_s - p.theta_r) * std::pow(1.0 + scaled_suction_power(head, p), -m) + p.theta_r;
}

double head_from_moisture(double theta, const SoilHydraulicParams& p) {
  if (!std::isfinite(theta) || !(theta > p.theta_r) || theta > p.theta_s) {
    std::ostringstream os;
    os << "head_from_moisture: theta " << theta << " outside (" << p.theta_r << ", " << p.theta_s << "]";
    throw Error(ErrorCode::kRange, os.str());
  }
  if (theta == p.theta_s) return 0.0;
  const double m = 1.0 - 1.0 / p.n;
  const double se = (theta - p.theta_r) / (p.theta_s - p.theta_r);
  // (1+s)^(-m) = se  =>  s = se^(-1/m) - 1, computed as expm1 for se near 1.
  const double s = std::expm1(-std::log(se) / m);
  return -std::pow(s, 1.0 / p.n) / p.alpha;
}

void SinkConfig::validate(double column_depth) const {
  if (!enabled) return;
  if (!(evapotranspiration_rate >= 0.0) || !std::isfinite(evapotranspiration_rate)) {
    throw Error(ErrorCode::kConfiguration, "sink: evapotranspiration rate must be >= 0");
  }
  if (!(crop_coefficient >= 0.0) || !std::isfinite(crop_coefficient)) {
    throw Error(ErrorCode::kConfiguration, "sink: crop coefficient must be >= 0");
  }
  if (!(root_depth > 0.0) || root_depth > column_depth * (1.0 + 1e-12)) {
    throw Error(ErrorCode::kConfiguration, "sink: root depth must lie in (0, column depth]");
  }
}

double sink_rate(double /*head*/, std::size_t node, const SinkConfig& sink, double dz) {
  if (!sink.enabled) return 0.0;
  const double centre = (static_cast<double>(node) + 0.5) * dz;
  if (centre > sink.root_depth) return 0.0;
  return sink.crop_coefficient * sink.evapotranspiration_rate / sink.root_depth;
}

void ColumnModel::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfiguration, "column: " + m); };
  if (!(depth > 0.0) || !std::isfinite(depth)) fail("depth must be positive");
  if (node_count < 1) fail("need at least one node");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
  if (substeps < 1) fail("substeps must be >= 1");
  if (internal_step() > max_internal_step) {
    std::ostringstream os;
    os << "internal step dt/substeps = " << internal_step() << " s exceeds the stability guard of "
       << max_internal_step << " s";
    fail(os.str());
  }
  if (!(max_head_change > 0.0)) fail("max_head_change must be positive");
  params.validate();
  sink.validate(depth);
  if (constant_closure && !(constant_closure->capacity > 0.0 && constant_closure->conductivity >= 0.0)) {
    fail("constant closure needs capacity > 0 and conductivity >= 0");
  }
}

double ColumnModel::conductivity(double head) const {
  return constant_closure ? constant_closure->conductivity : hydraulic_conductivity(head, params);
}

double ColumnModel::capacity(double head) const {
  return constant_closure ? constant_closure->capacity : capillary_capacity(head, params);
}

double ColumnModel::conductivity_slope(double head) const {
  return constant_closure ? 0.0 : conductivity_derivative(head, params);
}

double ColumnModel::capacity_slope(double head) const {
  return constant_closure ? 0.0 : capacity_derivative(head, params);
}

double water_storage(const HeadState& x, const ColumnModel& column) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) total += moisture_from_head(x[i], column.params);
  return total * column.dz();
}

namespace {

HeadState advance(const HeadState& x, double irrigation, const ColumnModel& column, WaterBalance* balance,
                  Matrix* jacobian) {
  const auto n = static_cast<Eigen::Index>(column.node_count);
  if (x.size() != n) {
    throw Error(ErrorCode::kConfiguration, "step_state: state length does not match node count");
  }
  for (Eigen::Index i = 0; i < n; ++i) require_finite(x[i], "step_state");
  if (!std::isfinite(irrigation) || irrigation < 0.0) {
    throw Error(ErrorCode::kDomain, "step_state: irrigation rate must be finite and >= 0");
  }

  const double dz = column.dz();
  const double h_dt = column.internal_step();
  const bool geometric = column.mean == ConductivityMean::kGeometric;
  HeadState h = x;
  Vector k(n), flux(n + 1), sink(n), cap(n);
  for (Eigen::Index i = 0; i < n; ++i) sink[i] = sink_rate(0.0, static_cast<std::size_t>(i), column.sink, dz);

  // Tangent bookkeeping: d flux[f] / d h at the two nodes sharing face f.
  Vector dk, dflux_up, dflux_down, lower, diag, upper;
  Matrix next_jac;
  if (jacobian) {
    jacobian->setIdentity(n, n);
    dk.resize(n);
    dflux_up = Vector::Zero(n + 1);    // w.r.t. the node above the face
    dflux_down = Vector::Zero(n + 1);  // w.r.t. the node below the face
    lower.resize(n);
    diag.resize(n);
    upper.resize(n);
    next_jac.resize(n, n);
  }

  for (int sub = 0; sub < column.substeps; ++sub) {
    for (Eigen::Index i = 0; i < n; ++i) {
      k[i] = column.conductivity(h[i]);
      cap[i] = column.capacity(h[i]);
      if (jacobian) dk[i] = column.conductivity_slope(h[i]);
    }
    flux[0] = irrigation;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double k_face = geometric ? std::sqrt(k[i] * k[i + 1]) : 0.5 * (k[i] + k[i + 1]);
      const double drive = 1.0 - (h[i + 1] - h[i]) / dz;
      flux[i + 1] = k_face * drive;
      if (jacobian) {
        double dface_up = 0.5 * dk[i];
        double dface_down = 0.5 * dk[i + 1];
        if (geometric) {
          dface_up = k[i] > 0.0 ? 0.5 * std::sqrt(k[i + 1] / k[i]) * dk[i] : 0.0;
          dface_down = k[i + 1] > 0.0 ? 0.5 * std::sqrt(k[i] / k[i + 1]) * dk[i + 1] : 0.0;
        }
        dflux_up[i + 1] = dface_up * drive + k_face / dz;
        dflux_down[i + 1] = dface_down * drive - k_face / dz;
      }
    }
    flux[n] = k[n - 1];  // free drainage
    if (jacobian) dflux_up[n] = dk[n - 1];

    for (Eigen::Index i = 0; i < n; ++i) {
      const double net = (flux[i] - flux[i + 1]) / dz - sink[i];
      const double rate = net / cap[i];
      if (jacobian) {
        lower[i] = dflux_up[i] / (dz * cap[i]);
        upper[i] = -dflux_down[i + 1] / (dz * cap[i]);
        diag[i] = (dflux_down[i] - dflux_up[i + 1]) / (dz * cap[i]) -
                  net * column.capacity_slope(h[i]) / (cap[i] * cap[i]);
      }
      const double next = h[i] + h_dt * rate;
      if (!std::isfinite(next) || std::abs(next - h[i]) > column.max_head_change) {
        std::ostringstream os;
        os << "step_state: blow-up at node " << i + 1 << " in substep " << sub + 1 << " (h " << h[i] << " -> "
           << next << ")";
        throw InstabilityError(static_cast<std::size_t>(i), sub, os.str());
      }
      h[i] = next;
    }
    if (jacobian) {
      // J <- (I + h_dt * D) J with D tridiagonal.
      const Matrix& j = *jacobian;
      for (Eigen::Index i = 0; i < n; ++i) {
        next_jac.row(i) = (1.0 + h_dt * diag[i]) * j.row(i);
        if (i > 0) next_jac.row(i) += h_dt * lower[i] * j.row(i - 1);
        if (i + 1 < n) next_jac.row(i) += h_dt * upper[i] * j.row(i + 1);
      }
      jacobian->swap(next_jac);
    }
    if (balance) {
      balance->infiltration += h_dt * flux[0];
      balance->drainage += h_dt * flux[n];
      balance->extraction += h_dt * sink.sum() * dz;
    }
  }
  return h;
}

}  // namespace

HeadState step_state(const HeadState& x, double irrigation, const ColumnModel& column, WaterBalance* balance) {
  return advance(x, irrigation, column, balance, nullptr);
}

HeadState step_state_with_jacobian(const HeadState& x, double irrigation, const ColumnModel& column,
                                   Matrix& jacobian, WaterBalance* balance) {
  return advance(x, irrigation, column, balance, &jacobian);
}

Matrix state_jacobian(const HeadState& x, double irrigation, const ColumnModel& column) {
  Matrix jac;
  advance(x, irrigation, column, nullptr, &jac);
  return jac;
}

namespace {

void check_sensors(std::span<const std::size_t> sensors, Eigen::Index n) {
  for (std::size_t s : sensors) {
    if (s >= static_cast<std::size_t>(n)) {
      std::ostringstream os;
      os << "sensor index " << s + 1 << " outside 1.." << n;
      throw Error(ErrorCode::kConfiguration, os.str());
    }
  }
}

}  // namespace

Vector output_map(const HeadState& x, std::span<const std::size_t> sensors, const SoilHydraulicParams& params) {
  check_sensors(sensors, x.size());
  Vector y(static_cast<Eigen::Index>(sensors.size()));
  for (std::size_t i = 0; i < sensors.size(); ++i) y[static_cast<Eigen::Index>(i)] = moisture_from_head(x[sensors[i]], params);
  return y;
}

Matrix output_jacobian(const HeadState& x, std::span<const std::size_t> sensors, const SoilHydraulicParams& params) {
  check_sensors(sensors, x.size());
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(sensors.size()), x.size());
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(sensors[i])) = capillary_capacity(x[sensors[i]], params);
  }
  return h;
}

}  // namespace soilrem
