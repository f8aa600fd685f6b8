#pragma once

#include "soilrem/soil_physics.hpp"

#include <cstddef>
#include <span>

namespace soilrem {

/// Discrete-time nonlinear model x+ = f(x, u), y = h(x) restricted to a sensor
/// subset. The filters and the sensitivity analysis only see this interface.
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  virtual std::size_t state_dim() const = 0;
  virtual Vector transition(const Vector& x, double u) const = 0;
  virtual Matrix transition_jacobian(const Vector& x, double u) const = 0;
  /// f(x, u) and its Jacobian in one pass.
  virtual Vector transition_with_jacobian(const Vector& x, double u, Matrix& jacobian) const {
    jacobian = transition_jacobian(x, u);
    return transition(x, u);
  }
  virtual Vector measure(const Vector& x, std::span<const std::size_t> sensors) const = 0;
  virtual Matrix measurement_jacobian(const Vector& x, std::span<const std::size_t> sensors) const = 0;
};

/// Richards column: f = step_state, h = moisture at the sensed nodes.
class RichardsModel final : public StateSpaceModel {
 public:
  explicit RichardsModel(ColumnModel column);

  const ColumnModel& column() const { return column_; }

  std::size_t state_dim() const override { return column_.node_count; }
  Vector transition(const Vector& x, double u) const override;
  Matrix transition_jacobian(const Vector& x, double u) const override;
  Vector transition_with_jacobian(const Vector& x, double u, Matrix& jacobian) const override;
  Vector measure(const Vector& x, std::span<const std::size_t> sensors) const override;
  Matrix measurement_jacobian(const Vector& x, std::span<const std::size_t> sensors) const override;

 private:
  ColumnModel column_;
};

/// x+ = A x + b u, y = rows of H picked by the sensor indices.
class LinearModel final : public StateSpaceModel {
 public:
  LinearModel(Matrix transition, Matrix output, Vector input_gain = {});

  std::size_t state_dim() const override { return static_cast<std::size_t>(a_.rows()); }
  Vector transition(const Vector& x, double u) const override;
  Matrix transition_jacobian(const Vector& x, double u) const override;
  Vector measure(const Vector& x, std::span<const std::size_t> sensors) const override;
  Matrix measurement_jacobian(const Vector& x, std::span<const std::size_t> sensors) const override;

 private:
  Matrix a_;
  Matrix h_;
  Vector b_;
};

}  // namespace soilrem
