#include "soilrem/state_space.hpp"

#include "soilrem/errors.hpp"

#include <utility>

namespace soilrem {

RichardsModel::RichardsModel(ColumnModel column) : column_(std::move(column)) { column_.validate(); }

Vector RichardsModel::transition(const Vector& x, double u) const { return step_state(x, u, column_); }

Matrix RichardsModel::transition_jacobian(const Vector& x, double u) const { return state_jacobian(x, u, column_); }

Vector RichardsModel::transition_with_jacobian(const Vector& x, double u, Matrix& jacobian) const {
  return step_state_with_jacobian(x, u, column_, jacobian);
}

Vector RichardsModel::measure(const Vector& x, std::span<const std::size_t> sensors) const {
  return output_map(x, sensors, column_.params);
}

Matrix RichardsModel::measurement_jacobian(const Vector& x, std::span<const std::size_t> sensors) const {
  return output_jacobian(x, sensors, column_.params);
}

LinearModel::LinearModel(Matrix transition, Matrix output, Vector input_gain)
    : a_(std::move(transition)), h_(std::move(output)), b_(std::move(input_gain)) {
  if (a_.rows() != a_.cols()) throw Error(ErrorCode::kConfiguration, "LinearModel: transition must be square");
  if (h_.cols() != a_.cols()) throw Error(ErrorCode::kConfiguration, "LinearModel: output width mismatch");
  if (b_.size() == 0) b_ = Vector::Zero(a_.rows());
  if (b_.size() != a_.rows()) throw Error(ErrorCode::kConfiguration, "LinearModel: input gain length mismatch");
}

Vector LinearModel::transition(const Vector& x, double u) const { return a_ * x + b_ * u; }

Matrix LinearModel::transition_jacobian(const Vector&, double) const { return a_; }

Vector LinearModel::measure(const Vector& x, std::span<const std::size_t> sensors) const {
  return measurement_jacobian(x, sensors) * x;
}

Matrix LinearModel::measurement_jacobian(const Vector&, std::span<const std::size_t> sensors) const {
  Matrix rows(static_cast<Eigen::Index>(sensors.size()), h_.cols());
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    if (sensors[i] >= static_cast<std::size_t>(h_.rows())) {
      throw Error(ErrorCode::kConfiguration, "LinearModel: sensor index out of range");
    }
    rows.row(static_cast<Eigen::Index>(i)) = h_.row(static_cast<Eigen::Index>(sensors[i]));
  }
  return rows;
}

}  // namespace soilrem
