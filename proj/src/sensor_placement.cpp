#include "soilrem/sensor_placement.hpp"

#include "soilrem/errors.hpp"

#include <numeric>
#include <sstream>

namespace soilrem {

AugmentedJacobians augmented_jacobians(const Vector& x, const Matrix& input_gain, double u,
                                       const StateSpaceModel& model, std::span<const std::size_t> sensors,
                                       bool include_inputs) {
  const Matrix f = model.transition_jacobian(x, u);
  const Matrix h = model.measurement_jacobian(x, sensors);
  if (!include_inputs) return {f, h};

  const auto n = f.rows();
  const auto p = input_gain.cols();
  if (input_gain.rows() != n) throw Error(ErrorCode::kConfiguration, "augmented_jacobians: gain has wrong row count");
  AugmentedJacobians out;
  out.transition = Matrix::Zero(n + p, n + p);
  out.transition.topLeftCorner(n, n) = f;
  out.transition.topRightCorner(n, p) = input_gain;
  out.transition.bottomRightCorner(p, p).setIdentity();
  out.measurement = Matrix::Zero(h.rows(), n + p);
  out.measurement.leftCols(n) = h;
  return out;
}

Vector SensitivityMatrix::signature(std::size_t position) const {
  const auto m = static_cast<Eigen::Index>(candidates.size());
  const auto cols = values.cols();
  Vector sig(static_cast<Eigen::Index>(window + 1) * cols);
  for (Eigen::Index b = 0; b <= static_cast<Eigen::Index>(window); ++b) {
    sig.segment(b * cols, cols) = values.row(b * m + static_cast<Eigen::Index>(position)).transpose();
  }
  return sig;
}

Matrix SensitivityMatrix::rows_for(std::span<const std::size_t> positions) const {
  const auto m = static_cast<Eigen::Index>(candidates.size());
  const auto k = static_cast<Eigen::Index>(positions.size());
  Matrix out(static_cast<Eigen::Index>(window + 1) * k, values.cols());
  for (Eigen::Index b = 0; b <= static_cast<Eigen::Index>(window); ++b) {
    for (Eigen::Index j = 0; j < k; ++j) {
      out.row(b * k + j) = values.row(b * m + static_cast<Eigen::Index>(positions[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

Trajectory simulate_nominal(const StateSpaceModel& model, const Vector& x0, std::span<const double> inputs) {
  Trajectory t;
  t.states.reserve(inputs.size() + 1);
  t.states.push_back(x0);
  for (double u : inputs) {
    t.states.push_back(model.transition(t.states.back(), u));
    t.inputs.push_back(u);
  }
  return t;
}

SensitivityMatrix sensitivity_matrix(const Trajectory& trajectory, std::size_t window,
                                     std::span<const std::size_t> candidates, const StateSpaceModel& model,
                                     const Matrix& input_gain, bool include_inputs, std::size_t anchor) {
  const auto n = static_cast<Eigen::Index>(model.state_dim());
  const Eigen::Index dim = n + (include_inputs ? input_gain.cols() : 0);
  if (window < static_cast<std::size_t>(dim)) {
    std::ostringstream os;
    os << "sensitivity_matrix: window " << window << " is smaller than the augmented dimension " << dim;
    throw Error(ErrorCode::kConfiguration, os.str());
  }
  if (trajectory.states.size() < anchor + window + 1 || trajectory.inputs.size() < anchor + window) {
    throw Error(ErrorCode::kConfiguration, "sensitivity_matrix: trajectory does not cover the data window");
  }

  const auto m = static_cast<Eigen::Index>(candidates.size());
  SensitivityMatrix out;
  out.window = window;
  out.anchor = anchor;
  out.candidates.assign(candidates.begin(), candidates.end());
  out.values = Matrix::Zero(static_cast<Eigen::Index>(window + 1) * m, dim);

  Matrix chain = Matrix::Identity(dim, dim);  // d x_a(anchor + b) / d x_a(anchor)
  for (std::size_t b = 0; b <= window; ++b) {
    const Vector& x = trajectory.states[anchor + b];
    Matrix h = model.measurement_jacobian(x, candidates);
    if (m > 0) out.values.middleRows(static_cast<Eigen::Index>(b) * m, m) = h * chain.topRows(n);
    if (b == window) break;
    const Matrix f = model.transition_jacobian(x, trajectory.inputs[anchor + b]);
    if (include_inputs) {
      // [F M; 0 I] * [A; B] = [F A + M B; B]
      Matrix top = f * chain.topRows(n) + input_gain * chain.bottomRows(dim - n);
      chain.topRows(n) = top;
    } else {
      chain = (f * chain).eval();
    }
  }
  return out;
}

ProjectionRanking rank_by_orthogonal_projection(std::span<const Vector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::kDomain, "rank_by_orthogonal_projection: empty input");
  const auto len = vectors.front().size();
  for (const Vector& v : vectors) {
    if (v.size() != len) throw Error(ErrorCode::kDomain, "rank_by_orthogonal_projection: vectors differ in length");
  }

  std::vector<Vector> residual(vectors.begin(), vectors.end());
  std::vector<std::size_t> remaining(vectors.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  ProjectionRanking out;

  while (!remaining.empty()) {
    std::size_t best_slot = 0;
    double best = -1.0;
    for (std::size_t slot = 0; slot < remaining.size(); ++slot) {
      const double norm = residual[remaining[slot]].norm();
      if (norm > best) {
        best = norm;
        best_slot = slot;
      }
    }
    if (out.order.empty() && best == 0.0) {
      throw Error(ErrorCode::kDomain, "rank_by_orthogonal_projection: all input vectors are zero");
    }
    const std::size_t pick = remaining[best_slot];
    out.order.push_back(pick);
    out.residual_norms.push_back(best);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_slot));
    if (best == 0.0) continue;

    const Vector direction = residual[pick] / best;
    for (std::size_t idx : remaining) residual[idx] -= direction.dot(residual[idx]) * direction;
  }
  return out;
}

std::size_t numerical_rank(const Matrix& m, double relative_tolerance) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] >= relative_tolerance * sv[0]) ++rank;
  }
  return rank;
}

SensorRanking select_sensors(const StateSpaceModel& model, const Trajectory& nominal, const Matrix& input_gain,
                             const PlacementOptions& options) {
  const std::size_t n = model.state_dim();
  const std::size_t dim = n + (options.augmented ? static_cast<std::size_t>(input_gain.cols()) : 0);
  const std::size_t window = options.window == 0 ? dim : options.window;

  std::vector<std::size_t> candidates(n);
  std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  const SensitivityMatrix sens =
      sensitivity_matrix(nominal, window, candidates, model, input_gain, options.augmented, 0);

  std::vector<Vector> signatures;
  signatures.reserve(n);
  for (std::size_t i = 0; i < n; ++i) signatures.push_back(sens.signature(i));
  const ProjectionRanking ranking = rank_by_orthogonal_projection(signatures);

  SensorRanking out;
  out.target_rank = dim;
  out.rank_tolerance = options.rank_tolerance;
  out.window = window;
  out.augmented = options.augmented;
  out.scores = ranking.residual_norms;
  for (std::size_t pos : ranking.order) out.ranked.push_back(candidates[pos]);

  std::vector<std::size_t> prefix;
  for (std::size_t pos : ranking.order) {
    prefix.push_back(pos);
    out.achieved_rank = numerical_rank(sens.rows_for(prefix), options.rank_tolerance);
    if (out.achieved_rank == dim) {
      for (std::size_t p : prefix) out.selected.push_back(candidates[p]);
      return out;
    }
  }
  std::ostringstream os;
  os << "select_sensors: all " << n << " candidates reach rank " << out.achieved_rank << " of " << dim
     << " at relative tolerance " << options.rank_tolerance;
  throw UnobservableError(out.achieved_rank, dim, os.str());
}

}  // namespace soilrem
