#pragma once

// Local observability analysis of the state/unknown-input augmented model
// and greedy sensor selection by successive orthogonal projection.

#include "soilrem/state_space.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace soilrem {

/// Jacobians of x_a+ = [f(x,u) + M a; a], y = C h(x).
struct AugmentedJacobians {
  Matrix transition;   // [dF/dx  M; 0  I]   (or dF/dx alone when states-only)
  Matrix measurement;  // [C dH/dx  0]
};

AugmentedJacobians augmented_jacobians(const Vector& x, const Matrix& input_gain, double u,
                                       const StateSpaceModel& model, std::span<const std::size_t> sensors,
                                       bool include_inputs = true);

/// Stacked output sensitivities over a data window. Row block b (b = 0..window)
/// holds d y(anchor + b) / d x_a(anchor) for every candidate in order.
struct SensitivityMatrix {
  Matrix values;
  std::size_t window = 0;
  std::size_t anchor = 0;
  std::vector<std::size_t> candidates;

  /// Rows contributed by one candidate across all blocks, vectorized.
  Vector signature(std::size_t candidate_position) const;
  /// Sub-matrix restricted to the given candidate positions.
  Matrix rows_for(std::span<const std::size_t> candidate_positions) const;
};

/// A nominal trajectory: states[0..K] and inputs[0..K-1].
struct Trajectory {
  std::vector<Vector> states;
  std::vector<double> inputs;
};

Trajectory simulate_nominal(const StateSpaceModel& model, const Vector& x0, std::span<const double> inputs);

/// `window` must be >= the augmented dimension and the trajectory must hold
/// window+1 states from `anchor`.
SensitivityMatrix sensitivity_matrix(const Trajectory& trajectory, std::size_t window,
                                     std::span<const std::size_t> candidates, const StateSpaceModel& model,
                                     const Matrix& input_gain, bool include_inputs = true, std::size_t anchor = 0);

struct ProjectionRanking {
  std::vector<std::size_t> order;       // positions into the input list
  std::vector<double> residual_norms;   // norm of each pick at the time it was picked
};

/// Picks the largest residual, deflates all remaining vectors along it, repeats.
ProjectionRanking rank_by_orthogonal_projection(std::span<const Vector> vectors);

/// Number of singular values >= relative_tolerance * sigma_max.
std::size_t numerical_rank(const Matrix& m, double relative_tolerance);

struct SensorRanking {
  std::vector<std::size_t> ranked;     // candidate node indices in selection order
  std::vector<double> scores;          // residual norms, non-increasing
  std::vector<std::size_t> selected;   // smallest full-rank prefix of `ranked`
  std::size_t achieved_rank = 0;
  std::size_t target_rank = 0;
  double rank_tolerance = 0.0;
  std::size_t window = 0;
  bool augmented = true;
};

struct PlacementOptions {
  std::size_t window = 0;           // 0 selects the augmented dimension
  double rank_tolerance = 1e-8;
  bool augmented = true;
};

/// Greedy placement over all nodes. Throws UnobservableError when even the
/// full candidate set stays rank deficient.
SensorRanking select_sensors(const StateSpaceModel& model, const Trajectory& nominal, const Matrix& input_gain,
                             const PlacementOptions& options);

}  // namespace soilrem
