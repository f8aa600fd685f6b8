#pragma once

// Extended Kalman filter recursions and the EKF-based recursive EM estimator
// for additive unknown inputs x+ = f(x, u) + M a + w.

#include "soilrem/state_space.hpp"

#include <cstddef>
#include <span>

namespace soilrem {

struct StateBelief {
  Vector mean;
  Matrix covariance;
  long time_index = 1;
};

/// Additive model-mismatch vector and its gain M (identity unless overridden).
struct UnknownInputVector {
  Vector value;
  Matrix gain;

  static UnknownInputVector zeros(std::size_t n);
  static UnknownInputVector with_identity_gain(Vector value);
  Vector applied() const { return gain * value; }
};

struct NoiseModel {
  Matrix process;      // Q
  Matrix measurement;  // R

  static NoiseModel isotropic(std::size_t state_dim, double process_variance, std::size_t sensor_count,
                              double measurement_variance);
  void validate() const;
};

struct StepSizeSchedule {
  enum class Kind { kHarmonic, kFixed };
  Kind kind = Kind::kFixed;
  double gamma0 = 5e-4;

  static StepSizeSchedule harmonic() { return {Kind::kHarmonic, 1.0}; }
  static StepSizeSchedule fixed(double gamma) { return {Kind::kFixed, gamma}; }
};

/// gamma_N; harmonic gives 1/N. Requires N >= 2.
double step_size(const StepSizeSchedule& schedule, long time_index);

/// Quantities from one filter cycle that enter the expected complete-data
/// log-likelihood of that step.
struct LikelihoodTerm {
  Vector increment;              // x_hat_N - f(x_hat_{N-1}, u_{N-1})
  Matrix posterior_covariance;   // P_hat_N
  Matrix predicted_covariance;   // P_check_N
  Matrix prior_covariance;       // P_hat_{N-1}
  Matrix transition_jacobian;    // F_{N-1}
  Vector residual;               // y_N - C h(x_hat_N)
  Matrix output_jacobian;        // C H_N
};

/// Running form of the step-size weighted Q-function. Only first and second
/// moments of the increments are kept for the a-dependent part; everything
/// independent of a is folded into one scalar.
class RecursiveQLedger {
 public:
  RecursiveQLedger() = default;

  /// Seeds the statistics so the ledger's maximizer is `initial` before any
  /// data arrive. `initial_covariance` enters the constant of the first term.
  RecursiveQLedger(const UnknownInputVector& initial, const Matrix& initial_covariance);

  void decay_and_accumulate(double gamma, const LikelihoodTerm& term, const NoiseModel& noise);

  /// Q~_N(a). Throws Error(kState) before the first accumulation.
  double evaluate(const UnknownInputVector& a, const NoiseModel& noise) const;

  /// Closed-form stationary point of evaluate().
  Vector maximizer(const Matrix& gain) const;

  std::size_t steps() const { return steps_; }
  double total_weight() const { return weight_; }
  double initial_weight() const { return initial_weight_; }
  const Vector& first_moment() const { return first_; }

 private:
  std::size_t steps_ = 0;
  double weight_ = 0.0;
  double initial_weight_ = 0.0;
  Vector first_;
  Matrix second_;
  double constant_ = 0.0;
};

double evaluate_recursive_q(const RecursiveQLedger& ledger, const UnknownInputVector& a, const NoiseModel& noise);

/// x_check = f(x_hat, u) + M a, P_check = F P_hat F' + Q.
/// The optional outputs return f(x_hat, u) and F for reuse.
StateBelief ekf_predict(const StateBelief& belief, double u, const UnknownInputVector& a,
                        const StateSpaceModel& model, const NoiseModel& noise, Vector* transition_out = nullptr,
                        Matrix* jacobian_out = nullptr);

/// Gain from a Cholesky solve of H P H' + R. Throws Error(kIllConditioned)
/// when the innovation covariance is numerically singular.
StateBelief ekf_update(const StateBelief& predicted, const Vector& y, std::span<const std::size_t> sensors,
                       const StateSpaceModel& model, const NoiseModel& noise);

/// a_N = (1 - gamma) a_{N-1} + gamma M^-1 (x_hat_N - f(x_hat_{N-1}, u)).
UnknownInputVector rem_mstep(const UnknownInputVector& previous, const Vector& x_hat_now, const Vector& x_hat_prev,
                             double u, double gamma, const StateSpaceModel& model);

/// Same update with f(x_hat_{N-1}, u) already evaluated.
UnknownInputVector rem_mstep_from_prediction(const UnknownInputVector& previous, const Vector& x_hat_now,
                                             const Vector& transition_prev, double gamma);

struct RemState {
  StateBelief belief;
  UnknownInputVector input;
  RecursiveQLedger ledger;
};

RemState make_rem_state(StateBelief initial, UnknownInputVector input);

struct RemOptions {
  StepSizeSchedule schedule;
  bool mstep_enabled = true;
};

/// One cycle of the recursive EM estimator: EKF prediction with a_{N-1},
/// update with y_N, decay-and-accumulate of the ledger, then the M-step.
RemState rem_step(RemState state, const Vector& y, double u, std::span<const std::size_t> sensors,
                  const StateSpaceModel& model, const NoiseModel& noise, const RemOptions& options);

/// Plain EKF cycle with the unknown input held fixed.
StateBelief ekf_step(const StateBelief& belief, const Vector& y, double u, const UnknownInputVector& a,
                     std::span<const std::size_t> sensors, const StateSpaceModel& model, const NoiseModel& noise);

}  // namespace soilrem
