#include "soilrem/estimation.hpp"

#include "soilrem/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

namespace soilrem {

namespace {

void symmetrize(Matrix& p) { p = 0.5 * (p + p.transpose()).eval(); }

double log_det_spd(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::LDLT<Matrix> ldlt(a);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    sum += std::log(std::max(std::abs(ldlt.vectorD()[i]), std::numeric_limits<double>::min()));
  }
  return sum;
}

Matrix spd_inverse(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kConfiguration, "noise covariance is not positive definite");
  return llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

}  // namespace

UnknownInputVector UnknownInputVector::zeros(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return {Vector::Zero(k), Matrix::Identity(k, k)};
}

UnknownInputVector UnknownInputVector::with_identity_gain(Vector value) {
  const auto k = value.size();
  return {std::move(value), Matrix::Identity(k, k)};
}

NoiseModel NoiseModel::isotropic(std::size_t state_dim, double process_variance, std::size_t sensor_count,
                                 double measurement_variance) {
  const auto n = static_cast<Eigen::Index>(state_dim);
  const auto m = static_cast<Eigen::Index>(sensor_count);
  return {process_variance * Matrix::Identity(n, n), measurement_variance * Matrix::Identity(m, m)};
}

void NoiseModel::validate() const {
  for (const Matrix* m : {&process, &measurement}) {
    if (m->rows() != m->cols()) throw Error(ErrorCode::kConfiguration, "noise covariance must be square");
    if (m->size() == 0) continue;
    if (!m->isApprox(m->transpose(), 1e-12)) throw Error(ErrorCode::kConfiguration, "noise covariance must be symmetric");
    if (Eigen::LLT<Matrix>(*m).info() != Eigen::Success) {
      throw Error(ErrorCode::kConfiguration, "noise covariance must be positive definite");
    }
  }
}

double step_size(const StepSizeSchedule& schedule, long time_index) {
  if (time_index < 2) throw Error(ErrorCode::kDomain, "step_size: time index must be >= 2");
  switch (schedule.kind) {
    case StepSizeSchedule::Kind::kHarmonic: return 1.0 / static_cast<double>(time_index);
    case StepSizeSchedule::Kind::kFixed: return schedule.gamma0;
  }
  return schedule.gamma0;
}

RecursiveQLedger::RecursiveQLedger(const UnknownInputVector& initial, const Matrix& initial_covariance)
    : weight_(1.0), initial_weight_(1.0) {
  first_ = initial.applied();
  second_ = first_ * first_.transpose();
  const auto n = static_cast<double>(first_.size());
  // E log p(x0): the Mahalanobis term has expectation n.
  constant_ = -0.5 * n * kLog2Pi - 0.5 * log_det_spd(initial_covariance) - 0.5 * n;
}

void RecursiveQLedger::decay_and_accumulate(double gamma, const LikelihoodTerm& t, const NoiseModel& noise) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::kDomain, "ledger: step size must lie in (0, 1]");
  const auto n = t.increment.size();
  if (first_.size() == 0) {
    first_ = Vector::Zero(n);
    second_ = Matrix::Zero(n, n);
  }
  if (first_.size() != n) throw Error(ErrorCode::kConfiguration, "ledger: dimension mismatch");

  const Matrix q_inv = spd_inverse(noise.process);
  const double m = static_cast<double>(t.residual.size());
  const Matrix& f = t.transition_jacobian;
  // Covariance cross terms of the state transition density, as stated for E(G_k).
  const Matrix cross = (t.posterior_covariance - f * t.predicted_covariance) -
                       (t.predicted_covariance * f.transpose() - f * t.prior_covariance * f.transpose());
  double term_constant = -0.5 * (static_cast<double>(n) + m) * kLog2Pi -
                         0.5 * (log_det_spd(noise.process) + log_det_spd(noise.measurement)) -
                         0.5 * log_det_spd(t.posterior_covariance) - 0.5 * (q_inv * cross).trace();
  if (m > 0) {
    const Matrix r_inv = spd_inverse(noise.measurement);
    const Matrix spread = t.output_jacobian * t.posterior_covariance * t.output_jacobian.transpose() +
                          t.residual * t.residual.transpose();
    term_constant -= 0.5 * (r_inv * spread).trace();
  }

  const double keep = 1.0 - gamma;
  weight_ = keep * weight_ + gamma;
  initial_weight_ *= keep;
  first_ = keep * first_ + gamma * t.increment;
  second_ = keep * second_ + gamma * (t.increment * t.increment.transpose());
  constant_ = keep * constant_ + gamma * term_constant;
  ++steps_;
}

double RecursiveQLedger::evaluate(const UnknownInputVector& a, const NoiseModel& noise) const {
  if (steps_ == 0) throw Error(ErrorCode::kState, "evaluate_recursive_q: ledger holds no accumulated step");
  const Vector ma = a.applied();
  if (ma.size() != first_.size()) throw Error(ErrorCode::kConfiguration, "evaluate_recursive_q: dimension mismatch");
  const Matrix q_inv = spd_inverse(noise.process);
  const double quadratic = (q_inv * second_).trace() - 2.0 * ma.dot(q_inv * first_) + weight_ * ma.dot(q_inv * ma);
  return constant_ - 0.5 * quadratic;
}

Vector RecursiveQLedger::maximizer(const Matrix& gain) const {
  if (weight_ <= 0.0) throw Error(ErrorCode::kState, "ledger: no weight accumulated");
  Eigen::FullPivLU<Matrix> lu(gain);
  if (!lu.isInvertible()) throw Error(ErrorCode::kConfiguration, "ledger: gain M is singular");
  return lu.solve(first_ / weight_);
}

double evaluate_recursive_q(const RecursiveQLedger& ledger, const UnknownInputVector& a, const NoiseModel& noise) {
  return ledger.evaluate(a, noise);
}

StateBelief ekf_predict(const StateBelief& belief, double u, const UnknownInputVector& a,
                        const StateSpaceModel& model, const NoiseModel& noise, Vector* transition_out,
                        Matrix* jacobian_out) {
  Matrix f;
  Vector fx = model.transition_with_jacobian(belief.mean, u, f);
  StateBelief out;
  out.mean = fx + a.applied();
  out.covariance = f * belief.covariance * f.transpose() + noise.process;
  symmetrize(out.covariance);
  out.time_index = belief.time_index + 1;
  if (transition_out) *transition_out = std::move(fx);
  if (jacobian_out) *jacobian_out = std::move(f);
  return out;
}

StateBelief ekf_update(const StateBelief& predicted, const Vector& y, std::span<const std::size_t> sensors,
                       const StateSpaceModel& model, const NoiseModel& noise) {
  if (static_cast<std::size_t>(y.size()) != sensors.size()) {
    throw Error(ErrorCode::kConfiguration, "ekf_update: measurement length differs from sensor count");
  }
  if (sensors.empty()) return predicted;
  const Matrix h = model.measurement_jacobian(predicted.mean, sensors);
  const Matrix hp = h * predicted.covariance;
  Matrix s = hp * h.transpose() + noise.measurement;
  symmetrize(s);
  Eigen::LDLT<Matrix> ldlt(s);
  double rcond = 0.0;
  if (ldlt.info() == Eigen::Success) {
    // rcond() skips pivots LDLT has already flushed to zero; the pivot spread catches those.
    const Vector d = ldlt.vectorD().cwiseAbs();
    rcond = std::min(ldlt.rcond(), d.minCoeff() / d.maxCoeff());
  }
  if (!(rcond > 1e-14) || !ldlt.isPositive()) {
    std::ostringstream os;
    os << "ekf_update: innovation covariance is numerically singular (reciprocal condition estimate " << rcond << ")";
    throw Error(ErrorCode::kIllConditioned, os.str());
  }
  const Matrix gain = ldlt.solve(hp).transpose();
  StateBelief out;
  out.mean = predicted.mean + gain * (y - model.measure(predicted.mean, sensors));
  const auto n = predicted.mean.size();
  out.covariance = (Matrix::Identity(n, n) - gain * h) * predicted.covariance;
  symmetrize(out.covariance);
  out.time_index = predicted.time_index;
  return out;
}

UnknownInputVector rem_mstep_from_prediction(const UnknownInputVector& previous, const Vector& x_hat_now,
                                             const Vector& transition_prev, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::kDomain, "rem_mstep: gamma must lie in (0, 1]");
  Eigen::FullPivLU<Matrix> lu(previous.gain);
  if (!lu.isInvertible()) throw Error(ErrorCode::kConfiguration, "rem_mstep: gain M is singular");
  const Vector instantaneous = lu.solve(x_hat_now - transition_prev);
  return {(1.0 - gamma) * previous.value + gamma * instantaneous, previous.gain};
}

UnknownInputVector rem_mstep(const UnknownInputVector& previous, const Vector& x_hat_now, const Vector& x_hat_prev,
                             double u, double gamma, const StateSpaceModel& model) {
  return rem_mstep_from_prediction(previous, x_hat_now, model.transition(x_hat_prev, u), gamma);
}

RemState make_rem_state(StateBelief initial, UnknownInputVector input) {
  RecursiveQLedger ledger(input, initial.covariance);
  return {std::move(initial), std::move(input), std::move(ledger)};
}

RemState rem_step(RemState state, const Vector& y, double u, std::span<const std::size_t> sensors,
                  const StateSpaceModel& model, const NoiseModel& noise, const RemOptions& options) {
  Vector transition_prev;
  Matrix jacobian;
  const StateBelief predicted =
      ekf_predict(state.belief, u, state.input, model, noise, &transition_prev, &jacobian);
  StateBelief posterior = ekf_update(predicted, y, sensors, model, noise);

  if (options.mstep_enabled) {
    const double gamma = step_size(options.schedule, posterior.time_index);
    LikelihoodTerm term{posterior.mean - transition_prev,
                        posterior.covariance,
                        predicted.covariance,
                        state.belief.covariance,
                        jacobian,
                        y - model.measure(posterior.mean, sensors),
                        model.measurement_jacobian(posterior.mean, sensors)};
    state.ledger.decay_and_accumulate(gamma, term, noise);
    state.input = rem_mstep_from_prediction(state.input, posterior.mean, transition_prev, gamma);
  }
  state.belief = std::move(posterior);
  return state;
}

StateBelief ekf_step(const StateBelief& belief, const Vector& y, double u, const UnknownInputVector& a,
                     std::span<const std::size_t> sensors, const StateSpaceModel& model, const NoiseModel& noise) {
  return ekf_update(ekf_predict(belief, u, a, model, noise), y, sensors, model, noise);
}

}  // namespace soilrem
