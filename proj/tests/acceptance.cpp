// Acceptance suite: one PASS/FAIL line per criterion. argv[1] is the CLI
// executable used by the determinism check.

#include "oracles.hpp"
#include "soilrem/errors.hpp"
#include "soilrem/estimation.hpp"
#include "soilrem/scenario.hpp"
#include "soilrem/sensor_placement.hpp"
#include "soilrem/soil_physics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace soilrem;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

constexpr int kSeeds = 5;
constexpr std::uint64_t kFirstSeed = 1;

// ---- 1 ------------------------------------------------------------------

Outcome closures() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ks(-7.0, -4.0), ts(0.35, 0.50), tr(0.0, 0.10), al(0.5, 15.0), nn(1.1, 3.0),
      logh(-2.0, 2.0);
  int failures = 0;
  double worst_c = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const SoilHydraulicParams p{std::pow(10.0, ks(rng)), ts(rng), tr(rng), al(rng), nn(rng)};
    double h1 = -std::pow(10.0, logh(rng)), h2 = -std::pow(10.0, logh(rng));
    if (h1 > h2) std::swap(h1, h2);
    const double t1 = moisture_from_head(h1, p), t2 = moisture_from_head(h2, p);
    const bool monotone = h1 == h2 || (t1 < t2 && hydraulic_conductivity(h1, p) < hydraulic_conductivity(h2, p));
    const bool range = t1 > p.theta_r && t1 < p.theta_s && hydraulic_conductivity(h1, p) > 0.0 &&
                       hydraulic_conductivity(h1, p) <= p.saturated_conductivity;
    const double e = 1e-3 * std::abs(h1);
    auto th = [&](double h) { return moisture_from_head(h, p); };
    const double fd = (th(h1 - 2 * e) - 8 * th(h1 - e) + 8 * th(h1 + e) - th(h1 + 2 * e)) / (12 * e);
    const double dc = rel(capillary_capacity(h1, p), fd);
    worst_c = std::max(worst_c, dc);
    if (!monotone || !range || !(dc <= 1e-5)) ++failures;
  }
  return {failures == 0, "1000 samples, " + std::to_string(failures) + " violations, worst |c - dtheta/dh| rel " +
                             num(worst_c) + " (tol 1e-5)"};
}

// ---- 2 ------------------------------------------------------------------

Outcome jacobians() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> head(-3.0, -0.2);  // drier i.i.d. contrasts trip the explicit step's blow-up guard
  ColumnModel column;
  column.sink = {true, 1.0, mm_per_day_to_m_per_s(3.0), 0.15};
  const std::vector<std::size_t> sensors{0, 3, 7, 11, 15};
  double worst_f = 0.0, worst_h = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    HeadState x(16);
    for (Eigen::Index i = 0; i < 16; ++i) x[i] = head(rng);
    const double u = trial % 2 ? 3e-7 : 0.0;
    const Matrix f = state_jacobian(x, u, column);
    const Matrix h = output_jacobian(x, sensors, column.params);
    for (Eigen::Index j = 0; j < 16; ++j) {
      HeadState up = x, down = x;
      up[j] += 1e-6;
      down[j] -= 1e-6;
      const Vector fd = (step_state(up, u, column) - step_state(down, u, column)) / 2e-6;
      worst_f = std::max(worst_f, (f.col(j) - fd).norm() / fd.norm());
      const Vector hd = (output_map(up, sensors, column.params) - output_map(down, sensors, column.params)) / 2e-6;
      if (hd.norm() > 0.0) worst_h = std::max(worst_h, (h.col(j) - hd).norm() / hd.norm());
    }
  }
  return {worst_f <= 1e-3 && worst_h <= 1e-3,
          "100 states, worst column rel error: state " + num(worst_f) + ", output " + num(worst_h) + " (tol 1e-3)"};
}

// ---- 3 ------------------------------------------------------------------

Outcome mass_balance() {
  const ColumnModel column;
  HeadState x = HeadState::LinSpaced(16, -0.4, -1.6);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    WaterBalance wb;
    const double before = water_storage(x, column);
    x = step_state(x, 0.0, column, &wb);
    const double after = water_storage(x, column);
    worst = std::max(worst, std::abs(after - before + wb.drainage) / after);
  }
  return {worst <= 1e-6, "1000 steps, worst relative residual " + num(worst) + " (tol 1e-6)"};
}

// ---- 4 ------------------------------------------------------------------

Outcome mstep_oracle() {
  std::mt19937_64 rng(404);
  ColumnModel column;
  column.node_count = 2;
  column.constant_closure = ConstantClosure{hydraulic_conductivity(-1.0, column.params),
                                            capillary_capacity(-1.0, column.params)};
  const Matrix f = state_jacobian(HeadState::Constant(2, -1.0), 0.0, column);
  const LinearModel model(f, Matrix::Identity(2, 2));
  const NoiseModel noise{oracle::random_spd(rng, 2, 0.05), Matrix::Identity(1, 1) * 0.01};
  constexpr double kGamma = 0.5;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    UnknownInputVector a = UnknownInputVector::with_identity_gain(oracle::random_vector(rng, 2, 1.0));
    RecursiveQLedger ledger(a, oracle::random_spd(rng, 2, 0.1));
    const int steps = 1 + trial % 6;
    for (int k = 0; k < steps; ++k) {
      const Vector x_prev = oracle::random_vector(rng, 2, 1.0);
      const Vector x_now = model.transition(x_prev, 0.0) + oracle::random_vector(rng, 2, 1.0);
      const LikelihoodTerm term{x_now - model.transition(x_prev, 0.0),
                                oracle::random_spd(rng, 2, 0.01),
                                oracle::random_spd(rng, 2, 0.02),
                                oracle::random_spd(rng, 2, 0.02),
                                f,
                                oracle::random_vector(rng, 1, 0.1),
                                Matrix::Ones(1, 2)};
      ledger.decay_and_accumulate(kGamma, term, noise);
      a = rem_mstep(a, x_now, x_prev, 0.0, kGamma, model);
    }
    const Eigen::Vector2d grid = oracle::grid_argmax_2d(
        [&](const Eigen::Vector2d& p) {
          return evaluate_recursive_q(ledger, UnknownInputVector::with_identity_gain(p), noise);
        },
        Eigen::Vector2d::Zero(), 8.0, 1e-7);
    worst = std::max(worst, (a.value - grid).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, "50 ledgers, worst |a_mstep - grid argmax| " + num(worst) + " (tol 1e-6)"};
}

// ---- 5-7 ----------------------------------------------------------------

struct SeedRuns {
  std::vector<RunResult> runs;
  ScenarioConfig config;
};

SeedRuns run_seeds(int preset) {
  SeedRuns out;
  out.config = build_scenario(preset);
  for (int s = 0; s < kSeeds; ++s) {
    ScenarioConfig c = out.config;
    c.seed = kFirstSeed + static_cast<std::uint64_t>(s);
    out.runs.push_back(run_comparison(c));
  }
  return out;
}

// Largest relative deviation of the seed-averaged a estimate from truth after `from_day`.
double worst_input_deviation(const SeedRuns& r, std::size_t node, double from_day) {
  const auto i = static_cast<Eigen::Index>(node);
  const RunResult& first = r.runs.front();
  double worst = 0.0;
  for (std::size_t k = 0; k < first.steps(); ++k) {
    if (first.times[k] <= from_day * kSecondsPerDay) continue;
    double mean = 0.0;
    for (const RunResult& run : r.runs) mean += run.rem_inputs[k][i];
    mean /= static_cast<double>(r.runs.size());
    const double truth = first.true_inputs[k][i];
    worst = std::max(worst, std::abs(mean - truth) / std::abs(truth));
  }
  return worst;
}

double mean_final_rmse(const SeedRuns& r, std::size_t node, bool rem) {
  double sum = 0.0;
  for (const RunResult& run : r.runs) sum += (rem ? run.rmse_rem : run.rmse_ekf).back()[static_cast<Eigen::Index>(node)];
  return sum / static_cast<double>(r.runs.size());
}

Outcome input_reproduction(const SeedRuns& r, const std::vector<std::size_t>& nodes, double band, double from_day) {
  bool pass = true;
  std::ostringstream os;
  for (std::size_t node : nodes) {
    const double dev = worst_input_deviation(r, node, from_day);
    const double ekf = mean_final_rmse(r, node, false), rem = mean_final_rmse(r, node, true);
    pass = pass && dev <= band && rem < ekf;
    os << "node " << node + 1 << ": a dev " << num(100 * dev) << "%, rmse rem/ekf " << num(rem) << "/" << num(ekf)
       << "; ";
  }
  os << "band +-" << num(100 * band) << "% after day " << from_day;
  return {pass, os.str()};
}

Outcome scenario_one() {
  const SeedRuns r = run_seeds(1);
  return input_reproduction(r, r.config.reported_nodes, 0.15, 6.0);
}

Outcome scenario_two() {
  const SeedRuns r = run_seeds(2);
  std::vector<std::size_t> anchors;
  for (const InputAnchor& a : r.config.anchors) anchors.push_back(a.node);
  return input_reproduction(r, anchors, 0.20, 6.0);
}

Outcome scenario_three() {
  const SeedRuns r = run_seeds(3);
  const double sd = std::sqrt(r.config.measurement_variance);
  const auto& params = r.config.column.params;
  bool pass = true;
  std::ostringstream os;
  for (std::size_t node : r.config.reported_nodes) {
    const auto i = static_cast<Eigen::Index>(node);
    const double ekf = mean_final_rmse(r, node, false), rem = mean_final_rmse(r, node, true);
    double worst = 0.0;  // |mean head error| / 3 sigma_h
    const RunResult& first = r.runs.front();
    for (std::size_t k = 0; k < first.steps(); ++k) {
      if (first.times[k] <= 5.0 * kSecondsPerDay) continue;
      double err = 0.0, sigma = 0.0;
      for (const RunResult& run : r.runs) {
        err += run.rem[k][i] - run.truth[k][i];
        sigma += sd / capillary_capacity(run.truth[k][i], params);
      }
      worst = std::max(worst, std::abs(err) / (3.0 * sigma));
    }
    pass = pass && rem < 0.5 * ekf && worst <= 1.0;
    os << "node " << node + 1 << ": rmse rem/ekf " << num(rem / ekf) << ", head err/3sigma " << num(worst) << "; ";
  }
  os << "limits 0.5 and 1 after day 5";
  return {pass, os.str()};
}

// ---- 8 ------------------------------------------------------------------

Outcome placement() {
  ScenarioConfig c = build_scenario(1);
  c.placement.augmented = false;
  const SensorRanking states = place_sensors(c);
  c.placement.augmented = true;
  std::ostringstream os;
  bool pass = states.achieved_rank == states.target_rank && states.selected.size() <= 2;
  os << "states-only: " << states.selected.size() << " sensor(s), rank " << states.achieved_rank << "/"
     << states.target_rank << "; ";
  try {
    const SensorRanking aug = place_sensors(c);
    os << "augmented: " << aug.selected.size() << " sensor(s), rank " << aug.achieved_rank << "/" << aug.target_rank
       << " (window " << aug.window << "); ";
    pass = pass && aug.achieved_rank == aug.target_rank;
  } catch (const UnobservableError& e) {
    os << "augmented: rank " << e.achieved_rank() << "/" << e.target_rank() << " with all nodes; ";
    pass = false;
  }

  ColumnModel toy;
  toy.node_count = 3;
  const RichardsModel model(toy);
  const std::size_t window = 24;
  const std::vector<double> inputs(window, 3e-7);
  const Trajectory traj = simulate_nominal(model, Vector::Constant(3, -1.0), inputs);
  const Matrix gain = Matrix::Identity(3, 3);
  const SensorRanking greedy = select_sensors(model, traj, gain, {window, 1e-8, true});
  const std::vector<std::size_t> all{0, 1, 2};
  const SensitivityMatrix s = sensitivity_matrix(traj, window, all, model, gain);
  const std::size_t minimum = oracle::exhaustive_minimum(s, 6, 1e-8);
  pass = pass && minimum > 0 && greedy.selected.size() <= minimum;
  os << "3-node toy: greedy " << greedy.selected.size() << " vs exhaustive minimum " << minimum;
  return {pass, os.str()};
}

// ---- 9 ------------------------------------------------------------------

Outcome degeneracy() {
  ScenarioConfig c = build_scenario(1);
  c.true_inputs.setZero();
  c.input_guess.setZero();
  c.mstep_enabled = false;
  c.horizon_days = 1000.0 * c.column.dt / kSecondsPerDay;
  const RunResult r = run_comparison(c);
  std::size_t differing = 0;
  for (std::size_t k = 0; k < r.steps(); ++k) {
    if (r.ekf[k] != r.rem[k]) ++differing;
  }
  return {r.steps() == 1000 && differing == 0,
          std::to_string(r.steps()) + " steps, " + std::to_string(differing) + " steps differ"};
}

// ---- 10 -----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const std::string& cli) {
  const fs::path base = fs::current_path() / "acceptance_determinism";
  fs::remove_all(base);
  for (const char* sub : {"a", "b"}) {
    const std::string cmd = "\"" + cli + "\" scenario 1 --seed 7 --out \"" + (base / sub).string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed: " + cmd};
  }
  bool same = true;
  std::ostringstream os;
  for (const char* f : {"trajectory.csv", "rmse.csv"}) {
    const std::string a = slurp(base / "a" / f), b = slurp(base / "b" / f);
    same = same && !a.empty() && a == b;
    os << f << " " << a.size() << " bytes " << (a == b ? "identical" : "DIFFER") << "; ";
  }
  return {same, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path to soilrem-cli>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"closure correctness", closures},
      {"Jacobian correctness", jacobians},
      {"mass balance", mass_balance},
      {"M-step oracle", mstep_oracle},
      {"scenario 1 reproduction", scenario_one},
      {"scenario 2 reproduction", scenario_two},
      {"scenario 3 reproduction", scenario_three},
      {"sensor placement", placement},
      {"degeneracy", degeneracy},
      {"determinism", [&] { return determinism(cli); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2zu %-26s %s  %s [%.1fs]\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
