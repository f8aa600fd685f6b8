#include "soilrem/errors.hpp"
#include "soilrem/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace soilrem {

namespace {

using json = nlohmann::ordered_json;

// Cursor into the document that knows its own JSON pointer, so every error
// names the offending location.
class Node {
 public:
  Node(const json& value, std::string pointer, const std::string& origin)
      : value_(value), pointer_(std::move(pointer)), origin_(origin) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kParse, origin_ + ": " + (pointer_.empty() ? "/" : pointer_) + ": " + what);
  }

  const json& raw() const { return value_; }
  const std::string& pointer() const { return pointer_; }

  void require_object(std::initializer_list<const char*> allowed) const {
    if (!value_.is_object()) fail("expected an object");
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, _] : value_.items()) {
      if (!keys.count(key)) child_pointer_fail(key, "unknown key");
    }
  }

  bool has(const char* key) const { return value_.contains(key); }

  Node at(const char* key) const { return {value_.at(key), pointer_ + "/" + key, origin_}; }

  Node at(std::size_t index) const {
    return {value_.at(index), pointer_ + "/" + std::to_string(index), origin_};
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    return value_.get<double>();
  }

  long long integer() const {
    if (!value_.is_number_integer()) fail("expected an integer");
    return value_.get<long long>();
  }

  std::size_t count() const {
    const long long v = integer();
    if (v < 0) fail("expected a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  std::size_t size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  // One-based node index in the file, zero-based in memory.
  std::size_t node_index() const {
    const long long v = integer();
    if (v < 1) fail("node indices are one-based");
    return static_cast<std::size_t>(v - 1);
  }

  template <class T, class F>
  void maybe(const char* key, T& target, F read) const {
    if (has(key)) target = read(at(key));
  }

 private:
  [[noreturn]] void child_pointer_fail(const std::string& key, const std::string& what) const {
    throw Error(ErrorCode::kParse, origin_ + ": " + pointer_ + "/" + key + ": " + what);
  }

  const json& value_;
  std::string pointer_;
  const std::string& origin_;
};

auto as_number = [](const Node& n) { return n.number(); };
auto as_bool = [](const Node& n) { return n.boolean(); };
auto as_count = [](const Node& n) { return n.count(); };

Timeline read_timeline(const Node& node, double scale) {
  node.require_object({"initial", "changes"});
  Timeline t;
  if (!node.has("initial")) node.fail("missing key 'initial'");
  t.initial = node.at("initial").number() * scale;
  if (node.has("changes")) {
    const Node changes = node.at("changes");
    for (std::size_t i = 0; i < changes.size(); ++i) {
      const Node pair = changes.at(i);
      if (pair.size() != 2) pair.fail("expected [day, value]");
      const double day = pair.at(std::size_t{0}).number();
      if (!t.changes.empty() && day < t.changes.back().first) pair.fail("change days must be ascending");
      t.changes.emplace_back(day, pair.at(std::size_t{1}).number() * scale);
    }
  }
  return t;
}

void read_column(const Node& node, ColumnModel& col) {
  node.require_object({"depth_m", "node_count", "dt_s", "substeps", "conductivity_mean", "max_head_change_m",
                       "max_internal_step_s", "soil", "sink"});
  node.maybe("depth_m", col.depth, as_number);
  node.maybe("node_count", col.node_count, as_count);
  node.maybe("dt_s", col.dt, as_number);
  if (node.has("substeps")) {
    const long long s = node.at("substeps").integer();
    if (s < 1) node.at("substeps").fail("must be >= 1");
    col.substeps = static_cast<int>(s);
  }
  node.maybe("max_head_change_m", col.max_head_change, as_number);
  node.maybe("max_internal_step_s", col.max_internal_step, as_number);
  if (node.has("conductivity_mean")) {
    const std::string mean = node.at("conductivity_mean").string();
    if (mean == "arithmetic") {
      col.mean = ConductivityMean::kArithmetic;
    } else if (mean == "geometric") {
      col.mean = ConductivityMean::kGeometric;
    } else {
      node.at("conductivity_mean").fail("expected \"arithmetic\" or \"geometric\"");
    }
  }
  if (node.has("soil")) {
    const Node soil = node.at("soil");
    soil.require_object({"saturated_conductivity_m_per_s", "theta_s", "theta_r", "alpha_per_m", "n"});
    auto& p = col.params;
    soil.maybe("saturated_conductivity_m_per_s", p.saturated_conductivity, as_number);
    soil.maybe("theta_s", p.theta_s, as_number);
    soil.maybe("theta_r", p.theta_r, as_number);
    soil.maybe("alpha_per_m", p.alpha, as_number);
    soil.maybe("n", p.n, as_number);
  }
  if (node.has("sink")) {
    const Node sink = node.at("sink");
    sink.require_object({"enabled", "crop_coefficient", "evapotranspiration_mm_per_day", "root_depth_m"});
    auto& s = col.sink;
    sink.maybe("enabled", s.enabled, as_bool);
    sink.maybe("crop_coefficient", s.crop_coefficient, as_number);
    if (sink.has("evapotranspiration_mm_per_day")) {
      s.evapotranspiration_rate = mm_per_day_to_m_per_s(sink.at("evapotranspiration_mm_per_day").number());
    }
    sink.maybe("root_depth_m", s.root_depth, as_number);
  }
}

void read_mismatch(const Node& node, ScenarioConfig& c) {
  if (!node.has("kind")) node.fail("missing key 'kind'");
  const std::string kind = node.at("kind").string();
  const auto n = c.column.node_count;
  const auto ni = static_cast<Eigen::Index>(n);
  c.anchors.clear();
  if (kind == "constant_uniform") {
    node.require_object({"kind", "value", "guess"});
    if (!node.has("value")) node.fail("missing key 'value'");
    c.mismatch = MismatchKind::kConstantUniform;
    c.true_inputs = Vector::Constant(ni, node.at("value").number());
    c.input_guess = Vector::Constant(ni, node.has("guess") ? node.at("guess").number() : 0.0);
  } else if (kind == "constant_per_node") {
    node.require_object({"kind", "anchors"});
    if (!node.has("anchors")) node.fail("missing key 'anchors'");
    const Node list = node.at("anchors");
    if (list.size() == 0) list.fail("need at least one anchor");
    std::vector<std::pair<std::size_t, double>> truth, guess;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Node a = list.at(i);
      a.require_object({"node", "truth", "guess"});
      if (!a.has("node") || !a.has("truth")) a.fail("anchors need 'node' and 'truth'");
      InputAnchor anchor;
      anchor.node = a.at("node").node_index();
      if (anchor.node >= n) a.at("node").fail("outside the column");
      anchor.truth = a.at("truth").number();
      anchor.guess = a.has("guess") ? a.at("guess").number() : 0.0;
      c.anchors.push_back(anchor);
      truth.emplace_back(anchor.node, anchor.truth);
      guess.emplace_back(anchor.node, anchor.guess);
    }
    c.mismatch = MismatchKind::kConstantPerNode;
    c.true_inputs = interpolate_anchors(truth, n);
    c.input_guess = interpolate_anchors(guess, n);
  } else if (kind == "parameter_drift") {
    node.require_object({"kind", "crop_coefficient", "evapotranspiration_mm_per_day", "guess"});
    if (!node.has("crop_coefficient") || !node.has("evapotranspiration_mm_per_day")) {
      node.fail("parameter drift needs 'crop_coefficient' and 'evapotranspiration_mm_per_day' timelines");
    }
    c.mismatch = MismatchKind::kParameterDrift;
    c.true_crop_coefficient = read_timeline(node.at("crop_coefficient"), 1.0);
    c.true_evapotranspiration = read_timeline(node.at("evapotranspiration_mm_per_day"), mm_per_day_to_m_per_s(1.0));
    c.true_inputs = Vector::Zero(ni);
    c.input_guess = Vector::Constant(ni, node.has("guess") ? node.at("guess").number() : 0.0);
  } else {
    node.at("kind").fail("expected \"constant_uniform\", \"constant_per_node\" or \"parameter_drift\"");
  }
}

ScenarioConfig read_scenario(const Node& root) {
  root.require_object({"name", "preset", "column", "horizon_days", "initial_state", "noise", "mismatch", "sensors",
                       "placement", "step_size", "mstep_enabled", "irrigation", "rmse", "seed", "reported_nodes"});
  ScenarioConfig c;
  if (root.has("preset")) {
    const long long preset = root.at("preset").integer();
    if (preset < 1 || preset > 3) root.at("preset").fail("expected 1, 2 or 3");
    c = build_scenario(static_cast<int>(preset));
  } else {
    // Without a preset the defaults describe preset 1 minus its mismatch.
    c.input_guess = Vector::Zero(static_cast<Eigen::Index>(c.column.node_count));
    c.true_inputs = c.input_guess;
    for (std::size_t i = 0; i < c.column.node_count; ++i) c.sensors.push_back(i);
  }
  if (root.has("name")) c.name = root.at("name").string();

  if (root.has("column")) {
    const std::size_t before = c.column.node_count;
    read_column(root.at("column"), c.column);
    if (c.column.node_count != before && !root.has("mismatch")) {
      root.at("column").fail("changing node_count requires an explicit 'mismatch' block");
    }
    if (c.column.node_count != before) {
      if (!root.has("reported_nodes")) {
        c.reported_nodes.clear();
        for (std::size_t i = 0; i < c.column.node_count; ++i) c.reported_nodes.push_back(i);
      }
      c.sensors.clear();
      for (std::size_t i = 0; i < c.column.node_count; ++i) c.sensors.push_back(i);
    }
  }
  root.maybe("horizon_days", c.horizon_days, as_number);

  if (root.has("initial_state")) {
    const Node s = root.at("initial_state");
    s.require_object({"head_m", "guess_factor", "covariance_m2"});
    s.maybe("head_m", c.initial_head, as_number);
    s.maybe("guess_factor", c.initial_guess_factor, as_number);
    s.maybe("covariance_m2", c.initial_covariance, as_number);
  }
  if (root.has("noise")) {
    const Node s = root.at("noise");
    s.require_object({"process_variance_m2", "measurement_variance"});
    s.maybe("process_variance_m2", c.process_variance, as_number);
    s.maybe("measurement_variance", c.measurement_variance, as_number);
  }
  if (root.has("mismatch")) read_mismatch(root.at("mismatch"), c);

  if (root.has("sensors")) {
    const Node s = root.at("sensors");
    if (s.raw().is_string()) {
      if (s.string() != "auto") s.fail("expected \"auto\" or an array of one-based node indices");
      c.auto_sensors = true;
      c.sensors.clear();
    } else {
      c.auto_sensors = false;
      c.sensors.clear();
      for (std::size_t i = 0; i < s.size(); ++i) {
        const std::size_t idx = s.at(i).node_index();
        if (idx >= c.column.node_count) s.at(i).fail("outside the column");
        c.sensors.push_back(idx);
      }
    }
  }
  if (root.has("placement")) {
    const Node s = root.at("placement");
    s.require_object({"window", "rank_tolerance", "augmented"});
    s.maybe("window", c.placement.window, as_count);
    s.maybe("rank_tolerance", c.placement.rank_tolerance, as_number);
    s.maybe("augmented", c.placement.augmented, as_bool);
  }
  if (root.has("step_size")) {
    const Node s = root.at("step_size");
    s.require_object({"kind", "gamma0"});
    if (s.has("kind")) {
      const std::string kind = s.at("kind").string();
      if (kind == "fixed") {
        c.schedule.kind = StepSizeSchedule::Kind::kFixed;
      } else if (kind == "harmonic") {
        c.schedule.kind = StepSizeSchedule::Kind::kHarmonic;
      } else {
        s.at("kind").fail("expected \"fixed\" or \"harmonic\"");
      }
    }
    s.maybe("gamma0", c.schedule.gamma0, as_number);
  }
  root.maybe("mstep_enabled", c.mstep_enabled, as_bool);
  if (root.has("irrigation")) {
    const Node s = root.at("irrigation");
    s.require_object({"rate_m_per_s", "pulse_s", "period_s", "offset_s"});
    s.maybe("rate_m_per_s", c.irrigation.rate, as_number);
    s.maybe("pulse_s", c.irrigation.pulse_seconds, as_number);
    s.maybe("period_s", c.irrigation.period_seconds, as_number);
    s.maybe("offset_s", c.irrigation.offset_seconds, as_number);
  }
  if (root.has("rmse")) {
    const Node s = root.at("rmse");
    s.require_object({"mode", "window_steps"});
    if (s.has("mode")) {
      const std::string mode = s.at("mode").string();
      if (mode == "running") {
        c.rmse_mode = RmseMode::kRunning;
      } else if (mode == "windowed") {
        c.rmse_mode = RmseMode::kWindowed;
      } else {
        s.at("mode").fail("expected \"running\" or \"windowed\"");
      }
    }
    s.maybe("window_steps", c.rmse_window, as_count);
  }
  if (root.has("seed")) {
    const Node s = root.at("seed");
    if (!s.raw().is_number_unsigned()) s.fail("expected a non-negative integer");
    c.seed = s.raw().get<std::uint64_t>();
  }
  if (root.has("reported_nodes")) {
    const Node s = root.at("reported_nodes");
    c.reported_nodes.clear();
    for (std::size_t i = 0; i < s.size(); ++i) c.reported_nodes.push_back(s.at(i).node_index());
  }
  return c;
}

json timeline_json(const Timeline& t, double scale) {
  json changes = json::array();
  for (const auto& [day, v] : t.changes) changes.push_back({day, v / scale});
  return {{"initial", t.initial / scale}, {"changes", changes}};
}

json one_based(const std::vector<std::size_t>& nodes) {
  json out = json::array();
  for (std::size_t i : nodes) out.push_back(i + 1);
  return out;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << origin << ": byte " << e.byte << ": malformed JSON (" << e.what() << ")";
    throw Error(ErrorCode::kParse, os.str());
  }
  ScenarioConfig c = read_scenario(Node(doc, "", origin));
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfiguration, origin + ": " + e.what());
  }
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "error reading config file '" + path.string() + "'");
  return parse_scenario(text.str(), path.string());
}

std::string scenario_to_json(const ScenarioConfig& c, int indent) {
  const auto& col = c.column;
  json doc;
  doc["name"] = c.name;
  if (c.preset != 0) doc["preset"] = c.preset;
  doc["column"] = {
      {"depth_m", col.depth},
      {"node_count", col.node_count},
      {"dt_s", col.dt},
      {"substeps", col.substeps},
      {"conductivity_mean", col.mean == ConductivityMean::kArithmetic ? "arithmetic" : "geometric"},
      {"max_head_change_m", col.max_head_change},
      {"max_internal_step_s", col.max_internal_step},
      {"soil",
       {{"saturated_conductivity_m_per_s", col.params.saturated_conductivity},
        {"theta_s", col.params.theta_s},
        {"theta_r", col.params.theta_r},
        {"alpha_per_m", col.params.alpha},
        {"n", col.params.n}}},
      {"sink",
       {{"enabled", col.sink.enabled},
        {"crop_coefficient", col.sink.crop_coefficient},
        {"evapotranspiration_mm_per_day", m_per_s_to_mm_per_day(col.sink.evapotranspiration_rate)},
        {"root_depth_m", col.sink.root_depth}}}};
  doc["horizon_days"] = c.horizon_days;
  doc["initial_state"] = {
      {"head_m", c.initial_head}, {"guess_factor", c.initial_guess_factor}, {"covariance_m2", c.initial_covariance}};
  doc["noise"] = {{"process_variance_m2", c.process_variance}, {"measurement_variance", c.measurement_variance}};

  switch (c.mismatch) {
    case MismatchKind::kConstantUniform:
      doc["mismatch"] = {{"kind", "constant_uniform"},
                         {"value", c.true_inputs.size() ? c.true_inputs[0] : 0.0},
                         {"guess", c.input_guess.size() ? c.input_guess[0] : 0.0}};
      break;
    case MismatchKind::kConstantPerNode: {
      json anchors = json::array();
      for (const auto& a : c.anchors) anchors.push_back({{"node", a.node + 1}, {"truth", a.truth}, {"guess", a.guess}});
      doc["mismatch"] = {{"kind", "constant_per_node"}, {"anchors", anchors}};
      break;
    }
    case MismatchKind::kParameterDrift:
      doc["mismatch"] = {{"kind", "parameter_drift"},
                         {"crop_coefficient", timeline_json(c.true_crop_coefficient, 1.0)},
                         {"evapotranspiration_mm_per_day",
                          timeline_json(c.true_evapotranspiration, mm_per_day_to_m_per_s(1.0))},
                         {"guess", c.input_guess.size() ? c.input_guess[0] : 0.0}};
      break;
  }

  if (c.auto_sensors) {
    doc["sensors"] = "auto";
  } else {
    doc["sensors"] = one_based(c.sensors);
  }
  doc["placement"] = {
      {"window", c.placement.window}, {"rank_tolerance", c.placement.rank_tolerance}, {"augmented", c.placement.augmented}};
  doc["step_size"] = {{"kind", c.schedule.kind == StepSizeSchedule::Kind::kFixed ? "fixed" : "harmonic"},
                      {"gamma0", c.schedule.gamma0}};
  doc["mstep_enabled"] = c.mstep_enabled;
  doc["irrigation"] = {{"rate_m_per_s", c.irrigation.rate},
                       {"pulse_s", c.irrigation.pulse_seconds},
                       {"period_s", c.irrigation.period_seconds},
                       {"offset_s", c.irrigation.offset_seconds}};
  doc["rmse"] = {{"mode", c.rmse_mode == RmseMode::kRunning ? "running" : "windowed"},
                 {"window_steps", c.rmse_window}};
  doc["seed"] = c.seed;
  doc["reported_nodes"] = one_based(c.reported_nodes);
  return doc.dump(indent);
}

}  // namespace soilrem
