#include "lfnode/config.hpp"

#include "lfnode/forward.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace lfnode {

std::size_t ExperimentConfig::weight_dim() const { return field == FieldKind::linear ? 1 : d * d + 2 * d; }

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
  if (field == FieldKind::custom) fail("field must be tanh or linear");
  if (d == 0) fail("d must be positive");
  if (field == FieldKind::linear && d != 1) fail("linear field requires d = 1");
  if (readout_c.size() != d) fail("readout_c must have d entries");
  if (path == PathMode::constant && path_constant.size() != weight_dim()) {
    fail("path_constant must have n = " + std::to_string(weight_dim()) + " entries");
  }
  if (path_harmonics < 0) fail("path_harmonics must be nonnegative");
  if (data_x.empty()) {
    if (n_pairs == 0) fail("either data_x or n_pairs > 0 is required");
    if (y_rule == YRule::fixed) fail("y_rule 'fixed' needs explicit data_x/data_y");
  } else {
    if (data_x.size() % d != 0) fail("data_x length must be a multiple of d");
    if (y_rule == YRule::fixed && data_y.size() != data_x.size() / d) fail("data_y needs one value per input");
  }
  if (levels.empty()) fail("levels must not be empty");
  for (auto l : levels) {
    if (l < 4) fail("every level must be >= 4");
  }
  if (refine == 0) fail("refine must be >= 1");
}

ExperimentConfig linear_model_config() {
  ExperimentConfig c;
  c.field = FieldKind::linear;
  c.d = 1;
  c.readout = ReadoutKind::linear;
  c.readout_c = {1.0};
  c.path = PathMode::constant;
  c.path_constant = {1.0};
  c.data_x = {1.0};
  c.data_y = {0.0};
  return c;
}

namespace {

using nlohmann::json;

template <class Enum>
Enum parse_enum(const json& j, const std::string& key, std::initializer_list<std::pair<const char*, Enum>> names) {
  const auto s = j.get<std::string>();
  for (const auto& [name, value] : names) {
    if (s == name) return value;
  }
  throw ConfigError("config: unknown value '" + s + "' for " + key);
}

template <class Enum>
std::string enum_name(Enum value, std::initializer_list<std::pair<const char*, Enum>> names) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return "?";
}

const std::initializer_list<std::pair<const char*, FieldKind>> kFieldNames = {{"tanh", FieldKind::tanh},
                                                                             {"linear", FieldKind::linear}};
const std::initializer_list<std::pair<const char*, ReadoutKind>> kReadoutNames = {
    {"linear", ReadoutKind::linear}, {"tanh-linear", ReadoutKind::tanh_linear}};
const std::initializer_list<std::pair<const char*, PathMode>> kPathNames = {{"random", PathMode::random},
                                                                           {"constant", PathMode::constant}};
const std::initializer_list<std::pair<const char*, YRule>> kYRuleNames = {
    {"fixed", YRule::fixed}, {"zero", YRule::zero}, {"constant", YRule::constant}, {"match", YRule::match}};
const std::initializer_list<std::pair<const char*, Probe>> kProbeNames = {{"ones", Probe::ones}, {"e1", Probe::e1}};

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");

  ExperimentConfig c;
  // The field choice picks the base instance; remaining keys override it.
  if (j.contains("field") && parse_enum(j["field"], "field", kFieldNames) == FieldKind::linear) {
    c = linear_model_config();
  }
  static const std::set<std::string> known = {
      "field",  "d",      "readout",  "readout_c",   "path",    "path_seed", "path_harmonics",
      "path_amplitude",   "path_offset", "path_constant", "data_x", "data_y", "n_pairs", "x_box",
      "y_rule", "y_value", "levels",  "refine",      "seed",    "out",       "probe"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
      if (key == "field") c.field = parse_enum(value, key, kFieldNames);
      else if (key == "d") c.d = value.get<std::size_t>();
      else if (key == "readout") c.readout = parse_enum(value, key, kReadoutNames);
      else if (key == "readout_c") c.readout_c = value.get<std::vector<double>>();
      else if (key == "path") c.path = parse_enum(value, key, kPathNames);
      else if (key == "path_seed") c.path_seed = value.get<std::uint64_t>();
      else if (key == "path_harmonics") c.path_harmonics = value.get<int>();
      else if (key == "path_amplitude") c.path_amplitude = value.get<double>();
      else if (key == "path_offset") c.path_offset = value.get<double>();
      else if (key == "path_constant") c.path_constant = value.get<std::vector<double>>();
      else if (key == "data_x") c.data_x = value.get<std::vector<double>>();
      else if (key == "data_y") c.data_y = value.get<std::vector<double>>();
      else if (key == "n_pairs") c.n_pairs = value.get<std::size_t>();
      else if (key == "x_box") c.x_box = value.get<double>();
      else if (key == "y_rule") c.y_rule = parse_enum(value, key, kYRuleNames);
      else if (key == "y_value") c.y_value = value.get<double>();
      else if (key == "levels") c.levels = value.get<std::vector<std::size_t>>();
      else if (key == "refine") c.refine = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "out") c.out_dir = value.get<std::string>();
      else if (key == "probe") c.probe = parse_enum(value, key, kProbeNames);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: wrong value type: ") + e.what());
  }
  // A sampled data set replaces the default explicit pair unless data_x was given.
  if (c.n_pairs > 0 && !j.contains("data_x")) c.data_x.clear();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& c) {
  json j;
  j["field"] = enum_name(c.field, kFieldNames);
  j["d"] = c.d;
  j["readout"] = enum_name(c.readout, kReadoutNames);
  j["readout_c"] = c.readout_c;
  j["path"] = enum_name(c.path, kPathNames);
  j["path_seed"] = c.path_seed;
  j["path_harmonics"] = c.path_harmonics;
  j["path_amplitude"] = c.path_amplitude;
  j["path_offset"] = c.path_offset;
  j["path_constant"] = c.path_constant;
  j["data_x"] = c.data_x;
  j["data_y"] = c.data_y;
  j["n_pairs"] = c.n_pairs;
  j["x_box"] = c.x_box;
  j["y_rule"] = enum_name(c.y_rule, kYRuleNames);
  j["y_value"] = c.y_value;
  j["levels"] = c.levels;
  j["refine"] = c.refine;
  j["seed"] = c.seed;
  j["out"] = c.out_dir;
  j["probe"] = enum_name(c.probe, kProbeNames);
  return j.dump(2);
}

Instance build_instance(const ExperimentConfig& c) {
  c.validate();
  Instance inst{c.field == FieldKind::linear ? FieldModel::linear() : FieldModel::tanh(c.d), {}, {}};

  if (c.path == PathMode::constant) {
    inst.path = WeightPath::constant(Eigen::Map<const Vec>(c.path_constant.data(),
                                                           static_cast<Eigen::Index>(c.path_constant.size())));
  } else {
    inst.path = WeightPath::random(c.weight_dim(), c.path_seed, c.path_harmonics, c.path_amplitude, c.path_offset);
  }

  inst.loss.readout.kind = c.readout;
  inst.loss.readout.coeffs = Eigen::Map<const Vec>(c.readout_c.data(), static_cast<Eigen::Index>(c.d));

  const auto d = static_cast<Eigen::Index>(c.d);
  std::vector<Vec> inputs;
  if (!c.data_x.empty()) {
    for (std::size_t i = 0; i < c.data_x.size() / c.d; ++i) {
      inputs.emplace_back(Eigen::Map<const Vec>(c.data_x.data() + i * c.d, d));
    }
  } else {
    Rng rng(c.seed + 1);
    for (std::size_t i = 0; i < c.n_pairs; ++i) {
      Vec x(d);
      for (auto& v : x) v = rng.uniform(-c.x_box, c.x_box);
      inputs.push_back(std::move(x));
    }
  }

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    DataPair pair{inputs[i], 0.0};
    switch (c.y_rule) {
      case YRule::fixed: pair.y = c.data_y[i]; break;
      case YRule::zero: pair.y = 0.0; break;
      case YRule::constant: pair.y = c.y_value; break;
      case YRule::match: {
        const Trajectory ref = reference_trajectory(inst.field, pair.x, inst.path, 1, c.refine);
        pair.y = inst.loss.readout.value(ref.final_state());
        break;
      }
    }
    inst.loss.pairs.push_back(std::move(pair));
  }
  return inst;
}

Vec probe_vector(Probe probe, std::size_t weight_dim) {
  const auto n = static_cast<Eigen::Index>(weight_dim);
  if (probe == Probe::ones) return Vec::Ones(n);
  Vec e = Vec::Zero(n);
  e[0] = 1.0;
  return e;
}

}  // namespace lfnode
