#include "clipsgd/harness/spec.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "clipsgd/errors.hpp"

namespace clipsgd::harness {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
std::optional<T> get_opt(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get<T>(j, key, where);
}

std::vector<std::uint64_t> parse_seeds(const json& j, const std::string& where) {
  std::vector<std::uint64_t> seeds;
  if (j.is_array()) {
    for (const auto& s : j) {
      if (!s.is_number_unsigned()) throw ConfigError(where + ": seeds must be non-negative integers");
      seeds.push_back(s.get<std::uint64_t>());
    }
  } else if (j.is_object()) {
    check_keys(j, where, {"base", "count"});
    const auto base = get<std::uint64_t>(j, "base", where);
    const auto count = get<std::uint64_t>(j, "count", where);
    for (std::uint64_t i = 0; i < count; ++i) seeds.push_back(base + i);
  } else {
    throw ConfigError(where + ": expected a list or {base, count}");
  }
  if (seeds.empty()) throw ConfigError(where + ": empty seed list");
  std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
  if (uniq.size() != seeds.size()) throw ConfigError(where + ": seeds must be distinct");
  return seeds;
}

std::vector<double> positive_list(const json& j, const std::string& key, const std::string& where) {
  std::vector<double> out;
  if (!j.contains(key) || j.at(key).is_null()) return out;
  out = get<std::vector<double>>(j, key, where);
  for (double v : out) {
    if (!(v > 0.0)) throw ConfigError(where + "." + key + ": values must be positive");
  }
  return out;
}

TunerSpec parse_tuner(const json& j, const std::string& where) {
  check_keys(j, where, {"lr", "c", "refine", "max_extensions", "seeds", "T"});
  TunerSpec t;
  t.lr_values = positive_list(j, "lr", where);
  t.c_values = positive_list(j, "c", where);
  if (j.contains("refine")) t.refine = positive_list(j, "refine", where);
  if (auto v = get_opt<int>(j, "max_extensions", where)) t.max_extensions = *v;
  if (j.contains("seeds")) t.seeds = parse_seeds(j.at("seeds"), where + ".seeds");
  t.T = get_opt<std::uint64_t>(j, "T", where);
  if (t.lr_values.empty() && t.c_values.empty()) {
    throw ConfigError(where + ": at least one of lr, c must be given");
  }
  if (t.max_extensions < 0) throw ConfigError(where + ".max_extensions must be >= 0");
  if (t.T && *t.T < 1) throw ConfigError(where + ".T must be >= 1");
  return t;
}

ObjectiveSpec parse_objective(const json& j, const std::filesystem::path& base) {
  const std::string where = "objective";
  check_keys(j, where, {"type", "L0", "L1", "dim", "diag", "csv", "target", "shuffle_seed",
                        "batch", "drop_first_level", "certify_radius", "certify_samples"});
  ObjectiveSpec o;
  o.type = get<std::string>(j, "type", where);
  if (o.type == "cosh") {
    if (auto v = get_opt<double>(j, "L0", where)) o.L0 = *v;
    if (auto v = get_opt<double>(j, "L1", where)) o.L1 = *v;
    o.dim = 1;
  } else if (o.type == "quadratic") {
    o.dim = get<std::size_t>(j, "dim", where);
  } else if (o.type == "quartic_synthetic") {
    if (auto v = get_opt<std::size_t>(j, "dim", where)) o.dim = *v;
    if (j.contains("diag") && j.at("diag").is_array()) {
      o.diag = get<std::vector<double>>(j, "diag", where);
      o.dim = o.diag.size();
    } else if (j.contains("diag") && j.at("diag") != "harmonic") {
      throw ConfigError("objective.diag must be a list or \"harmonic\"");
    }
  } else if (o.type == "quartic_regression") {
    o.csv = get<std::string>(j, "csv", where);
    if (o.csv.is_relative() && !base.empty()) o.csv = base / o.csv;
    o.target = get<std::string>(j, "target", where);
    o.shuffle_seed = get_opt<std::uint64_t>(j, "shuffle_seed", where);
    if (auto v = get_opt<std::size_t>(j, "batch", where)) o.batch = *v;
    if (auto v = get_opt<bool>(j, "drop_first_level", where)) o.drop_first_level = *v;
  } else {
    throw ConfigError("unknown objective type: " + o.type);
  }
  o.certify_radius = get_opt<double>(j, "certify_radius", where);
  if (auto v = get_opt<std::size_t>(j, "certify_samples", where)) o.certify_samples = *v;
  if (o.dim == 0) throw ConfigError("objective.dim must be >= 1");
  return o;
}

NoiseSpec parse_noise(const json& j) {
  const std::string where = "noise";
  check_keys(j, where, {"kind", "sigma", "norm_variance"});
  NoiseSpec n;
  n.kind = get<std::string>(j, "kind", where);
  if (n.kind == "gaussian") {
    n.norm_variance = get<double>(j, "norm_variance", where);
    if (!(n.norm_variance >= 0.0)) throw ConfigError("noise.norm_variance must be >= 0");
  } else if (n.kind == "bounded" || n.kind == "sub_gaussian") {
    n.sigma = get<double>(j, "sigma", where);
    if (!(n.sigma >= 0.0)) throw ConfigError("noise.sigma must be >= 0");
  } else if (n.kind != "none") {
    throw ConfigError("unknown noise kind: " + n.kind);
  }
  return n;
}

MethodSpec parse_method(const json& j, std::size_t index) {
  MethodSpec m;
  const std::string where = "methods[" + std::to_string(index) + "]";
  if (j.is_string()) {
    m.variant = parse_variant(j.get<std::string>());
    m.label = j.get<std::string>();
    return m;
  }
  check_keys(j, where, {"method", "label", "sampling", "averaging", "mode", "implicit_rule",
                        "lr", "threshold", "R", "adaptive_include_current", "tuner"});
  const auto name = get<std::string>(j, "method", where);
  m.variant = parse_variant(name);
  m.label = get_opt<std::string>(j, "label", where).value_or(name);
  if (auto v = get_opt<std::string>(j, "sampling", where)) m.sampling = parse_sampling(*v);
  if (auto v = get_opt<std::string>(j, "averaging", where)) m.averaging = parse_averaging(*v);
  if (auto v = get_opt<std::string>(j, "mode", where)) m.mode = parse_step_mode(*v);
  if (auto v = get_opt<std::string>(j, "implicit_rule", where)) {
    if (*v == "theory") m.implicit_rule = ImplicitRule::theory;
    else if (*v == "smoothed") m.implicit_rule = ImplicitRule::smoothed;
    else throw ConfigError(where + ".implicit_rule: unknown rule " + *v);
  }
  if (auto v = get_opt<double>(j, "lr", where)) m.lr_scale = *v;
  m.threshold = get_opt<double>(j, "threshold", where);
  m.R = get_opt<double>(j, "R", where);
  if (auto v = get_opt<bool>(j, "adaptive_include_current", where)) m.adaptive_include_current = *v;
  if (j.contains("tuner") && !j.at("tuner").is_null()) m.tuner = parse_tuner(j.at("tuner"), where + ".tuner");
  if (!(m.lr_scale > 0.0)) throw ConfigError(where + ".lr must be > 0");
  if (m.threshold && !(*m.threshold > 0.0)) throw ConfigError(where + ".threshold must be > 0");
  if (m.R && !(*m.R > 0.0)) throw ConfigError(where + ".R must be > 0");
  return m;
}

}  // namespace

const char* to_string(Budget b) {
  return b == Budget::equal_iterations ? "equal_iterations" : "equal_oracle_calls";
}

ExperimentSpec parse_experiment_spec(const std::string& json_text,
                                     const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec is not valid JSON: ") + e.what());
  }
  const std::string where = "spec";
  check_keys(j, where, {"name", "objective", "noise", "x0", "T", "delta", "seeds",
                        "record_every", "workers", "budget", "sigma_prime_factor", "methods",
                        "tuner", "output", "checks"});
  ExperimentSpec s;
  s.base_dir = base_dir;
  s.name = get<std::string>(j, "name", where);
  if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("spec.name must be a non-empty file-name-safe string");
  }
  s.objective = parse_objective(j.at("objective"), base_dir);
  if (j.contains("noise")) s.noise = parse_noise(j.at("noise"));

  if (!j.contains("x0")) throw ConfigError("spec.x0 is required");
  const json& x0 = j.at("x0");
  if (x0.is_array()) {
    s.x0 = x0.get<std::vector<double>>();
  } else if (x0.is_number()) {
    s.x0_fill = x0.get<double>();
  } else {
    throw ConfigError("spec.x0 must be a list or a number (repeated)");
  }

  s.T = get<std::uint64_t>(j, "T", where);
  if (s.T < 1) throw ConfigError("spec.T must be >= 1");
  if (auto v = get_opt<double>(j, "delta", where)) s.delta = *v;
  if (!(s.delta > 0.0 && s.delta < 1.0)) throw ConfigError("spec.delta must lie in (0,1)");
  s.seeds = parse_seeds(j.at("seeds"), "spec.seeds");
  if (auto v = get_opt<std::uint64_t>(j, "record_every", where)) s.record_every = *v;
  if (s.record_every < 1) throw ConfigError("spec.record_every must be >= 1");
  if (auto v = get_opt<unsigned>(j, "workers", where)) s.workers = *v;
  if (auto v = get_opt<std::string>(j, "budget", where)) {
    if (*v == "equal_iterations") s.budget = Budget::equal_iterations;
    else if (*v == "equal_oracle_calls") s.budget = Budget::equal_oracle_calls;
    else throw ConfigError("spec.budget: unknown value " + *v);
  }
  if (auto v = get_opt<double>(j, "sigma_prime_factor", where)) s.sigma_prime_factor = *v;
  if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty()) {
    throw ConfigError("spec.methods must be a non-empty list");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < j.at("methods").size(); ++i) {
    s.methods.push_back(parse_method(j.at("methods")[i], i));
    if (!labels.insert(s.methods.back().label).second) {
      throw ConfigError("duplicate method label: " + s.methods.back().label);
    }
  }
  if (j.contains("tuner") && !j.at("tuner").is_null()) s.tuner = parse_tuner(j.at("tuner"), "spec.tuner");
  s.output = get_opt<std::string>(j, "output", where).value_or("out/" + s.name);
  if (s.output.is_relative() && !base_dir.empty()) s.output = base_dir / s.output;
  if (auto v = get_opt<bool>(j, "checks", where)) s.checks = *v;
  return s;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_spec(buf.str(), path.has_parent_path() ? path.parent_path() : ".");
}

const std::string& experiment_spec_schema() {
  static const std::string schema = R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "clipsgd experiment spec",
  "type": "object",
  "required": ["name", "objective", "x0", "T", "seeds", "methods"],
  "additionalProperties": false,
  "properties": {
    "name": {"type": "string", "pattern": "^[^/\\\\]+$"},
    "objective": {
      "type": "object",
      "required": ["type"],
      "additionalProperties": false,
      "properties": {
        "type": {"enum": ["cosh", "quadratic", "quartic_synthetic", "quartic_regression"]},
        "L0": {"type": "number", "exclusiveMinimum": 0},
        "L1": {"type": "number", "exclusiveMinimum": 0},
        "dim": {"type": "integer", "minimum": 1},
        "diag": {"oneOf": [{"const": "harmonic"},
                           {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}]},
        "csv": {"type": "string"},
        "target": {"type": "string"},
        "shuffle_seed": {"type": "integer", "minimum": 0},
        "batch": {"type": "integer", "minimum": 1},
        "drop_first_level": {"type": "boolean"},
        "certify_radius": {"type": "number", "exclusiveMinimum": 0},
        "certify_samples": {"type": "integer", "minimum": 1}
      }
    },
    "noise": {
      "type": "object",
      "required": ["kind"],
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["none", "bounded", "sub_gaussian", "gaussian"]},
        "sigma": {"type": "number", "minimum": 0},
        "norm_variance": {"type": "number", "minimum": 0}
      }
    },
    "x0": {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]},
    "T": {"type": "integer", "minimum": 1},
    "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    "seeds": {"$ref": "#/$defs/seeds"},
    "record_every": {"type": "integer", "minimum": 1},
    "workers": {"type": "integer", "minimum": 0},
    "budget": {"enum": ["equal_iterations", "equal_oracle_calls"]},
    "sigma_prime_factor": {"type": "number", "exclusiveMinimum": 0},
    "methods": {"type": "array", "minItems": 1, "items": {"oneOf": [
      {"$ref": "#/$defs/method_name"},
      {"type": "object",
       "required": ["method"],
       "additionalProperties": false,
       "properties": {
         "method": {"$ref": "#/$defs/method_name"},
         "label": {"type": "string"},
         "sampling": {"enum": ["double", "single"]},
         "averaging": {"enum": ["t2_rule", "all_iterates"]},
         "mode": {"enum": ["theory", "direct"]},
         "implicit_rule": {"enum": ["theory", "smoothed"]},
         "lr": {"type": "number", "exclusiveMinimum": 0},
         "threshold": {"type": "number", "exclusiveMinimum": 0},
         "R": {"type": "number", "exclusiveMinimum": 0},
         "adaptive_include_current": {"type": "boolean"},
         "tuner": {"$ref": "#/$defs/tuner"}
       }}
    ]}},
    "tuner": {"$ref": "#/$defs/tuner"},
    "output": {"type": "string"},
    "checks": {"type": "boolean"}
  },
  "$defs": {
    "method_name": {"enum": ["standard", "implicit", "conservative", "adaptive",
                             "adaptive_conservative", "plain_sgd", "plain_adaptive"]},
    "seeds": {"oneOf": [
      {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1, "uniqueItems": true},
      {"type": "object", "required": ["base", "count"], "additionalProperties": false,
       "properties": {"base": {"type": "integer", "minimum": 0}, "count": {"type": "integer", "minimum": 1}}}
    ]},
    "tuner": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "lr": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "c": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "refine": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "max_extensions": {"type": "integer", "minimum": 0},
        "seeds": {"$ref": "#/$defs/seeds"},
        "T": {"type": "integer", "minimum": 1}
      }
    }
  }
}
)";
  return schema;
}

}  // namespace clipsgd::harness
