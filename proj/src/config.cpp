#include "rifs/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "rifs/error.hpp"
#include "rifs/ifs.hpp"
#include "rifs/io.hpp"

namespace rifs {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  fail(ErrorCode::Config, "config: " + key + " = '" + value + "': " + why);
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    return parse_int(v);
  } catch (const Error&) {
    bad_value(key, v, "expected an integer");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const Error&) {
    bad_value(key, v, "expected a number");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "expected true or false");
}

std::size_t to_size(const std::string& key, const std::string& v) {
  long long n = to_int(key, v);
  if (n < 0) bad_value(key, v, "must be nonnegative");
  return static_cast<std::size_t>(n);
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(to_double(key, item));
  }
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
  return s;
}

struct Field {
  const char* name;  // section.key
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;  // empty string: omitted on write
};

template <class T>
std::string num(T v) {
  if constexpr (std::is_floating_point_v<T>)
    return fmt(v);
  else
    return std::to_string(v);
}

#define RIFS_INT(key, member)                                                                 \
  Field {                                                                                     \
    key, [](PipelineConfig& c, const std::string& v) { c.member = static_cast<int>(to_int(key, v)); }, \
        [](const PipelineConfig& c) { return num(c.member); }                                 \
  }
#define RIFS_DOUBLE(key, member)                                                          \
  Field {                                                                                 \
    key, [](PipelineConfig& c, const std::string& v) { c.member = to_double(key, v); }, \
        [](const PipelineConfig& c) { return num(c.member); }                             \
  }
#define RIFS_BOOL(key, member)                                                          \
  Field {                                                                               \
    key, [](PipelineConfig& c, const std::string& v) { c.member = to_bool(key, v); }, \
        [](const PipelineConfig& c) { return std::string(c.member ? "true" : "false"); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"system.name", [](PipelineConfig& c, const std::string& v) { c.system = v; },
       [](const PipelineConfig& c) { return c.system; }},
      {"system.spec", [](PipelineConfig& c, const std::string& v) { c.spec = v; },
       [](const PipelineConfig& c) { return c.spec; }},
      {"system.chain", [](PipelineConfig& c, const std::string& v) { c.chain = v; },
       [](const PipelineConfig& c) { return c.chain; }},
      {"system.observable", [](PipelineConfig& c, const std::string& v) { c.observable = v; },
       [](const PipelineConfig& c) { return c.observable; }},
      {"system.length", [](PipelineConfig& c, const std::string& v) { c.length = to_size("system.length", v); },
       [](const PipelineConfig& c) { return num(c.length); }},
      {"system.burn_in", [](PipelineConfig& c, const std::string& v) { c.burn_in = to_size("system.burn_in", v); },
       [](const PipelineConfig& c) { return num(c.burn_in); }},
      {"system.seed",
       [](PipelineConfig& c, const std::string& v) {
         long long s = to_int("system.seed", v);
         if (s < 0) bad_value("system.seed", v, "must be nonnegative");
         c.seed = static_cast<std::uint64_t>(s);
       },
       [](const PipelineConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }},
      {"system.x0", [](PipelineConfig& c, const std::string& v) { c.x0 = to_list("system.x0", v); },
       [](const PipelineConfig& c) { return join(c.x0); }},

      {"delay.l",
       [](PipelineConfig& c, const std::string& v) {
         c.l = v == "auto" ? 0 : static_cast<int>(to_int("delay.l", v));
       },
       [](const PipelineConfig& c) { return c.l == 0 ? std::string("auto") : std::to_string(c.l); }},
      RIFS_INT("delay.l_max", l_max),
      RIFS_DOUBLE("delay.min_separation", quality.min_separation),
      RIFS_DOUBLE("delay.min_coverage", quality.min_coverage),
      RIFS_DOUBLE("delay.residual_drop", quality.residual_drop),
      RIFS_DOUBLE("delay.max_residual", quality.max_residual),

      RIFS_INT("cluster.neighbors", cluster.neighbors),
      RIFS_DOUBLE("cluster.dim_ratio", cluster.dim_ratio),
      RIFS_DOUBLE("cluster.clean_ratio", cluster.clean_ratio),
      RIFS_DOUBLE("cluster.edge_angle_deg", cluster.edge_angle_deg),
      RIFS_DOUBLE("cluster.edge_offplane", cluster.edge_offplane),
      RIFS_INT("cluster.min_fragment", cluster.min_fragment),
      RIFS_DOUBLE("cluster.merge_threshold", cluster.merge_threshold),
      RIFS_INT("cluster.merge_patch", cluster.merge_patch),
      RIFS_DOUBLE("cluster.merge_quantile", cluster.merge_quantile),
      RIFS_DOUBLE("cluster.self_gate", cluster.self_gate),
      RIFS_DOUBLE("cluster.merge_radius", cluster.merge_radius),
      RIFS_DOUBLE("cluster.merge_gap_scale", cluster.merge_gap_scale),
      RIFS_DOUBLE("cluster.pinch_angle_deg", cluster.pinch_angle_deg),
      RIFS_DOUBLE("cluster.pinch_offplane", cluster.pinch_offplane),
      RIFS_DOUBLE("cluster.pinch_gap", cluster.pinch_gap),
      RIFS_INT("cluster.pinch_pairs", cluster.pinch_pairs),
      RIFS_DOUBLE("cluster.min_cluster_fraction", cluster.min_cluster_fraction),
      RIFS_DOUBLE("cluster.ambiguity", cluster.ambiguity),
      RIFS_DOUBLE("cluster.assign_tolerance", cluster.assign_tolerance),
      RIFS_DOUBLE("cluster.assign_reach", cluster.assign_reach),
      RIFS_INT("cluster.remerge_passes", cluster.remerge_passes),
      RIFS_INT("cluster.assign_rounds", cluster.assign_rounds),
      {"cluster.expected_k",
       [](PipelineConfig& c, const std::string& v) {
         if (v.empty() || v == "none")
           c.cluster.expected_k.reset();
         else
           c.cluster.expected_k = static_cast<int>(to_int("cluster.expected_k", v));
       },
       [](const PipelineConfig& c) {
         return c.cluster.expected_k ? std::to_string(*c.cluster.expected_k) : std::string();
       }},

      RIFS_DOUBLE("unembed.min_edge_fraction", min_edge_fraction),

      {"hdi.hidden",
       [](PipelineConfig& c, const std::string& v) {
         c.hidden = v == "auto" ? -1 : static_cast<int>(to_int("hdi.hidden", v));
       },
       [](const PipelineConfig& c) { return c.hidden < 0 ? std::string("auto") : std::to_string(c.hidden); }},
      RIFS_INT("hdi.degree", degree),
      RIFS_INT("hdi.restarts", fit.restarts),
      RIFS_DOUBLE("hdi.init_scale", fit.init_scale),
      RIFS_INT("hdi.max_iterations", fit.max_iterations),
      RIFS_DOUBLE("hdi.tolerance", fit.tolerance),
      RIFS_INT("hdi.window", fit.window),
      RIFS_DOUBLE("hdi.learning_rate", fit.learning_rate),
      RIFS_DOUBLE("hdi.lr_decay", fit.lr_decay),
      RIFS_INT("hdi.decay_patience", fit.decay_patience),
      RIFS_BOOL("hdi.delay_seed", fit.delay_seed),
      RIFS_BOOL("hdi.freeze_h0", fit.freeze_h0),

      {"output.dir", [](PipelineConfig& c, const std::string& v) { c.output_dir = v; },
       [](const PipelineConfig&) { return std::string(); }},
  };
  return table;
}

#undef RIFS_INT
#undef RIFS_DOUBLE
#undef RIFS_BOOL

}  // namespace

PipelineConfig preset_config(const std::string& name) {
  PipelineConfig c;
  c.system = name;
  if (name == "logistic3") {
    c.observable = "identity";
    c.length = 2200;
    c.x0 = {0.3};
    c.l = 2;
    c.hidden = 0;
    c.degree = 2;
  } else if (name == "henon") {
    c.observable = "coord:1";
    c.length = 10000;
    c.x0 = {0.0, 0.0};
    c.l = 3;
    c.hidden = 1;
    c.degree = 2;
  } else if (name == "sierpinski") {
    c.observable = "im";
    c.length = 20000;
    c.x0 = {0.0, 0.0};
    c.l = 3;
    c.hidden = 1;
    c.degree = 3;
  } else {
    fail(ErrorCode::Config, "config: unknown preset '" + name + "' (expected logistic3, henon or sierpinski)");
  }
  return c;
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  for (const Field& f : fields())
    if (key == f.name) {
      f.set(cfg, value);
      return;
    }
  fail(ErrorCode::Config, "config: unknown key '" + key + "'");
}

void apply_assignment(PipelineConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(ErrorCode::Config, "config: expected section.key=value, got '" + assignment + "'");
  apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

PipelineConfig load_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::Config, std::string("config: ") + e.what());
  }
  // A preset named in [system] supplies the defaults the file then refines.
  PipelineConfig cfg;
  if (auto name = tree.get_optional<std::string>("system.name"); name && (*name == "logistic3" || *name == "henon" || *name == "sierpinski"))
    cfg = preset_config(*name);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      fail(ErrorCode::Config, "config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) apply_setting(cfg, section + "." + key, value.data());
  }
  return cfg;
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "config: cannot open " + path.string());
  return load_config(in);
}

void apply_environment(PipelineConfig& cfg) {
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) cfg.output_dir = dir;
}

void validate(const PipelineConfig& cfg, bool require_seed) {
  if (require_seed && !cfg.seed) fail(ErrorCode::Config, "config: a seed is required (--seed or system.seed)");
  if (cfg.spec.empty()) {
    try {
      builtin_generators(cfg.system);
    } catch (const Error& e) {
      fail(ErrorCode::Config, std::string("config: ") + e.what());
    }
  } else if (!std::filesystem::exists(cfg.spec)) {
    fail(ErrorCode::Config, "config: generator spec " + cfg.spec + " not found");
  }
  if (!cfg.chain.empty() && !std::filesystem::exists(cfg.chain))
    fail(ErrorCode::Config, "config: chain file " + cfg.chain + " not found");
  try {
    Observable::parse(cfg.observable);
  } catch (const Error& e) {
    fail(ErrorCode::Config, std::string("config: ") + e.what());
  }
  if (cfg.length < 10) fail(ErrorCode::Config, "config: system.length must be at least 10");
  if (cfg.l < 0 || cfg.l == 1) fail(ErrorCode::Config, "config: delay.l must be auto or at least 2");
  if (cfg.l == 0 && cfg.l_max < 2) fail(ErrorCode::Config, "config: delay.l_max must be at least 2");
  if (!(cfg.min_edge_fraction >= 0.0 && cfg.min_edge_fraction < 1.0))
    fail(ErrorCode::Config, "config: unembed.min_edge_fraction must lie in [0, 1)");
  if (cfg.hidden < -1) fail(ErrorCode::Config, "config: hdi.hidden must be auto or nonnegative");
  if (cfg.degree < 1) fail(ErrorCode::Config, "config: hdi.degree must be at least 1");
  if (cfg.fit.restarts < 1 || cfg.fit.max_iterations < 1)
    fail(ErrorCode::Config, "config: hdi.restarts and hdi.max_iterations must be positive");
  if (cfg.output_dir.empty()) fail(ErrorCode::Config, "config: output.dir is empty");
}

void write_config(std::ostream& os, const PipelineConfig& cfg) {
  std::string section;
  for (const Field& f : fields()) {
    std::string name = f.name;
    auto dot = name.find('.');
    std::string sec = name.substr(0, dot), key = name.substr(dot + 1);
    std::string value = f.get(cfg);
    if (value.empty()) continue;
    if (sec != section) {
      os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    os << key << " = " << value << '\n';
  }
}

}  // namespace rifs
