#include "agnc/experiments/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "agnc/errors.hpp"

namespace agnc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

double to_double(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError(fmt::format("'{}' is not a number", s));
  }
  return v;
}

long long to_integer(const std::string& s) {
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError(fmt::format("'{}' is not an integer", s));
  }
  return v;
}

int to_int(const std::string& s) {
  const long long v = to_integer(s);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(fmt::format("'{}' is out of range", s));
  }
  return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& s) {
  char* end = nullptr;
  errno = 0;
  if (s.empty() || s[0] == '-') throw ConfigError(fmt::format("'{}' is not an unsigned integer", s));
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) {
    throw ConfigError(fmt::format("'{}' is not an unsigned integer", s));
  }
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(fmt::format("'{}' is not a boolean", s));
}

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(item));
  return out;
}

using Setter = std::function<void(const std::string&)>;
using Table = std::map<std::string, Setter>;

void add_method_keys(Table& t, MethodParams& p, bool with_tau) {
  t["cauchy_scale"] = [&p](const std::string& v) { p.cauchy_scale = to_double(v); };
  t["welsch_scale"] = [&p](const std::string& v) { p.welsch_scale = to_double(v); };
  t["gm_scale"] = [&p](const std::string& v) { p.gm_scale = to_double(v); };
  t["tls_threshold"] = [&p](const std::string& v) { p.tls_threshold = to_double(v); };
  if (with_tau) t["tau"] = [&p](const std::string& v) { p.alpha.tau = to_double(v); };
  t["alpha_grid"] = [&p](const std::string& v) {
    p.alpha.grid.clear();
    for (double a : to_doubles(v)) p.alpha.grid.emplace_back(a);
  };
  t["quadrature_step"] = [&p](const std::string& v) { p.alpha.quadrature_step = to_double(v); };
  t["ba_tau"] = [&p](const std::string& v) { p.ba_tau = to_double(v); };
  t["density_bins"] = [&p](const std::string& v) { p.density_bins = to_int(v); };
  t["density_within_tau"] = [&p](const std::string& v) { p.density_within_tau = to_bool(v); };
  t["shape_variant"] = [&p](const std::string& v) {
    if (v == "decreasing") {
      p.schedule.variant = ShapeVariant::DecreasingMu;
    } else if (v == "increasing") {
      p.schedule.variant = ShapeVariant::IncreasingMu;
    } else {
      throw ConfigError(fmt::format("shape_variant must be increasing or decreasing, got '{}'", v));
    }
  };
  t["update_factor"] = [&p](const std::string& v) { p.schedule.update_factor = to_double(v); };
  t["start_tolerance"] = [&p](const std::string& v) { p.schedule.start_tolerance = to_double(v); };
  t["f_tolerance"] = [&p](const std::string& v) { p.schedule.f_tolerance = to_double(v); };
  t["f_floor"] = [&p](const std::string& v) { p.schedule.f_floor = to_double(v); };
  t["max_stages"] = [&p](const std::string& v) { p.schedule.max_stages = to_int(v); };
  t["inner_iterations"] = [&p](const std::string& v) { p.schedule.inner_iterations = to_int(v); };
  t["irls_tolerance"] = [&p](const std::string& v) { p.irls_tolerance = to_double(v); };
  t["irls_max_iterations"] = [&p](const std::string& v) { p.irls_max_iterations = to_int(v); };
}

void apply_entries(const KeyValueConfig& kv, const Table& table) {
  std::set<std::string> seen;
  for (const ConfigEntry& e : kv.entries) {
    const auto where = fmt::format("{}:{}", kv.source, e.line);
    const auto it = table.find(e.key);
    if (it == table.end()) throw ConfigError(fmt::format("{}: unknown key '{}'", where, e.key));
    if (!seen.insert(e.key).second) {
      throw ConfigError(fmt::format("{}: duplicate key '{}'", where, e.key));
    }
    try {
      it->second(e.value);
    } catch (const std::exception& ex) {
      throw ConfigError(fmt::format("{}: {}: {}", where, e.key, ex.what()));
    }
  }
}

void validate_in(const KeyValueConfig& kv, const std::function<void()>& check) {
  try {
    check();
  } catch (const std::exception& ex) {
    throw ConfigError(fmt::format("{}: {}", kv.source, ex.what()));
  }
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, std::string source) {
  KeyValueConfig kv;
  kv.source = std::move(source);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value'", kv.source, line));
    }
    ConfigEntry e{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError(fmt::format("{}:{}: missing key", kv.source, line));
    if (e.value.empty()) {
      throw ConfigError(fmt::format("{}:{}: missing value for '{}'", kv.source, line, e.key));
    }
    kv.entries.push_back(std::move(e));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  return parse(in, path.string());
}

LinRegConfig linreg_config(const KeyValueConfig& kv) {
  LinRegConfig cfg;
  Table t;
  t["measurements"] = [&](const std::string& v) { cfg.measurements = to_int(v); };
  t["measurement_dim"] = [&](const std::string& v) {
    cfg.measurement_dim = to_int(v);
    cfg.params.residual_dim = cfg.measurement_dim;
  };
  t["state_dim"] = [&](const std::string& v) { cfg.state_dim = to_int(v); };
  t["sigma"] = [&](const std::string& v) { cfg.sigma = to_double(v); };
  t["outlier_rates"] = [&](const std::string& v) { cfg.outlier_rates = to_doubles(v); };
  t["trials"] = [&](const std::string& v) { cfg.trials = to_int(v); };
  t["outlier_max_multiple"] = [&](const std::string& v) { cfg.outlier_max_multiple = to_double(v); };
  t["methods"] = [&](const std::string& v) { cfg.methods = parse_method_list(v); };
  t["seed"] = [&](const std::string& v) { cfg.seed = to_u64(v); };
  t["threads"] = [&](const std::string& v) { cfg.threads = to_int(v); };
  add_method_keys(t, cfg.params, true);
  apply_entries(kv, t);
  validate_in(kv, [&] { cfg.validate(); });
  return cfg;
}

IcpBenchConfig icp_config(const KeyValueConfig& kv) {
  IcpBenchConfig cfg;
  SceneConfig& s = cfg.scene;
  IcpOptions& o = cfg.icp;
  std::optional<std::string> fixed;
  std::optional<std::string> moving;
  std::optional<Pose> truth;
  Table t;
  t["scene.length"] = [&](const std::string& v) { s.length = to_double(v); };
  t["scene.width"] = [&](const std::string& v) { s.width = to_double(v); };
  t["scene.height"] = [&](const std::string& v) { s.height = to_double(v); };
  t["scene.density"] = [&](const std::string& v) { s.density = to_double(v); };
  t["scene.noise"] = [&](const std::string& v) { s.noise = to_double(v); };
  t["scene.end_walls"] = [&](const std::string& v) { s.end_walls = to_bool(v); };
  t["scene.pillar_spacing"] = [&](const std::string& v) { s.pillar_spacing = to_double(v); };
  t["scene.pillar_size"] = [&](const std::string& v) { s.pillar_size = to_double(v); };
  t["scene.boxes"] = [&](const std::string& v) { s.boxes = to_int(v); };
  t["scene.spheres"] = [&](const std::string& v) { s.spheres = to_int(v); };
  t["scene.max_yaw_deg"] = [&](const std::string& v) { s.max_yaw_deg = to_double(v); };
  t["voxel"] = [&](const std::string& v) { s.voxel = to_double(v); };
  t["sigma"] = [&](const std::string& v) { s.sigma = to_double(v); };
  t["normal_neighbours"] = [&](const std::string& v) { s.normal_neighbours = to_int(v); };
  t["overlaps"] = [&](const std::string& v) { cfg.overlaps = to_doubles(v); };
  t["difficulties"] = [&](const std::string& v) {
    cfg.difficulties.clear();
    for (const auto& d : split_list(v)) cfg.difficulties.push_back(parse_difficulty(d));
  };
  t["trials"] = [&](const std::string& v) { cfg.trials = to_int(v); };
  t["methods"] = [&](const std::string& v) { cfg.methods = parse_method_list(v); };
  t["seed"] = [&](const std::string& v) { cfg.seed = to_u64(v); };
  t["threads"] = [&](const std::string& v) { cfg.threads = to_int(v); };
  t["max_iterations"] = [&](const std::string& v) { o.max_iterations = to_int(v); };
  t["rotation_tolerance"] = [&](const std::string& v) { o.rotation_tolerance = to_double(v); };
  t["translation_tolerance"] = [&](const std::string& v) { o.translation_tolerance = to_double(v); };
  t["max_correspondence_distance"] = [&](const std::string& v) {
    o.max_correspondence_distance = to_double(v);
  };
  t["tau_percentile"] = [&](const std::string& v) { o.tau_percentile = to_double(v); };
  t["refresh_adaptive"] = [&](const std::string& v) { o.refresh_adaptive = to_bool(v); };
  t["fixed_cloud"] = [&](const std::string& v) { fixed = v; };
  t["moving_cloud"] = [&](const std::string& v) { moving = v; };
  t["truth_pose"] = [&](const std::string& v) { truth = parse_pose(to_doubles(v)); };
  add_method_keys(t, o.params, false);
  apply_entries(kv, t);

  if (fixed || moving || truth) {
    if (!fixed || !moving || !truth) {
      throw ConfigError(fmt::format(
          "{}: fixed_cloud, moving_cloud and truth_pose must be given together", kv.source));
    }
    // Relative cloud paths are taken from the config file's directory.
    const auto base = std::filesystem::path(kv.source).parent_path();
    auto resolve = [&base](const std::string& p) {
      const std::filesystem::path path(p);
      return path.is_absolute() ? path : base / path;
    };
    cfg.clouds = CloudPair{resolve(*fixed), resolve(*moving), *truth};
  }
  validate_in(kv, [&] { cfg.validate(); });
  return cfg;
}

}  // namespace agnc
