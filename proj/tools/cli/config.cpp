#include "config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

void only_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

std::vector<int> parse_grid(const json& g, const std::string& where) {
  std::vector<int> grid;
  if (g.is_array()) {
    for (const auto& v : g) grid.push_back(v.get<int>());
  } else if (g.is_object()) {
    only_keys(g, where, {"from", "to", "step"});
    const int from = get<int>(g, "from", 0, where);
    const int to = get<int>(g, "to", 0, where);
    const int step = get<int>(g, "step", 1, where);
    if (step < 1 || to < from) throw ConfigError(where + " needs from <= to and step >= 1");
    for (int s = from; s <= to; s += step) grid.push_back(s);
  } else {
    throw ConfigError(where + " must be a list or {from, to, step}");
  }
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw ConfigError(where + " must be strictly increasing");
  return grid;
}

std::vector<double> doubles(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return {};
  try {
    return obj.at(key).get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " must be a list of numbers");
  }
}

}  // namespace

RunConfig parse_config(const json& doc_in, const std::string& base_dir, const Overrides& ov) {
  json doc = doc_in;
  only_keys(doc, "config",
            {"profile", "b_max", "lambda", "rho", "weights", "truncation", "solver", "sweep", "compare",
             "qlearn", "simulation", "truncation_study", "seed", "jobs", "out_dir"});

  // Flags win over file fields.
  if (ov.rho) {
    doc["rho"] = *ov.rho;
    doc.erase("lambda");
  }
  if (ov.lambda) {
    doc["lambda"] = *ov.lambda;
    doc.erase("rho");
  }
  if (ov.w1) doc["weights"]["w1"] = *ov.w1;
  if (ov.w2) doc["weights"]["w2"] = *ov.w2;
  if (ov.s_max) doc["truncation"]["s_max"] = *ov.s_max;
  if (ov.c_o) doc["truncation"]["c_o"] = *ov.c_o;
  if (ov.seed) doc["seed"] = *ov.seed;
  if (ov.jobs) doc["jobs"] = *ov.jobs;
  if (ov.out_dir) doc["out_dir"] = *ov.out_dir;

  RunConfig c;
  c.raw = doc;

  if (!doc.contains("profile")) throw ConfigError("config.profile is required");
  fs::path profile = get<std::string>(doc, "profile", "", "config");
  if (profile.is_relative()) profile = fs::path(base_dir) / profile;
  c.profile_path = profile.lexically_normal().string();
  if (doc.contains("b_max")) c.b_max = get<int>(doc, "b_max", 0, "config");

  if (doc.contains("lambda") && doc.contains("rho")) throw ConfigError("give exactly one of lambda and rho");
  if (doc.contains("lambda")) c.lambda = get<double>(doc, "lambda", 0.0, "config");
  if (doc.contains("rho")) c.rho = get<double>(doc, "rho", 0.0, "config");

  if (doc.contains("weights")) {
    const auto& w = doc["weights"];
    only_keys(w, "weights", {"w1", "w2"});
    c.w1 = get<double>(w, "w1", c.w1, "weights");
    c.w2 = get<double>(w, "w2", c.w2, "weights");
  }

  if (doc.contains("truncation")) {
    const auto& t = doc["truncation"];
    only_keys(t, "truncation", {"s_max", "c_o", "delta", "grid"});
    if (t.contains("s_max") && !(t["s_max"].is_string() && t["s_max"] == "auto"))
      c.s_max = get<int>(t, "s_max", 0, "truncation");
    c.c_o = get<double>(t, "c_o", c.c_o, "truncation");
    c.delta = get<double>(t, "delta", c.delta, "truncation");
    if (t.contains("grid")) c.smax_grid = parse_grid(t["grid"], "truncation.grid");
  }

  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    only_keys(s, "solver", {"epsilon", "iter_max", "eta_fraction"});
    c.epsilon = get<double>(s, "epsilon", c.epsilon, "solver");
    c.iter_max = get<long long>(s, "iter_max", c.iter_max, "solver");
    c.eta_fraction = get<double>(s, "eta_fraction", c.eta_fraction, "solver");
  }

  if (doc.contains("sweep")) {
    const auto& s = doc["sweep"];
    only_keys(s, "sweep", {"rho", "w2"});
    c.sweep_rho = doubles(s, "rho", "sweep");
    c.sweep_w2 = doubles(s, "w2", "sweep");
  }

  if (doc.contains("compare")) {
    const auto& s = doc["compare"];
    only_keys(s, "compare", {"rho", "w2", "policies"});
    c.sweep_rho = s.contains("rho") ? doubles(s, "rho", "compare") : c.sweep_rho;
    c.sweep_w2 = s.contains("w2") ? doubles(s, "w2", "compare") : c.sweep_w2;
    c.compare_policies = get<std::vector<std::string>>(s, "policies", {}, "compare");
  }

  if (doc.contains("qlearn")) {
    const auto& q = doc["qlearn"];
    only_keys(q, "qlearn", {"epsilon0", "iterations", "snapshots", "snapshot_every", "min_mass"});
    c.epsilon0 = get<double>(q, "epsilon0", c.epsilon0, "qlearn");
    c.qlearn_iterations = get<std::uint64_t>(q, "iterations", c.qlearn_iterations, "qlearn");
    c.qlearn_snapshots = get<std::vector<std::uint64_t>>(q, "snapshots", {}, "qlearn");
    c.qlearn_snapshot_every = get<std::uint64_t>(q, "snapshot_every", 0, "qlearn");
    c.min_mass = get<double>(q, "min_mass", c.min_mass, "qlearn");
  }

  if (doc.contains("simulation")) {
    const auto& s = doc["simulation"];
    only_keys(s, "simulation", {"arrivals", "replications", "warmup_fraction", "policy"});
    c.sim_arrivals = get<double>(s, "arrivals", c.sim_arrivals, "simulation");
    c.replications = get<int>(s, "replications", 1, "simulation");
    c.warmup_fraction = get<double>(s, "warmup_fraction", c.warmup_fraction, "simulation");
    c.sim_policy = get<std::string>(s, "policy", c.sim_policy, "simulation");
    if (!(c.sim_arrivals > 0.0)) throw ConfigError("simulation.arrivals must be > 0");
    if (c.replications < 0) throw ConfigError("simulation.replications must be >= 0");
  }

  if (doc.contains("truncation_study")) {
    const auto& s = doc["truncation_study"];
    only_keys(s, "truncation_study", {"c_o", "full_grid"});
    c.study_c_o = doubles(s, "c_o", "truncation_study");
    c.study_full_grid = get<bool>(s, "full_grid", false, "truncation_study");
  }

  c.seed = get<std::uint64_t>(doc, "seed", c.seed, "config");
  c.jobs = get<unsigned>(doc, "jobs", c.jobs, "config");
  if (c.jobs < 1) c.jobs = 1;
  c.out_dir = get<std::string>(doc, "out_dir", c.out_dir, "config");

  // Output location and thread count do not change results.
  json hashed = doc;
  hashed.erase("out_dir");
  hashed.erase("jobs");
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(hashed.dump())));
  c.hash = hex;
  return c;
}

RunConfig load_config(const std::string& path, const Overrides& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  const auto base = fs::path(path).parent_path().string();
  return parse_config(doc, base.empty() ? "." : base, overrides);
}

}  // namespace cli
