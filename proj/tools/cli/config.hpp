#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace cli {

// Bad or inconsistent configuration; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  nlohmann::json raw;  // effective config after flag overrides
  std::string hash;    // FNV-1a of the result-relevant part of raw

  std::string profile_path;
  std::optional<int> b_max;  // overrides the profile's b_max
  std::optional<double> lambda;
  std::optional<double> rho;
  double w1 = 1.0;
  double w2 = 0.0;

  // truncation; s_max absent means search the grid
  std::optional<int> s_max;
  double c_o = 100.0;
  double delta = 0.001;
  std::vector<int> smax_grid;

  double epsilon = 0.01;
  long long iter_max = 10000;
  double eta_fraction = 0.99;

  std::vector<double> sweep_rho;
  std::vector<double> sweep_w2;

  std::vector<std::string> compare_policies;

  double epsilon0 = 0.1;
  std::uint64_t qlearn_iterations = 1'000'000;
  std::vector<std::uint64_t> qlearn_snapshots;
  std::uint64_t qlearn_snapshot_every = 0;
  double min_mass = 1e-4;

  double sim_arrivals = 1e6;  // horizon = arrivals / lambda
  int replications = 0;       // 0 disables simulation in compare
  double warmup_fraction = 0.05;
  std::string sim_policy = "rvi";

  std::vector<double> study_c_o;
  bool study_full_grid = false;

  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::string out_dir = "out";
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<unsigned> jobs;
  std::optional<double> rho;
  std::optional<double> lambda;
  std::optional<double> w1;
  std::optional<double> w2;
  std::optional<int> s_max;
  std::optional<double> c_o;
};

RunConfig load_config(const std::string& path, const Overrides& overrides);
RunConfig parse_config(const nlohmann::json& doc, const std::string& base_dir, const Overrides& overrides);

std::uint64_t fnv1a(const std::string& text);

}  // namespace cli
