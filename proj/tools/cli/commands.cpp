#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "handles.hpp"
#include "output.hpp"

namespace cli {

using nlohmann::json;

namespace {

// Runs fn(0..count-1) on up to `jobs` threads; rethrows the first failure by index.
template <class Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  const auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::mutex m;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        while (true) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(m);
            if (next == count) return;
            i = next++;
          }
          run(i);
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string path_in(const RunConfig& c, const std::string& name) { return c.out_dir + "/" + name; }

Profile open_profile(const RunConfig& c) {
  auto p = make<Profile>([&](bq_profile** o) { return bq_profile_load(c.profile_path.c_str(), o); });
  if (!c.b_max) return p;
  bq_profile_params params;
  check(bq_profile_get_params(p.get(), &params));
  params.b_max = *c.b_max;
  return make<Profile>([&](bq_profile** o) { return bq_profile_create(&params, o); });
}

int b_max_of(const bq_profile* p) {
  bq_profile_params params;
  check(bq_profile_get_params(p, &params));
  return params.b_max;
}

double lambda_for_rho(const bq_profile* p, double rho) {
  double lambda = 0.0;
  check(bq_profile_lambda_for_rho(p, rho, &lambda));
  return lambda;
}

// The single operating point of solve/qlearn/simulate/truncation-study.
double point_lambda(const RunConfig& c, const bq_profile* p) {
  if (c.lambda) return *c.lambda;
  if (c.rho) return lambda_for_rho(p, *c.rho);
  throw ConfigError("give exactly one of lambda and rho");
}

bq_solve_options solve_options(const RunConfig& c) {
  bq_solve_options o;
  bq_solve_options_default(&o);
  o.epsilon = c.epsilon;
  o.iter_max = c.iter_max;
  o.eta_fraction = c.eta_fraction;
  return o;
}

std::vector<int> smax_grid(const RunConfig& c, int b_max) {
  if (!c.smax_grid.empty()) return c.smax_grid;
  std::vector<int> grid;
  for (int s = b_max; s <= 400; ++s) grid.push_back(s);
  return grid;
}

json record_json(const bq_smax_record& r) {
  return json{{"s_max", r.s_max},
              {"g_pi", r.g_pi},
              {"delta_pi", r.delta_pi},
              {"iterations", r.iterations},
              {"converged", r.converged != 0},
              {"space_complexity", r.space_complexity},
              {"time_complexity", r.time_complexity},
              {"acceptable", r.acceptable != 0},
              {"control_limit", r.control_limit < 0 ? json(nullptr) : json(r.control_limit)}};
}

struct Search {
  bq_status status = BQ_OK;
  int s_max = 0;
  std::vector<bq_smax_record> records;
};

Search search_smax(const bq_profile* p, const RunConfig& c, double lambda, double w1, double w2, double c_o,
                   bool stop_at_first, unsigned jobs) {
  const auto grid = smax_grid(c, b_max_of(p));
  bq_smax_options o;
  o.c_o = c_o;
  o.delta = c.delta;
  o.solve = solve_options(c);
  o.grid = grid.data();
  o.grid_len = grid.size();
  o.stop_at_first = stop_at_first ? 1 : 0;
  o.jobs = jobs;
  Search s;
  s.records.resize(grid.size());
  std::size_t count = 0;
  s.status = bq_find_min_smax(p, lambda, w1, w2, &o, &s.s_max, s.records.data(), s.records.size(), &count);
  if (s.status != BQ_OK && s.status != BQ_ERR_EXHAUSTED) check(s.status);
  s.records.resize(count);
  return s;
}

struct Solved {
  Model model;
  int s_max = 0;
  Policy policy;
  bq_solve_report report{};
  bq_eval_report eval{};
  std::vector<double> mu;
  std::vector<bq_smax_record> search;  // empty when s_max was fixed
};

Model build_model(const bq_profile* p, double lambda, double w1, double w2, int s_max, double c_o) {
  const bq_model_params mp{lambda, w1, w2, s_max, c_o};
  return make<Model>([&](bq_model** o) { return bq_model_build(p, &mp, o); });
}

Solved solve_point(const bq_profile* p, const RunConfig& c, double lambda, double w1, double w2, unsigned jobs) {
  Solved r;
  if (c.s_max) {
    r.s_max = *c.s_max;
  } else {
    auto s = search_smax(p, c, lambda, w1, w2, c.c_o, true, jobs);
    if (s.status == BQ_ERR_EXHAUSTED)
      throw ApiError(s.status, "no s_max on the grid meets delta = " + num(c.delta));
    r.s_max = s.s_max;
    r.search = std::move(s.records);
  }
  r.model = build_model(p, lambda, w1, w2, r.s_max, c.c_o);
  const auto opts = solve_options(c);
  r.policy = make<Policy>([&](bq_policy** o) { return bq_solve(r.model.get(), &opts, o, &r.report, nullptr, 0); });
  r.mu.resize(bq_model_num_states(r.model.get()));
  check(bq_evaluate(r.policy.get(), r.model.get(), c.delta, &r.eval, r.mu.data(), r.mu.size()));
  return r;
}

std::optional<int> control_limit(const bq_policy* policy) {
  int limit = 0, found = 0;
  check(bq_policy_detect_control_limit(policy, &limit, &found));
  return found ? std::optional<int>(limit) : std::nullopt;
}

std::optional<int> first_serving_state(const std::vector<int>& actions) {
  for (std::size_t s = 0; s < actions.size(); ++s)
    if (actions[s] > 0) return static_cast<int>(s);
  return std::nullopt;
}

std::string opt(const std::optional<int>& v) { return v ? std::to_string(*v) : "none"; }

json eval_json(const bq_eval_report& e, double delta) {
  return json{{"g_pi", e.g_pi},
              {"delta_pi", e.delta_pi},
              {"delta", delta},
              {"acceptable", e.acceptable != 0},
              {"mean_sojourn", e.mean_sojourn},
              {"avg_queue_len", e.avg_queue_len},
              {"avg_response_time", e.avg_response_time},
              {"avg_power", e.avg_power},
              {"energy_efficiency", e.energy_efficiency}};
}

Csv policy_csv(const RunConfig& c, const std::vector<int>& actions) {
  Csv csv(c.hash, {"s", "action"});
  for (std::size_t s = 0; s < actions.size(); ++s) csv.row({std::to_string(s), std::to_string(actions[s])});
  return csv;
}

json sim_json(const bq_sim_report& r, double w1, double w2, double lambda) {
  return json{{"seed", r.seed},
              {"horizon", r.horizon},
              {"window", r.window},
              {"avg_queue_len", r.avg_queue_len},
              {"avg_response_time", r.avg_response_time},
              {"avg_power", r.avg_power},
              {"energy_per_task", r.energy_per_task},
              {"throughput", r.throughput},
              {"arrival_rate", r.arrival_rate},
              {"weighted_cost_rate", bq_weighted_cost(&r, w1, w2, lambda)},
              {"n_arrivals", r.n_arrivals},
              {"n_served", r.n_served},
              {"queue_at_horizon", r.queue_at_horizon},
              {"in_service_at_horizon", r.in_service_at_horizon}};
}

bq_sim_options sim_options(const RunConfig& c, double lambda) {
  bq_sim_options o;
  bq_sim_options_default(&o);
  o.horizon = c.sim_arrivals / lambda;
  o.seed = c.seed;
  o.warmup_fraction = c.warmup_fraction;
  return o;
}

// Benchmark policy by name: work_conserving, max, static:<b>, control_limit:<l>.
struct Benchmark {
  std::string name;
  Policy policy;
  bool stable = true;
};

Benchmark make_benchmark(const std::string& spec, const bq_profile* p, double lambda, int s_max) {
  const int b_max = b_max_of(p);
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  int arg = 0;
  if (colon != std::string::npos) {
    try {
      arg = std::stoi(spec.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad policy spec '" + spec + "'");
    }
  }
  Benchmark b;
  b.name = spec;
  if (kind == "work_conserving") {
    b.policy = make<Policy>([&](bq_policy** o) { return bq_policy_work_conserving(b_max, s_max, o); });
  } else if (kind == "max" || kind == "static") {
    const int size = kind == "max" ? b_max : arg;
    b.policy = make<Policy>([&](bq_policy** o) { return bq_policy_static(size, b_max, s_max, o); });
    bq_batch_metrics m;
    check(bq_profile_metrics(p, size, &m));
    b.stable = lambda < m.throughput;
  } else if (kind == "control_limit") {
    b.policy = make<Policy>([&](bq_policy** o) { return bq_policy_control_limit(arg, b_max, s_max, o); });
  } else {
    throw ConfigError("unknown policy '" + spec + "'");
  }
  return b;
}

std::vector<std::uint64_t> snapshot_grid(const RunConfig& c) {
  if (!c.qlearn_snapshots.empty()) return c.qlearn_snapshots;
  std::vector<std::uint64_t> grid;
  for (std::uint64_t n = 10000; n <= c.qlearn_iterations; n *= 10) grid.push_back(n);
  if (grid.empty() || grid.back() != c.qlearn_iterations) grid.push_back(c.qlearn_iterations);
  return grid;
}

struct GridPoint {
  double rho;
  double w2;
};

std::vector<GridPoint> grid_points(const RunConfig& c, const char* command) {
  if (c.sweep_rho.empty() || c.sweep_w2.empty())
    throw ConfigError(std::string(command) + " needs nonempty rho and w2 grids");
  std::vector<GridPoint> pts;
  for (double rho : c.sweep_rho)
    for (double w2 : c.sweep_w2) pts.push_back({rho, w2});
  return pts;
}

}  // namespace

// ---- solve --------------------------------------------------------------------

int cmd_solve(const RunConfig& c, const std::string& dump_model) {
  const auto profile = open_profile(c);
  const double lambda = point_lambda(c, profile.get());
  auto r = solve_point(profile.get(), c, lambda, c.w1, c.w2, c.jobs);
  const int b_max = b_max_of(profile.get());
  const auto actions = actions_of(r.policy.get());
  const auto limit = control_limit(r.policy.get());

  json solve{{"config_hash", c.hash},
             {"lambda", lambda},
             {"w1", c.w1},
             {"w2", c.w2},
             {"s_max", r.s_max},
             {"c_o", c.c_o},
             {"epsilon", c.epsilon},
             {"iter_max", c.iter_max},
             {"eta", r.report.eta},
             {"g", r.report.g},
             {"iterations", r.report.iterations},
             {"final_span", r.report.final_span},
             {"converged", r.report.converged != 0},
             {"multiplications_per_iteration", r.report.multiplications_per_iteration},
             {"space_complexity", static_cast<double>(b_max) * r.s_max},
             {"time_complexity", static_cast<double>(r.report.iterations) * b_max * r.s_max * r.s_max},
             {"control_limit", limit ? json(*limit) : json(nullptr)}};
  if (c.rho) solve["rho"] = *c.rho;
  if (!r.search.empty()) {
    solve["smax_search"] = json::array();
    for (const auto& rec : r.search) solve["smax_search"].push_back(record_json(rec));
  }
  json eval = eval_json(r.eval, c.delta);
  eval["config_hash"] = c.hash;

  write_atomic(path_in(c, "policy.csv"), policy_csv(c, actions).text());
  write_atomic(path_in(c, "solve.json"), json_text(solve));
  write_atomic(path_in(c, "eval.json"), json_text(eval));

  if (!dump_model.empty()) {
    Csv csv(c.hash, {"s", "a", "y", "c", "lump_to_So"});
    const auto n = bq_model_num_states(r.model.get());
    for (std::size_t s = 0; s < n; ++s)
      for (int a = 0; a <= bq_model_max_action(r.model.get(), s); ++a) {
        bq_pair_info info;
        check(bq_model_pair(r.model.get(), s, a, &info));
        csv.row({std::to_string(s), std::to_string(a), num(info.sojourn), num(info.cost), num(info.overflow_mass)});
      }
    write_atomic(dump_model, csv.text());
  }

  std::printf("s_max=%d g=%.6f iterations=%lld delta_pi=%.3e %s\n", r.s_max, r.eval.g_pi,
              static_cast<long long>(r.report.iterations), r.eval.delta_pi,
              r.eval.acceptable ? "acceptable" : "UNACCEPTABLE");
  return r.eval.acceptable ? kOk : kUnacceptable;
}

// ---- sweep ----------------------------------------------------------------------

int cmd_sweep(const RunConfig& c) {
  const auto profile = open_profile(c);
  const auto pts = grid_points(c, "sweep");

  struct Result {
    std::string error;
    int s_max = 0;
    bq_eval_report eval{};
    std::vector<int> actions;
    std::optional<int> limit;
  };
  std::vector<Result> results(pts.size());
  parallel_for(pts.size(), c.jobs, [&](std::size_t i) {
    auto& out = results[i];
    try {
      const double lambda = lambda_for_rho(profile.get(), pts[i].rho);
      auto r = solve_point(profile.get(), c, lambda, c.w1, pts[i].w2, 1);
      out.s_max = r.s_max;
      out.eval = r.eval;
      out.actions = actions_of(r.policy.get());
      out.limit = control_limit(r.policy.get());
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  Csv tradeoff(c.hash, {"rho", "w1", "w2", "s_max", "g", "avg_response_time", "avg_power", "energy_efficiency",
                        "delta_pi", "acceptable", "control_limit", "first_serving_state", "status"});
  Csv chart(c.hash, {"rho", "w1", "w2", "s", "action"});
  int failures = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& r = results[i];
    const std::string rho = num(pts[i].rho), w1 = num(c.w1), w2 = num(pts[i].w2);
    if (!r.error.empty()) {
      ++failures;
      tradeoff.row({rho, w1, w2, "", "", "", "", "", "", "", "", "", r.error});
      continue;
    }
    tradeoff.row({rho, w1, w2, std::to_string(r.s_max), num(r.eval.g_pi), num(r.eval.avg_response_time),
                  num(r.eval.avg_power), num(r.eval.energy_efficiency), num(r.eval.delta_pi),
                  r.eval.acceptable ? "1" : "0", opt(r.limit), opt(first_serving_state(r.actions)), "ok"});
    for (std::size_t s = 0; s < r.actions.size(); ++s)
      chart.row({rho, w1, w2, std::to_string(s), std::to_string(r.actions[s])});
  }
  write_atomic(path_in(c, "tradeoff.csv"), tradeoff.text());
  write_atomic(path_in(c, "policies.csv"), chart.text());
  std::printf("sweep: %zu points, %d failed\n", pts.size(), failures);
  return kOk;
}

// ---- compare ----------------------------------------------------------------------

int cmd_compare(const RunConfig& c) {
  const auto profile = open_profile(c);
  const auto pts = grid_points(c, "compare");
  std::vector<std::string> specs = c.compare_policies;
  if (specs.empty()) {
    specs = {"work_conserving", "max"};
    for (int b = 1; b < b_max_of(profile.get()); b *= 2) specs.push_back("static:" + std::to_string(b));
  }

  struct Row {
    std::string policy;
    bool stable = true;
    bq_eval_report eval{};
    std::optional<double> sim_mean, sim_se;
    std::string error;
    bool beats = false;
  };
  std::vector<std::vector<Row>> rows(pts.size());
  std::vector<std::string> point_error(pts.size());

  parallel_for(pts.size(), c.jobs, [&](std::size_t i) {
    try {
      const double lambda = lambda_for_rho(profile.get(), pts[i].rho);
      auto r = solve_point(profile.get(), c, lambda, c.w1, pts[i].w2, 1);
      std::vector<std::pair<std::string, Policy>> todo;
      std::vector<bool> stable;
      todo.emplace_back("rvi", std::move(r.policy));
      stable.push_back(true);
      for (const auto& spec : specs) {
        auto b = make_benchmark(spec, profile.get(), lambda, r.s_max);
        todo.emplace_back(b.name, std::move(b.policy));
        stable.push_back(b.stable);
      }
      for (std::size_t k = 0; k < todo.size(); ++k) {
        Row row;
        row.policy = todo[k].first;
        row.stable = stable[k];
        if (row.stable) {
          try {
            check(bq_evaluate(todo[k].second.get(), r.model.get(), c.delta, &row.eval, nullptr, 0));
            if (c.replications > 0) {
              const auto so = sim_options(c, lambda);
              double mean = 0.0, se = 0.0;
              check(bq_replicate(profile.get(), lambda, todo[k].second.get(), c.w1, pts[i].w2, &so,
                                 c.replications, 1, &mean, &se, nullptr, nullptr, 0));
              row.sim_mean = mean;
              row.sim_se = se;
            }
          } catch (const std::exception& e) {
            row.error = e.what();
          }
        }
        rows[i].push_back(std::move(row));
      }
      const double g_rvi = rows[i][0].eval.g_pi;
      const double tol = c.epsilon;  // RVI stops within epsilon of the optimal rate
      for (std::size_t k = 1; k < rows[i].size(); ++k) {
        auto& row = rows[i][k];
        row.beats = row.stable && row.error.empty() && row.eval.g_pi < g_rvi - tol;
      }
    } catch (const std::exception& e) {
      point_error[i] = e.what();
    }
  });

  Csv csv(c.hash, {"rho", "w1", "w2", "policy", "stable", "g_pi", "delta_pi", "sim_cost", "sim_stderr",
                   "beats_rvi", "status"});
  int violations = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::string rho = num(pts[i].rho), w1 = num(c.w1), w2 = num(pts[i].w2);
    if (!point_error[i].empty()) {
      csv.row({rho, w1, w2, "rvi", "", "", "", "", "", "", point_error[i]});
      continue;
    }
    for (const auto& row : rows[i]) {
      if (!row.stable) {
        csv.row({rho, w1, w2, row.policy, "0", "", "", "", "", "0", "unstable"});
        continue;
      }
      if (!row.error.empty()) {
        csv.row({rho, w1, w2, row.policy, "1", "", "", "", "", "0", row.error});
        continue;
      }
      if (row.beats) {
        ++violations;
        std::fprintf(stderr, "benchmark %s beats the solved policy at rho=%s w2=%s\n", row.policy.c_str(),
                     rho.c_str(), w2.c_str());
      }
      csv.row({rho, w1, w2, row.policy, "1", num(row.eval.g_pi), num(row.eval.delta_pi),
               row.sim_mean ? num(*row.sim_mean) : "", row.sim_se ? num(*row.sim_se) : "", row.beats ? "1" : "0",
               "ok"});
    }
  }
  write_atomic(path_in(c, "comparison.csv"), csv.text());
  std::printf("compare: %zu points, %d dominance violations\n", pts.size(), violations);
  return violations == 0 ? kOk : kUnacceptable;
}

// ---- qlearn -------------------------------------------------------------------------

int cmd_qlearn(const RunConfig& c) {
  const auto profile = open_profile(c);
  const double lambda = point_lambda(c, profile.get());
  auto r = solve_point(profile.get(), c, lambda, c.w1, c.w2, c.jobs);

  const auto grid = snapshot_grid(c);
  bq_qlearn_config q;
  bq_qlearn_config_default(&q);
  q.epsilon0 = c.epsilon0;
  q.iterations = c.qlearn_iterations;
  q.seed = c.seed;
  q.snapshot_every = c.qlearn_snapshot_every;
  q.snapshot_at = grid.data();
  q.snapshot_at_len = grid.size();
  q.eta_fraction = c.eta_fraction;

  struct Snap {
    std::uint64_t iteration;
    std::vector<int> actions;
  };
  std::vector<Snap> snaps;
  const auto collect = [](void* user, std::uint64_t it, const int* a, std::size_t n) {
    static_cast<std::vector<Snap>*>(user)->push_back(Snap{it, std::vector<int>(a, a + n)});
  };
  auto learned = make<Policy>([&](bq_policy** o) { return bq_qlearn_train(r.model.get(), &q, collect, &snaps, o); });

  const int b_max = b_max_of(profile.get());
  std::vector<double> high(r.mu.size());
  for (std::size_t s = 0; s < r.mu.size(); ++s) high[s] = r.mu[s] >= c.min_mass ? 1.0 : 0.0;

  Csv snap_csv(c.hash, {"iteration", "state", "action"});
  Csv agree_csv(c.hash, {"iteration", "agreement", "agreement_high_mass", "agreement_weighted"});
  json summary{{"config_hash", c.hash}, {"lambda", lambda}, {"s_max", r.s_max}, {"min_mass", c.min_mass}};
  summary["high_mass_states"] = std::count(high.begin(), high.end(), 1.0);
  summary["snapshots"] = json::array();
  double previous = -1.0;
  bool monotone = true;
  for (const auto& s : snaps) {
    for (std::size_t st = 0; st < s.actions.size(); ++st)
      snap_csv.row({std::to_string(s.iteration), std::to_string(st), std::to_string(s.actions[st])});
    auto p = make<Policy>([&](bq_policy** o) { return bq_policy_from_actions(b_max, s.actions.data(), s.actions.size(), o); });
    double all = 0.0, hm = 0.0, weighted = 0.0;
    check(bq_policy_agreement(p.get(), r.policy.get(), nullptr, 0, &all));
    check(bq_policy_agreement(p.get(), r.policy.get(), high.data(), high.size(), &hm));
    check(bq_policy_agreement(p.get(), r.policy.get(), r.mu.data(), r.mu.size(), &weighted));
    agree_csv.row({std::to_string(s.iteration), num(all), num(hm), num(weighted)});
    summary["snapshots"].push_back({{"iteration", s.iteration}, {"agreement_high_mass", hm}});
    if (hm < previous) monotone = false;
    previous = hm;
  }
  summary["monotone"] = monotone;
  summary["final_agreement_high_mass"] = previous;

  write_atomic(path_in(c, "rvi_policy.csv"), policy_csv(c, actions_of(r.policy.get())).text());
  write_atomic(path_in(c, "qlearn_policy.csv"), policy_csv(c, actions_of(learned.get())).text());
  write_atomic(path_in(c, "snapshots.csv"), snap_csv.text());
  write_atomic(path_in(c, "agreement.csv"), agree_csv.text());
  write_atomic(path_in(c, "qlearn.json"), json_text(summary));
  std::printf("qlearn: %zu snapshots, final high-mass agreement %.4f%s\n", snaps.size(), previous,
              monotone ? "" : " (not monotone)");
  return kOk;
}

// ---- truncation study ---------------------------------------------------------------------

int cmd_truncation_study(const RunConfig& c) {
  const auto profile = open_profile(c);
  const double lambda = point_lambda(c, profile.get());
  const int b_max = b_max_of(profile.get());
  const auto costs = c.study_c_o.empty() ? std::vector<double>{100.0, 10.0, 1.0, 0.0} : c.study_c_o;

  Csv table(c.hash, {"c_o", "s_max", "iterations", "converged", "space_complexity", "time_complexity", "delta_pi",
                     "g_pi", "status"});
  Csv records(c.hash, {"c_o", "s_max", "g_pi", "delta_pi", "iterations", "converged", "acceptable", "control_limit"});
  for (double c_o : costs) {
    const auto s = search_smax(profile.get(), c, lambda, c.w1, c.w2, c_o, !c.study_full_grid, c.jobs);
    for (const auto& r : s.records)
      records.row({num(c_o), std::to_string(r.s_max), num(r.g_pi), num(r.delta_pi), std::to_string(r.iterations),
                   r.converged ? "1" : "0", r.acceptable ? "1" : "0",
                   r.control_limit < 0 ? "none" : std::to_string(r.control_limit)});
    if (s.status == BQ_ERR_EXHAUSTED) {
      table.row({num(c_o), "", "", "", "", "", "", "", "exhausted"});
      std::printf("c_o=%g: grid exhausted\n", c_o);
      continue;
    }
    const auto it = std::find_if(s.records.begin(), s.records.end(),
                                 [&](const bq_smax_record& r) { return r.s_max == s.s_max; });
    const auto& r = *it;
    table.row({num(c_o), std::to_string(r.s_max), std::to_string(r.iterations), r.converged ? "1" : "0",
               num(static_cast<double>(b_max) * r.s_max), num(r.time_complexity), num(r.delta_pi), num(r.g_pi),
               "ok"});
    std::printf("c_o=%g: s_max=%d iterations=%lld g=%.6f delta=%.3e\n", c_o, r.s_max,
                static_cast<long long>(r.iterations), r.g_pi, r.delta_pi);
  }
  write_atomic(path_in(c, "table1.csv"), table.text());
  write_atomic(path_in(c, "truncation_records.csv"), records.text());
  return kOk;
}

// ---- simulate -----------------------------------------------------------------------------

int cmd_simulate(const RunConfig& c) {
  const auto profile = open_profile(c);
  const double lambda = point_lambda(c, profile.get());
  const int b_max = b_max_of(profile.get());

  Policy policy;
  std::optional<bq_eval_report> analytic;
  const auto& spec = c.sim_policy;
  if (spec == "rvi") {
    auto r = solve_point(profile.get(), c, lambda, c.w1, c.w2, c.jobs);
    analytic = r.eval;
    policy = std::move(r.policy);
  } else if (spec.rfind("file:", 0) == 0) {
    const auto path = spec.substr(5);
    policy = make<Policy>([&](bq_policy** o) { return bq_policy_load(path.c_str(), b_max, o); });
  } else {
    int s_max = c.s_max.value_or(b_max);
    if (spec.rfind("control_limit:", 0) == 0) s_max = std::max(s_max, std::atoi(spec.c_str() + 14));
    auto b = make_benchmark(spec, profile.get(), lambda, s_max);
    if (!b.stable) std::fprintf(stderr, "warning: %s is unstable at this load\n", spec.c_str());
    policy = std::move(b.policy);
  }

  const int reps = std::max(1, c.replications);
  const auto so = sim_options(c, lambda);
  std::vector<bq_sim_report> reports(static_cast<std::size_t>(reps));
  std::vector<std::int64_t> hist(static_cast<std::size_t>(b_max) + 1);
  double mean = 0.0, se = 0.0;
  check(bq_replicate(profile.get(), lambda, policy.get(), c.w1, c.w2, &so, reps, c.jobs, &mean, &se,
                     reports.data(), hist.data(), hist.size()));

  json out{{"config_hash", c.hash}, {"policy", spec},       {"lambda", lambda},
           {"w1", c.w1},           {"w2", c.w2},           {"arrivals_per_run", c.sim_arrivals},
           {"replications", reps}, {"mean_cost", mean},    {"stderr_cost", se}};
  if (analytic) out["analytic_g_pi"] = analytic->g_pi;
  out["runs"] = json::array();
  for (const auto& r : reports) out["runs"].push_back(sim_json(r, c.w1, c.w2, lambda));
  Csv h(c.hash, {"batch", "count"});
  for (std::size_t b = 0; b < hist.size(); ++b) h.row({std::to_string(b), std::to_string(hist[b])});
  write_atomic(path_in(c, "sim.json"), json_text(out));
  write_atomic(path_in(c, "histogram.csv"), h.text());
  std::printf("simulate: cost %.6f +- %.6f over %d run(s)", mean, se, reps);
  if (analytic) std::printf(", analytic %.6f", analytic->g_pi);
  std::printf("\n");
  return kOk;
}

// ---- profile / fit ----------------------------------------------------------------------------

int cmd_profile(const RunConfig& c) {
  const auto profile = open_profile(c);
  Csv csv(c.hash, {"b", "latency_ms", "energy_mJ", "throughput", "energy_efficiency"});
  for (int b = 1; b <= b_max_of(profile.get()); ++b) {
    bq_batch_metrics m;
    check(bq_profile_metrics(profile.get(), b, &m));
    csv.row({std::to_string(b), num(m.latency), num(m.energy), num(m.throughput), num(b / m.energy)});
  }
  write_atomic(path_in(c, "profile.csv"), csv.text());
  bq_batch_metrics top;
  check(bq_profile_metrics(profile.get(), b_max_of(profile.get()), &top));
  std::printf("max throughput %.4f requests/ms\n", top.throughput);
  return kOk;
}

int cmd_fit(const std::string& samples, int b_max, const std::string& out_dir) {
  std::ifstream f(samples);
  if (!f) throw ConfigError("cannot open " + samples);
  std::vector<int> batch;
  std::vector<double> lat, en;
  std::string line;
  bool header = true;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.find_first_not_of("0123456789.,-+eE \t\r") != std::string::npos) continue;
    }
    std::stringstream ss(line);
    std::string a, b, e;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, e, ','))
      throw ConfigError("samples need batch,latency_ms,energy_mJ columns: " + line);
    try {
      batch.push_back(std::stoi(a));
      lat.push_back(std::stod(b));
      en.push_back(std::stod(e));
    } catch (const std::exception&) {
      throw ConfigError("bad sample row: " + line);
    }
  }
  bq_line_fit lf, ef;
  auto p = make<Profile>(
      [&](bq_profile** o) { return bq_profile_fit(batch.data(), lat.data(), en.data(), batch.size(), b_max, o, &lf, &ef); });
  const auto fit_json = [](const bq_line_fit& x) {
    return json{{"slope", x.slope}, {"intercept", x.intercept}, {"rmse", x.rmse}, {"intercept_clamped", x.intercept_clamped != 0}};
  };
  for (const auto& [name, x] : {std::pair{"latency", lf}, std::pair{"energy", ef}})
    if (x.intercept_clamped) std::fprintf(stderr, "warning: negative %s intercept clamped to 0\n", name);
  const std::string profile_path = out_dir + "/profile.json";
  write_atomic(out_dir + "/fit.json", json_text(json{{"samples", batch.size()}, {"latency", fit_json(lf)}, {"energy", fit_json(ef)}}));
  const std::string tmp = profile_path + ".tmp";
  check(bq_profile_save(p.get(), tmp.c_str()));
  std::filesystem::rename(tmp, profile_path);
  std::printf("alpha=%.6g tau0=%.6g beta=%.6g zeta0=%.6g\n", lf.slope, lf.intercept, ef.slope, ef.intercept);
  return kOk;
}

}  // namespace cli
