#pragma once

#include <string>

#include "config.hpp"

namespace cli {

// Exit codes.
constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kUnacceptable = 2;  // overflow share >= delta, or a benchmark beat the solver

int cmd_solve(const RunConfig& config, const std::string& dump_model);
int cmd_sweep(const RunConfig& config);
int cmd_compare(const RunConfig& config);
int cmd_qlearn(const RunConfig& config);
int cmd_truncation_study(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_profile(const RunConfig& config);
int cmd_fit(const std::string& samples, int b_max, const std::string& out_dir);

}  // namespace cli
