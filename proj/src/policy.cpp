#include "batchq/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "batchq/error.hpp"

namespace batchq {

namespace {

int max_feasible(const Policy& p, std::size_t s) {
  if (s == p.overflow()) return p.b_max;
  return std::min(static_cast<int>(s), p.b_max);
}

void check_shape(int b_max, int s_max) {
  if (b_max < 1) throw Error(ErrorKind::domain, "policy: b_max must be >= 1");
  if (s_max < b_max) throw Error(ErrorKind::domain, "policy: s_max must be >= b_max");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::io, "policy csv: bad number '" + s + "'");
  }
}

long long to_integer(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorKind::io, "policy csv: bad integer '" + s + "'");
  return v;
}

// (state, action) pairs -> validated policy covering 0..max state.
Policy assemble(const std::vector<std::pair<long long, long long>>& rows, int b_max) {
  if (rows.empty()) throw Error(ErrorKind::io, "policy csv: no rows");
  long long top = -1;
  for (const auto& [s, a] : rows) {
    if (s < 0) throw Error(ErrorKind::io, "policy csv: negative state");
    top = std::max(top, s);
  }
  Policy p{b_max, std::vector<int>(static_cast<std::size_t>(top) + 1, -1)};
  for (const auto& [s, a] : rows) {
    auto& slot = p.actions[static_cast<std::size_t>(s)];
    if (slot != -1) throw Error(ErrorKind::io, "policy csv: duplicate state " + std::to_string(s));
    slot = static_cast<int>(a);
  }
  for (std::size_t s = 0; s < p.actions.size(); ++s)
    if (p.actions[s] == -1)
      throw Error(ErrorKind::io, "policy csv: missing state " + std::to_string(s));
  validate_policy(p);
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Data lines with the header removed; the header must match `expected`.
std::vector<std::vector<std::string>> data_rows(const std::string& text,
                                                const std::vector<std::string>& expected) {
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    auto fields = split(line);
    if (!header) {
      if (fields != expected) throw Error(ErrorKind::io, "policy csv: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    if (fields.size() != expected.size())
      throw Error(ErrorKind::io, "policy csv: wrong field count in '" + line + "'");
    rows.push_back(std::move(fields));
  }
  if (!header) throw Error(ErrorKind::io, "policy csv: missing header");
  return rows;
}

}  // namespace

void validate_policy(const Policy& policy) {
  if (policy.b_max < 1) throw Error(ErrorKind::domain, "policy: b_max must be >= 1");
  if (policy.s_max() < policy.b_max)
    throw Error(ErrorKind::domain, "policy: must cover states 0..s_max and S_o with s_max >= b_max");
  for (std::size_t s = 0; s < policy.size(); ++s) {
    const int a = policy.actions[s];
    if (a < 0 || a > max_feasible(policy, s))
      throw Error(ErrorKind::domain, "policy: action " + std::to_string(a) + " infeasible at state " +
                                         std::to_string(s) + " (valid 0.." +
                                         std::to_string(max_feasible(policy, s)) + ")");
  }
}

Policy make_work_conserving(int b_max, int s_max) { return make_control_limit(1, b_max, s_max); }

Policy make_static(int b, int b_max, int s_max) {
  check_shape(b_max, s_max);
  if (b < 1 || b > b_max)
    throw Error(ErrorKind::domain, "static batch size " + std::to_string(b) +
                                       " outside valid range 1.." + std::to_string(b_max));
  Policy p{b_max, std::vector<int>(static_cast<std::size_t>(s_max) + 2, 0)};
  for (int s = b; s <= s_max; ++s) p.actions[static_cast<std::size_t>(s)] = b;
  p.actions[p.overflow()] = b;
  return p;
}

Policy make_control_limit(int limit, int b_max, int s_max) {
  check_shape(b_max, s_max);
  if (limit < 1) throw Error(ErrorKind::domain, "control limit must be >= 1");
  Policy p{b_max, std::vector<int>(static_cast<std::size_t>(s_max) + 2, 0)};
  for (int s = limit; s <= s_max; ++s) p.actions[static_cast<std::size_t>(s)] = std::min(s, b_max);
  if (limit <= s_max) p.actions[p.overflow()] = std::min(s_max, b_max);
  return p;
}

std::optional<int> detect_control_limit(const Policy& policy) {
  if (policy.size() < 2) return std::nullopt;
  const int s_max = policy.s_max();
  int limit = -1;
  for (int s = 0; s <= s_max; ++s) {
    if (policy.actions[static_cast<std::size_t>(s)] != 0) {
      limit = s;
      break;
    }
  }
  if (limit < 1) return std::nullopt;
  for (int s = limit; s <= s_max; ++s)
    if (policy.actions[static_cast<std::size_t>(s)] != std::min(s, policy.b_max)) return std::nullopt;
  if (policy.actions[policy.overflow()] != std::min(s_max, policy.b_max)) return std::nullopt;
  return limit;
}

std::string policy_to_csv(const Policy& policy) {
  std::string out = "s,action\n";
  for (std::size_t s = 0; s < policy.size(); ++s)
    out += std::to_string(s) + "," + std::to_string(policy.actions[s]) + "\n";
  return out;
}

Policy parse_policy_csv(const std::string& text, int b_max) {
  std::vector<std::pair<long long, long long>> rows;
  for (const auto& f : data_rows(text, {"s", "action"}))
    rows.emplace_back(to_integer(f[0]), to_integer(f[1]));
  return assemble(rows, b_max);
}

void save_policy(const std::string& path, const Policy& policy) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << policy_to_csv(policy);
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

Policy load_policy(const std::string& path, int b_max) {
  return parse_policy_csv(read_file(path), b_max);
}

std::string policy_chart_rows(const Policy& policy, const ChartKey& key) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t s = 0; s < policy.size(); ++s)
    out << key.rho << ',' << key.w1 << ',' << key.w2 << ',' << s << ',' << policy.actions[s] << '\n';
  return out.str();
}

Policy parse_policy_chart(const std::string& text, const ChartKey& key, int b_max) {
  const auto near = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y)); };
  std::vector<std::pair<long long, long long>> rows;
  for (const auto& f : data_rows(text, {"rho", "w1", "w2", "s", "action"})) {
    if (near(to_double(f[0]), key.rho) && near(to_double(f[1]), key.w1) && near(to_double(f[2]), key.w2))
      rows.emplace_back(to_integer(f[3]), to_integer(f[4]));
  }
  if (rows.empty()) throw Error(ErrorKind::io, "policy chart: no rows for the requested (rho, w1, w2)");
  return assemble(rows, b_max);
}

Policy load_policy_chart(const std::string& path, const ChartKey& key, int b_max) {
  return parse_policy_chart(read_file(path), key, b_max);
}

double policy_agreement(const Policy& a, const Policy& b, const std::vector<double>* mass) {
  if (a.size() != b.size()) throw Error(ErrorKind::domain, "policy agreement: length mismatch");
  if (mass && mass->size() != a.size()) throw Error(ErrorKind::domain, "policy agreement: weight length mismatch");
  if (a.size() == 0) return 1.0;
  double agree = 0.0, total = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    const double w = mass ? (*mass)[s] : 1.0;
    total += w;
    if (a.actions[s] == b.actions[s]) agree += w;
  }
  return total > 0.0 ? agree / total : 1.0;
}

}  // namespace batchq
