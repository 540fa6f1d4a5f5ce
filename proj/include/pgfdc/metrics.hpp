#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pgfdc {

// One learning-curve sample. mean_return counts extrinsic reward only, so the
// curve tracks task performance no matter how the shaped reward is weighted.
// wall_clock_s is informational and deliberately kept out of the CSV: files
// from identical runs must compare byte-for-byte.
struct MetricsRow {
  int iteration = 0;
  long long env_steps = 0;
  double mean_return = 0.0;  // mean extrinsic return of episodes finished this iteration
  double mean_r_d = 0.0;     // mean raw demonstration reward over the rollout
  double mean_r_c = 0.0;     // mean raw curiosity reward over the rollout
  double ppo_policy_loss = 0.0;
  double ppo_value_loss = 0.0;
  double entropy = 0.0;
  double disc_objective = 0.0;  // from the discriminator snapshot in effect
  double l_ei = 0.0;            // from the curiosity snapshot in effect
  double l_f = 0.0;
  double wall_clock_s = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "iteration,env_steps,mean_return,mean_r_d,mean_r_c,ppo_policy_loss,ppo_value_loss,entropy,"
    "disc_objective,l_ei,l_f";

namespace detail_metrics {

// 17 significant digits: enough for the decimal text to identify the double
// uniquely, so a read-back recovers the written value bit-exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || (end && *end != '\0'))
    throw std::runtime_error(std::string("metrics CSV: bad ") + what + " value '" + s + "'");
  return v;
}

}  // namespace detail_metrics

inline std::string metrics_row_to_csv(const MetricsRow& r) {
  using detail_metrics::format_double;
  std::string s = std::to_string(r.iteration) + "," + std::to_string(r.env_steps);
  for (double v : {r.mean_return, r.mean_r_d, r.mean_r_c, r.ppo_policy_loss, r.ppo_value_loss,
                   r.entropy, r.disc_objective, r.l_ei, r.l_f})
    s += "," + format_double(v);
  return s;
}

inline void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // binary: no platform newline translation
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << kMetricsHeader << "\n";
  for (const MetricsRow& r : rows) os << metrics_row_to_csv(r) << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open metrics CSV: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("metrics CSV is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader)
    throw std::runtime_error("metrics CSV has unexpected header: " + line);
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail_metrics::split_csv_line(line);
    if (f.size() != 11)
      throw std::runtime_error("metrics CSV row has " + std::to_string(f.size()) +
                               " fields, expected 11: " + line);
    using detail_metrics::parse_double;
    MetricsRow r;
    r.iteration = static_cast<int>(parse_double(f[0], "iteration"));
    r.env_steps = static_cast<long long>(parse_double(f[1], "env_steps"));
    r.mean_return = parse_double(f[2], "mean_return");
    r.mean_r_d = parse_double(f[3], "mean_r_d");
    r.mean_r_c = parse_double(f[4], "mean_r_c");
    r.ppo_policy_loss = parse_double(f[5], "ppo_policy_loss");
    r.ppo_value_loss = parse_double(f[6], "ppo_value_loss");
    r.entropy = parse_double(f[7], "entropy");
    r.disc_objective = parse_double(f[8], "disc_objective");
    r.l_ei = parse_double(f[9], "l_ei");
    r.l_f = parse_double(f[10], "l_f");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace pgfdc
