#include "nnr/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "json.hpp"
#include "nnr/error.hpp"

namespace nnr {

double ExperimentReport::scalar(const std::string& key) const {
  for (const auto& [k, v] : scalars)
    if (k == key) return v;
  throw InvalidInputError("report '" + name + "' has no scalar '" + key + "'");
}

std::size_t ExperimentReport::column_index(const std::string& col) const {
  const auto it = std::find(columns.begin(), columns.end(), col);
  if (it == columns.end()) throw InvalidInputError("report '" + name + "' has no column '" + col + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidInputError("quantile of empty data");
  if (sorted.size() == 1) return sorted.front();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<Aggregate> aggregate(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& columns,
                                 std::size_t group_columns) {
  std::vector<std::vector<double>> keys;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != columns.size()) throw InvalidInputError("aggregate: row width differs from header");
    std::vector<double> key(rows[r].begin(), rows[r].begin() + static_cast<std::ptrdiff_t>(group_columns));
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      members.emplace_back();
      it = keys.end() - 1;
    }
    members[static_cast<std::size_t>(it - keys.begin())].push_back(r);
  }
  std::vector<Aggregate> out;
  for (std::size_t g = 0; g < keys.size(); ++g) {
    for (std::size_t c = group_columns; c < columns.size(); ++c) {
      Aggregate a;
      a.group = keys[g];
      a.column = columns[c];
      std::vector<double> v;
      for (std::size_t r : members[g]) v.push_back(rows[r][c]);
      a.count = v.size();
      double sum = 0.0;
      for (double x : v) sum += x;
      a.mean = sum / static_cast<double>(v.size());
      if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - a.mean) * (x - a.mean);
        a.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
      }
      std::sort(v.begin(), v.end());
      a.q01 = quantile_sorted(v, 0.01);
      a.q05 = quantile_sorted(v, 0.05);
      a.q50 = quantile_sorted(v, 0.50);
      a.q95 = quantile_sorted(v, 0.95);
      a.q99 = quantile_sorted(v, 0.99);
      out.push_back(std::move(a));
    }
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const ExperimentReport& r) {
  std::string canon = r.name + ";seed=" + std::to_string(r.seed);
  for (const auto& [k, v] : r.config) canon += ";" + k + "=" + v;
  return fnv1a(canon);
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string to_csv(const ExperimentReport& r) {
  std::string out = "# experiment=" + r.name + " seed=" + std::to_string(r.seed) +
                    " config_hash=" + hex64(config_hash(r)) + "\n";
  for (std::size_t c = 0; c < r.columns.size(); ++c) out += (c ? "," : "") + r.columns[c];
  out += "\n";
  for (const auto& row : r.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + fmt17(row[c]);
    out += "\n";
  }
  return out;
}

std::string to_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.name;
  j["seed"] = r.seed;
  j["config_hash"] = hex64(config_hash(r));
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  j["config"] = cfg;
  nlohmann::ordered_json sc = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.scalars) sc[k] = number(v);
  j["scalars"] = sc;
  j["replications"] = r.rows.size();
  nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
  for (const auto& a : r.aggregates) {
    nlohmann::ordered_json e;
    nlohmann::ordered_json grp = nlohmann::ordered_json::object();
    for (std::size_t g = 0; g < a.group.size(); ++g) grp[r.columns[g]] = number(a.group[g]);
    e["group"] = grp;
    e["column"] = a.column;
    e["count"] = a.count;
    e["mean"] = number(a.mean);
    e["stderr"] = number(a.stderr_);
    e["q01"] = number(a.q01);
    e["q05"] = number(a.q05);
    e["q50"] = number(a.q50);
    e["q95"] = number(a.q95);
    e["q99"] = number(a.q99);
    aggs.push_back(std::move(e));
  }
  j["aggregates"] = std::move(aggs);
  j["wallClock"] = r.wall_clock_seconds;
  return j.dump(2) + "\n";
}

WrittenFiles write_report(const ExperimentReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = r.name + "_seed" + std::to_string(r.seed);
  WrittenFiles w{dir / (stem + ".csv"), dir / (stem + ".json")};
  {
    std::ofstream f(w.csv, std::ios::binary);
    if (!f) throw Error("cannot write " + w.csv.string());
    f << to_csv(r);
  }
  {
    std::ofstream f(w.json, std::ios::binary);
    if (!f) throw Error("cannot write " + w.json.string());
    f << to_json(r);
  }
  return w;
}

}  // namespace nnr
