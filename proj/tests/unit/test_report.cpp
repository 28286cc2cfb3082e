#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nnr/report.hpp"

using namespace nnr;

namespace {

ExperimentReport small_report() {
  ExperimentReport r;
  r.name = "demo";
  r.seed = 9;
  r.config = {{"n", "10"}, {"rho", "0.5"}};
  r.columns = {"cell", "x"};
  r.group_columns = 1;
  r.rows = {{1, 0.1}, {1, 1.0 / 3.0}, {2, 5}};
  r.aggregates = aggregate(r.rows, r.columns, r.group_columns);
  r.scalars = {{"alpha", 0.25}, {"bad", std::nan("")}};
  return r;
}

}  // namespace

TEST(Quantile, TypeSeven) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  // h = (n - 1) q = 0.3
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.1), 1.3);
  EXPECT_DOUBLE_EQ(quantile_sorted({7.0}, 0.99), 7.0);
}

TEST(Aggregate, SingleRow) {
  const auto a = aggregate({{3, 1.5, -2}}, {"g", "a", "b"}, 1);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].group, (std::vector<double>{3}));
  EXPECT_EQ(a[0].column, "a");
  EXPECT_EQ(a[0].count, 1u);
  EXPECT_EQ(a[0].mean, 1.5);
  EXPECT_EQ(a[0].stderr_, 0.0);
  EXPECT_EQ(a[0].q01, 1.5);
  EXPECT_EQ(a[0].q99, 1.5);
  EXPECT_EQ(a[1].mean, -2.0);
}

TEST(Aggregate, ConstantRows) {
  const auto a = aggregate({{0, 4}, {0, 4}, {0, 4}, {0, 4}}, {"g", "v"}, 1);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].mean, 4.0);
  EXPECT_EQ(a[0].stderr_, 0.0);
}

TEST(Aggregate, HandComputedThreeRows) {
  // 1, 2, 6: mean 3, sample variance ((4 + 1 + 9) / 2) = 7, se = sqrt(7 / 3)
  const auto a = aggregate({{1}, {2}, {6}}, {"v"}, 0);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_DOUBLE_EQ(a[0].mean, 3.0);
  EXPECT_DOUBLE_EQ(a[0].stderr_, std::sqrt(7.0 / 3.0));
  EXPECT_DOUBLE_EQ(a[0].q50, 2.0);
  EXPECT_TRUE(a[0].group.empty());
}

TEST(Aggregate, GroupsInFirstAppearanceOrder) {
  const auto a = aggregate({{2, 1}, {1, 5}, {2, 3}}, {"g", "v"}, 1);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].group[0], 2.0);
  EXPECT_DOUBLE_EQ(a[0].mean, 2.0);
  EXPECT_EQ(a[1].group[0], 1.0);
  EXPECT_EQ(a[1].count, 1u);
}

TEST(Fnv1a, ReferenceValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Csv, HeaderAndLosslessRows) {
  const ExperimentReport r = small_report();
  const std::string csv = to_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# experiment=demo seed=9 config_hash=", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line, "cell,x");
  std::getline(in, line);
  std::getline(in, line);
  const double back = std::stod(line.substr(line.find(',') + 1));
  EXPECT_EQ(back, 1.0 / 3.0);
}

TEST(Csv, HashFollowsConfig) {
  ExperimentReport a = small_report();
  ExperimentReport b = small_report();
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.config[1].second = "0.6";
  EXPECT_NE(config_hash(a), config_hash(b));
  b = small_report();
  b.seed = 10;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Json, ContentsAndNonFinite) {
  const ExperimentReport r = small_report();
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_EQ(j["experiment"], "demo");
  EXPECT_EQ(j["config"]["rho"], "0.5");
  EXPECT_EQ(j["scalars"]["alpha"], 0.25);
  EXPECT_EQ(j["scalars"]["bad"], "nan");
  EXPECT_EQ(j["replications"], 3);
  ASSERT_EQ(j["aggregates"].size(), 2u);
  EXPECT_EQ(j["aggregates"][0]["group"]["cell"], 1.0);
  EXPECT_DOUBLE_EQ(j["aggregates"][0]["mean"].get<double>(), (0.1 + 1.0 / 3.0) / 2);
}

TEST(Report, LookupHelpers) {
  const ExperimentReport r = small_report();
  EXPECT_EQ(r.column_index("x"), 1u);
  EXPECT_EQ(r.scalar("alpha"), 0.25);
  EXPECT_ANY_THROW(r.column_index("missing"));
  EXPECT_ANY_THROW(r.scalar("missing"));
}

TEST(Report, WriteFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "nnr_report_test";
  std::filesystem::remove_all(dir);
  const ExperimentReport r = small_report();
  const WrittenFiles f = write_report(r, dir);
  EXPECT_EQ(f.csv.filename(), "demo_seed9.csv");
  EXPECT_EQ(f.json.filename(), "demo_seed9.json");
  std::ifstream in(f.csv);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), to_csv(r));
  std::filesystem::remove_all(dir);
}
