#include "instance_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "nnr/report.hpp"

namespace nnr::cli {

static_assert(std::endian::native == std::endian::little, "matrix files are little-endian");

namespace {

nlohmann::ordered_json vec_json(std::span<const double> v) {
  auto a = nlohmann::ordered_json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Vector json_vec(const nlohmann::ordered_json& a) {
  Vector v;
  for (const auto& x : a) v.push_back(x.get<double>());
  return v;
}

}  // namespace

std::uint64_t matrix_hash(const DenseMatrix& X) {
  const auto& d = X.data();
  std::string bytes(d.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), d.data(), bytes.size());
  return fnv1a(bytes);
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

InstancePaths write_instance(const std::filesystem::path& dir, const std::string& name, const RegressionInstance& inst,
                             const Echo& config, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  InstancePaths out{dir / (name + ".json"), dir / (name + ".bin")};
  {
    std::ofstream f(out.matrix, std::ios::binary);
    if (!f) throw InvalidInputError("cannot write " + out.matrix.string());
    const auto& d = inst.X.data();
    f.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
  }
  nlohmann::ordered_json m;
  m["format"] = "nnr-instance/1";
  auto cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  m["config"] = cfg;
  m["seed"] = seed;
  m["n"] = inst.n();
  m["p"] = inst.p();
  m["matrix_file"] = out.matrix.filename().string();
  m["matrix_layout"] = "float64-le column-major";
  m["matrix_hash"] = hex64(matrix_hash(inst.X));
  m["y"] = vec_json(inst.y);
  if (inst.truth) {
    const auto& t = *inst.truth;
    nlohmann::ordered_json tj;
    tj["beta_star"] = vec_json(t.beta_star);
    tj["support"] = t.support;
    tj["sigma"] = t.sigma;
    if (t.epsilon) tj["epsilon"] = vec_json(*t.epsilon);
    tj["approx_error"] = t.approx_error;
    m["truth"] = tj;
    // small supports: echo the support Gram so it can be read off directly
    if (!t.support.empty() && t.support.size() <= 64) {
      const DenseMatrix g = gram(inst.X.select_columns(t.support), 1.0 / static_cast<double>(inst.n()));
      auto rows = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < g.rows(); ++i) {
        auto r = nlohmann::ordered_json::array();
        for (std::size_t j = 0; j < g.cols(); ++j) r.push_back(g(i, j));
        rows.push_back(r);
      }
      m["gram_SS"] = rows;
    }
  }
  std::ofstream f(out.manifest, std::ios::binary);
  if (!f) throw InvalidInputError("cannot write " + out.manifest.string());
  f << m.dump(2) << "\n";
  return out;
}

LoadedInstance read_instance(const std::filesystem::path& manifest) {
  std::ifstream f(manifest, std::ios::binary);
  if (!f) throw InvalidInputError("cannot read " + manifest.string());
  LoadedInstance out;
  try {
    out.manifest = nlohmann::ordered_json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError("bad manifest " + manifest.string() + ": " + e.what());
  }
  const auto& m = out.manifest;
  if (!m.contains("matrix_file") || !m.contains("n") || !m.contains("p") || !m.contains("y"))
    throw InvalidInputError("manifest missing required fields");
  const auto n = m["n"].get<std::size_t>();
  const auto p = m["p"].get<std::size_t>();
  const auto bin = manifest.parent_path() / m["matrix_file"].get<std::string>();
  std::ifstream b(bin, std::ios::binary);
  if (!b) throw InvalidInputError("cannot read " + bin.string());
  std::vector<double> data(n * p);
  b.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (b.gcount() != static_cast<std::streamsize>(data.size() * sizeof(double)) || b.peek() != EOF)
    throw InvalidInputError("matrix file size does not match " + std::to_string(n) + "x" + std::to_string(p));
  DenseMatrix X(n, p, std::move(data));
  out.hash = matrix_hash(X);
  if (m.contains("matrix_hash") && m["matrix_hash"].get<std::string>() != hex64(out.hash))
    throw InvalidInputError("matrix hash mismatch for " + bin.string());
  Vector y = json_vec(m["y"]);
  std::optional<GroundTruth> truth;
  if (m.contains("truth")) {
    const auto& tj = m["truth"];
    GroundTruth t;
    t.beta_star = json_vec(tj["beta_star"]);
    t.support = tj["support"].get<IndexSet>();
    t.sigma = tj.value("sigma", 0.0);
    if (tj.contains("epsilon")) t.epsilon = json_vec(tj["epsilon"]);
    t.approx_error = tj.value("approx_error", 0.0);
    truth = std::move(t);
  }
  out.inst = make_instance(std::move(X), std::move(y), std::move(truth));
  return out;
}

}  // namespace nnr::cli
