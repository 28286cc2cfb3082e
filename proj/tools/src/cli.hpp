#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "instance_io.hpp"

namespace nnr::cli {

/// Bad flags, unknown keys, malformed values. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr std::uint64_t kDefaultSeed = 20240601;

using KeyValues = std::map<std::string, std::string>;

/// Flat `key = value` lines; '#' starts a comment.
KeyValues parse_config_text(const std::string& text);
KeyValues load_config_file(const std::string& path);
/// "k=v" tokens; later tokens win.
KeyValues parse_overrides(const std::vector<std::string>& tokens);

/// Typed access to a key=value map that remembers the effective value of
/// every key it hands out, defaults included.
class Params {
 public:
  explicit Params(KeyValues kv) : kv_(std::move(kv)) {}

  /// Throws ConfigError naming the first key not in `allowed`.
  void allow(const std::set<std::string>& allowed) const;

  bool has(const std::string& k) const { return kv_.count(k) > 0; }
  std::string str(const std::string& k, const std::string& def);
  std::string required(const std::string& k);
  double num(const std::string& k, double def);
  std::size_t count(const std::string& k, std::size_t def);
  std::uint64_t u64(const std::string& k, std::uint64_t def);
  bool flag(const std::string& k, bool def);
  std::vector<double> list(const std::string& k, const std::vector<double>& def);
  std::vector<std::size_t> indices(const std::string& k);

  /// Effective values of every key read so far, sorted by key.
  Echo echo() const;

 private:
  KeyValues kv_;
  std::map<std::string, std::string> used_;
};

/// Seed precedence: key `seed`, then NNR_SEED, then the built-in default.
std::uint64_t resolve_seed(Params& p);

/// Entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nnr::cli
