#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "wipt/harvester.hpp"
#include "wipt/region.hpp"

namespace wipt::cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { kNumber, kInteger, kString, kList, kFlag };

struct Param {
  std::string key;
  Kind kind;
  std::string help;
  bool power = false;  // also accepted as <key>_dbm, converted to watts
};

/// Resolved configuration of one run plus its output streams.
struct Context {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  bool has(const std::string& key) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  std::string required_string(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::uint64_t seed() const;
};

nlohmann::json envelope(const Context& ctx, nlohmann::json result);
void write_file(const std::string& path, const std::string& content);
/// JSON to the "json" path if set, else to ctx.out.
void emit_json(const Context& ctx, const nlohmann::json& result);
std::string region_csv(const Context& ctx, const RERegion& region, bool hull_only = false);
std::string svg_with_config(const Context& ctx, const std::string& svg);

HarvesterModel harvester_from_context(const Context& ctx, const std::string& fallback_model);
ReceiverArch arch_from_context(const Context& ctx, double noise);

int run_repro(const Context& ctx, const std::string& recipe);

}  // namespace wipt::cli
