#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace cevtool {

// sysexits-style process exit codes, documented in --help
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 64;    // bad arguments, config conflicts
inline constexpr int kExitIo = 74;       // missing/corrupt files
inline constexpr int kExitNumeric = 70;  // training/evaluation aborted

class CliError : public std::runtime_error {
public:
  CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
  int code;
};

struct KvEntry {
  int line = 0;
  std::string key;
  std::string value;
};

// Plain key=value file: one pair per line, '#' starts a comment, blank lines
// ignored. Malformed or duplicate lines raise a usage error naming the line.
std::vector<KvEntry> parse_kv_file(const std::string& path);

// Registry binding config-file keys to the variables behind CLI flags. A key
// is applied only when the matching flag was not given on the command line,
// so flags > config file > defaults.
class KnobTable {
public:
  using Setter = std::function<void(const std::string&)>;

  void add(const std::string& key, const std::function<bool()>& given_on_cli, Setter set);
  void apply_file(const std::string& path) const;

private:
  struct Knob {
    std::function<bool()> given;
    Setter set;
  };
  std::map<std::string, Knob> knobs_;
};

// strict numeric parsers; `what` names the offending knob in the error
long long parse_int(const std::string& s, const std::string& what);
double parse_double(const std::string& s, const std::string& what);
std::vector<double> parse_double_list(const std::string& s, const std::string& what);
std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& what);

// refuse to clobber an existing file unless --force
void require_writable(const std::string& path, bool force);

struct ManifestWriter {
  std::string command;
  std::uint64_t seed = 0;
  int threads = 0;
  std::map<std::string, std::string> config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::json status = "ok";

  // writes JSON with wall-clock duration measured from construction
  void write(const std::string& path) const;

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int resolve_threads(int flag_value); // --threads, CE_VAE_THREADS fallback

} // namespace cevtool
