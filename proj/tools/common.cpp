#include "common.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "cevae/parallel.hpp"

namespace cevtool {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

} // namespace

std::vector<KvEntry> parse_kv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CliError(kExitIo, "cannot open " + path);
  std::vector<KvEntry> out;
  std::set<std::string> seen;
  std::string line;
  int no = 0;
  while (std::getline(f, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CliError(kExitUsage, path + ": line " + std::to_string(no) + ": expected key=value");
    KvEntry e;
    e.line = no;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    if (e.key.empty())
      throw CliError(kExitUsage, path + ": line " + std::to_string(no) + ": empty key");
    if (!seen.insert(e.key).second)
      throw CliError(kExitUsage,
                     path + ": line " + std::to_string(no) + ": duplicate key '" + e.key + "'");
    out.push_back(std::move(e));
  }
  return out;
}

void KnobTable::add(const std::string& key, const std::function<bool()>& given_on_cli, Setter set) {
  knobs_[key] = Knob{given_on_cli, std::move(set)};
}

void KnobTable::apply_file(const std::string& path) const {
  for (const KvEntry& e : parse_kv_file(path)) {
    const auto it = knobs_.find(e.key);
    if (it == knobs_.end())
      throw CliError(kExitUsage,
                     path + ": line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    if (it->second.given()) continue; // command line wins
    try {
      it->second.set(e.value);
    } catch (const CliError&) {
      throw;
    } catch (const std::exception& ex) {
      throw CliError(kExitUsage, path + ": line " + std::to_string(e.line) + ": " + ex.what());
    }
  }
}

long long parse_int(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw CliError(kExitUsage, "invalid integer for " + what + ": '" + s + "'");
  }
  if (used != s.size())
    throw CliError(kExitUsage, "invalid integer for " + what + ": '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw CliError(kExitUsage, "invalid number for " + what + ": '" + s + "'");
  }
  if (used != s.size())
    throw CliError(kExitUsage, "invalid number for " + what + ": '" + s + "'");
  return v;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::string cur;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      cur = trim(cur);
      if (!cur.empty()) out.push_back(parse_double(cur, what));
      cur.clear();
    } else {
      cur += s[i];
    }
  }
  if (out.empty()) throw CliError(kExitUsage, what + ": empty list");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& what) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(s, what)) {
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw CliError(kExitUsage, what + ": expected nonnegative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void require_writable(const std::string& path, bool force) {
  if (!force && std::filesystem::exists(path))
    throw CliError(kExitUsage, path + " exists; pass --force to overwrite");
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::exists(parent))
    throw CliError(kExitIo, "output directory " + parent.string() + " does not exist");
}

void ManifestWriter::write(const std::string& path) const {
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  nlohmann::json j;
  j["command"] = command;
  j["version"] = "cevae 0.1.0";
  j["seed"] = seed;
  j["threads"] = threads;
  j["config"] = config;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["duration_seconds"] = secs;
  j["status"] = status;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw CliError(kExitIo, "cannot write manifest " + path);
  f << j.dump(2) << "\n";
}

int resolve_threads(int flag_value) {
  if (flag_value >= 0) return flag_value;
  if (const char* env = std::getenv("CE_VAE_THREADS")) {
    return static_cast<int>(parse_int(env, "CE_VAE_THREADS"));
  }
  return 0; // auto
}

} // namespace cevtool
