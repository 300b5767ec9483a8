#include <cstdio>
#include <string>
#include <vector>

#include "cevae/parallel.hpp"
#include "cevae/sim/dataset.hpp"
#include "cevae/sim/scenario.hpp"
#include "commands.hpp"
#include "common.hpp"

namespace cevtool {

namespace sim = cevae::sim;
namespace linalg = cevae::linalg;
using cevae::ComplexVec;

namespace {

// "a/b/c" -> three absolute counts
std::vector<std::size_t> parse_split(const std::string& s) {
  std::vector<std::size_t> parts;
  std::size_t at = 0;
  while (true) {
    const std::size_t slash = s.find('/', at);
    const std::string piece = s.substr(at, slash == std::string::npos ? slash : slash - at);
    const long long v = parse_int(piece, "--split");
    if (v < 0) throw CliError(kExitUsage, "--split counts must be nonnegative, got " + piece);
    parts.push_back(static_cast<std::size_t>(v));
    if (slash == std::string::npos) break;
    at = slash + 1;
  }
  if (parts.size() != 3)
    throw CliError(kExitUsage, "--split wants train/val/test, got '" + s + "'");
  return parts;
}

sim::ChannelDataset draw_split(const linalg::UraGeometry& geo, const sim::ScenarioConfig& cfg,
                               std::size_t count, std::uint64_t seed, std::uint64_t start) {
  sim::ChannelDataset ds;
  ds.geo = geo;
  const std::vector<ComplexVec> chans = sim::generate_channels(geo, cfg, count, seed, start);
  ds.data.reserve(count * static_cast<std::size_t>(geo.n()));
  for (const ComplexVec& h : chans) ds.data.insert(ds.data.end(), h.begin(), h.end());
  sim::normalize_dataset(ds);
  return ds;
}

} // namespace

int run_generate(const GenerateOpts& o) {
  if (o.scenario.size() != 1 || (o.scenario != "A" && o.scenario != "B" && o.scenario != "G"))
    throw CliError(kExitUsage, "unknown scenario '" + o.scenario + "'; presets: A, B, G");
  if (o.nv < 1 || o.nh < 1) throw CliError(kExitUsage, "--nv/--nh must be positive");

  // split precedence: explicit counts must agree with an explicit --count
  std::vector<std::size_t> counts;
  std::size_t total = o.count;
  if (!o.split.empty()) {
    counts = parse_split(o.split);
    const std::size_t sum = counts[0] + counts[1] + counts[2];
    if (sum != o.count)
      throw CliError(kExitUsage, "--split counts sum to " + std::to_string(sum) +
                                     " but --count is " + std::to_string(o.count));
  } else {
    const std::size_t val = o.count / 10;
    counts = {o.count - 2 * val, val, val};
  }
  if (counts[0] == 0 || counts[2] == 0)
    throw CliError(kExitUsage, "train and test splits must be nonempty");

  ManifestWriter mf;
  mf.command = "generate";
  mf.seed = o.seed;
  mf.threads = cevae::thread_count();
  mf.config = {{"scenario", o.scenario},
               {"count", std::to_string(total)},
               {"split", std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" +
                             std::to_string(counts[2])},
               {"nv", std::to_string(o.nv)},
               {"nh", std::to_string(o.nh)}};

  const std::string names[3] = {o.out + "_train.cedf", o.out + "_val.cedf", o.out + "_test.cedf"};
  const std::string manifest_path = o.out + ".manifest.json";
  for (const std::string& p : names) require_writable(p, o.force);
  require_writable(manifest_path, o.force);

  const linalg::UraGeometry geo{o.nv, o.nh};
  const sim::ScenarioConfig cfg = sim::scenario_preset(o.scenario[0]);

  // disjoint sample-index windows, so splits never share realizations
  std::uint64_t start = 0;
  for (int i = 0; i < 3; ++i) {
    if (counts[i] == 0) continue;
    const sim::ChannelDataset ds = draw_split(geo, cfg, counts[i], o.seed, start);
    sim::save_dataset(ds, names[i]);
    mf.outputs.push_back(names[i]);
    start += counts[i];
  }

  mf.write(manifest_path);
  std::fprintf(stderr, "generate: scenario %s, %zu/%zu/%zu samples, %dx%d array -> %s_*.cedf\n",
               o.scenario.c_str(), counts[0], counts[1], counts[2], o.nv, o.nh, o.out.c_str());
  return kExitOk;
}

} // namespace cevtool
