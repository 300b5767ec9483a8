#include "cevae/sim/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace cevae::sim {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDegToRad = kPi / 180.0;
} // namespace

ComplexVec steering_vector(const UraGeometry& geo, double azimuth, double elevation) {
  ComplexVec a(static_cast<std::size_t>(geo.n()));
  const double kv = 2.0 * kPi * geo.spacing_v * std::sin(elevation);
  const double kh = 2.0 * kPi * geo.spacing_h * std::cos(elevation) * std::sin(azimuth);
  for (int v = 0; v < geo.n_v; ++v)
    for (int h = 0; h < geo.n_h; ++h) {
      const double ph = kv * v + kh * h;
      a[static_cast<std::size_t>(v) * geo.n_h + h] = Complex(std::cos(ph), std::sin(ph));
    }
  return a;
}

ComplexVec channel_from_paths(const UraGeometry& geo, const std::vector<PathComponent>& paths,
                              double carrier_hz) {
  ComplexVec h(static_cast<std::size_t>(geo.n()), Complex(0.0, 0.0));
  for (const PathComponent& p : paths) {
    const double ph = p.phase - 2.0 * kPi * carrier_hz * p.delay;
    const Complex w = p.gain * Complex(std::cos(ph), std::sin(ph));
    const ComplexVec a = steering_vector(geo, p.azimuth, p.elevation);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += w * a[i];
  }
  return h;
}

ScenarioConfig scenario_preset(char id) {
  ScenarioConfig c;
  c.id = id;
  switch (id) {
    case 'A': // one narrow cluster per channel, mostly line of sight
      c.min_paths = 4;
      c.max_paths = 8;
      c.spread_deg = 2.0;
      c.elev_spread_deg = 1.0;
      c.p_los = 0.7;
      break;
    case 'B': // broad angular spread, rich scattering
      c.min_paths = 8;
      c.max_paths = 20;
      c.spread_deg = 10.0;
      c.elev_spread_deg = 4.0;
      c.p_los = 0.2;
      c.los_k = 5.0;
      break;
    case 'G': // Gaussian prior with sparse angular spectrum
      break;
    default:
      throw std::invalid_argument(std::string("unknown scenario id '") + id + "'");
  }
  return c;
}

std::vector<PathComponent> draw_paths(const ScenarioConfig& cfg, RngStream& rng) {
  const int l = cfg.min_paths +
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.max_paths - cfg.min_paths + 1)));
  const double center_az = (2.0 * rng.uniform() - 1.0) * cfg.sector_deg * kDegToRad;
  const double center_el = (2.0 * rng.uniform() - 1.0) * cfg.center_elev_deg * kDegToRad;
  const bool los = rng.uniform() < cfg.p_los;

  std::vector<PathComponent> paths(static_cast<std::size_t>(l));
  const double decay = cfg.delay_spread_s / 3.0;
  double total = 0.0;
  for (int i = 0; i < l; ++i) {
    PathComponent& p = paths[static_cast<std::size_t>(i)];
    const bool direct = los && i == 0;
    p.delay = direct ? 0.0 : rng.uniform() * cfg.delay_spread_s;
    p.phase = rng.uniform() * 2.0 * kPi;
    p.azimuth = direct ? center_az : center_az + rng.normal() * cfg.spread_deg * kDegToRad;
    p.elevation = direct ? center_el : center_el + rng.normal() * cfg.elev_spread_deg * kDegToRad;
    p.gain = std::exp(-p.delay / decay); // squared later; relative power profile
    total += direct ? 0.0 : p.gain * p.gain;
  }
  // power split: the direct path takes k/(k+1) of the total, scattered paths
  // share the rest according to the delay profile; without LOS everything is
  // profile-weighted. Sum of squared gains is exactly 1 afterwards.
  if (los) {
    const double direct_p = l > 1 ? cfg.los_k / (cfg.los_k + 1.0) : 1.0;
    paths[0].gain = std::sqrt(direct_p);
    const double rest = total > 0.0 ? (1.0 - direct_p) / total : 0.0;
    for (int i = 1; i < l; ++i) paths[static_cast<std::size_t>(i)].gain *= std::sqrt(rest);
  } else {
    const double inv = 1.0 / std::sqrt(total);
    for (auto& p : paths) p.gain *= inv;
  }
  return paths;
}

std::vector<double> prior_spectrum(const UraGeometry& geo, const ScenarioConfig& cfg) {
  if (cfg.id != 'G') throw std::invalid_argument("prior_spectrum: scenario has no fixed prior");
  const std::size_t m = 4u * static_cast<std::size_t>(geo.n());
  if (cfg.spike_bins < 1 || static_cast<std::size_t>(cfg.spike_bins) > m)
    throw std::invalid_argument("prior_spectrum: bad spike count");
  std::vector<double> c(m, cfg.background);
  const double spike = (1.0 - cfg.background) * static_cast<double>(m) /
                       static_cast<double>(cfg.spike_bins);
  for (int s = 0; s < cfg.spike_bins; ++s) {
    const std::size_t k = (static_cast<std::size_t>(s) * m + m / 2) / static_cast<std::size_t>(cfg.spike_bins);
    c[k % m] += spike;
  }
  return c;
}

std::vector<ComplexVec> generate_channels(const UraGeometry& geo, const ScenarioConfig& cfg,
                                          std::size_t count, std::uint64_t seed,
                                          std::uint64_t start_index) {
  std::vector<ComplexVec> out;
  out.reserve(count);
  if (cfg.id == 'G') {
    const std::vector<double> spec = prior_spectrum(geo, cfg);
    std::vector<double> root(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) root[k] = std::sqrt(spec[k]);
    const double half = std::sqrt(0.5);
    for (std::size_t i = 0; i < count; ++i) {
      RngStream rng(seed, domain::kChannel, start_index + i);
      ComplexVec w(spec.size());
      for (std::size_t k = 0; k < w.size(); ++k)
        w[k] = root[k] * Complex(rng.normal() * half, rng.normal() * half);
      out.push_back(linalg::apply_qh(geo, w));
    }
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng(seed, domain::kChannel, start_index + i);
    out.push_back(channel_from_paths(geo, draw_paths(cfg, rng), cfg.carrier_hz));
  }
  return out;
}

} // namespace cevae::sim
