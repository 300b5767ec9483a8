#pragma once

#include <cstdint>
#include <vector>

#include "cevae/linalg/types.hpp"
#include "cevae/linalg/ura.hpp"
#include "cevae/rng.hpp"

namespace cevae::sim {

using linalg::UraGeometry;

// One multipath component. Angles in radians, delay in seconds. The complex
// weight of the component is gain * exp(j phase) * exp(-2 pi j carrier * delay).
struct PathComponent {
  double gain;
  double phase;
  double azimuth;
  double elevation;
  double delay;
};

// Array response of the rectangular array for a plane wave from (az, el),
// a[v, h] = exp(j 2 pi (d_v v sin(el) + d_h h cos(el) sin(az))).
// Broadside (az = el = 0) gives the all-ones vector.
ComplexVec steering_vector(const UraGeometry& geo, double azimuth, double elevation);

// Deterministic superposition of path components at the given carrier.
ComplexVec channel_from_paths(const UraGeometry& geo, const std::vector<PathComponent>& paths,
                              double carrier_hz);

// Draw parameters for one channel realization. 'A' and 'B' are cluster
// scenarios differing in angular concentration; 'G' is a Gaussian prior with
// a fixed sparse angular spectrum (see prior_spectrum).
struct ScenarioConfig {
  char id = 'A';
  int min_paths = 4;
  int max_paths = 8;
  double sector_deg = 60.0;       // cluster center azimuth ~ U(+-sector)
  double center_elev_deg = 15.0;  // cluster center elevation ~ U(+-this)
  double spread_deg = 2.0;        // per-path azimuth offset std dev
  double elev_spread_deg = 1.0;   // per-path elevation offset std dev
  double p_los = 0.7;
  double los_k = 10.0;            // linear power ratio of the dominant path
  double delay_spread_s = 1e-6;   // delays ~ U(0, this)
  double carrier_hz = 2.18e9;
  // 'G' only: fraction of prior power spread uniformly over all bins,
  // remainder split over spike_bins equispaced spectrum bins
  int spike_bins = 8;
  double background = 0.01;
};

ScenarioConfig scenario_preset(char id);

std::vector<PathComponent> draw_paths(const ScenarioConfig& cfg, RngStream& rng);

// Angular power spectrum of the 'G' prior, length 4N, sum 4N (so the implied
// covariance has trace N). Throws for other scenario ids.
std::vector<double> prior_spectrum(const UraGeometry& geo, const ScenarioConfig& cfg);

// count channel realizations, sample i drawn from the stream
// (seed, channel domain, start_index + i). Mean per-antenna power is 1 in
// expectation but not exactly 1 per draw.
std::vector<ComplexVec> generate_channels(const UraGeometry& geo, const ScenarioConfig& cfg,
                                          std::size_t count, std::uint64_t seed,
                                          std::uint64_t start_index = 0);

} // namespace cevae::sim
