#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cevae/linalg/types.hpp"
#include "cevae/linalg/ura.hpp"

namespace cevae::sim {

// A batch of channel vectors (clean) or observations (noisy) over one array
// geometry, stored sample-major. Noisy datasets carry the per-sample noise
// variance used to corrupt them.
struct ChannelDataset {
  linalg::UraGeometry geo;
  bool noisy = false;
  bool normalized = false;
  std::vector<Complex> data;
  std::vector<double> noise_var; // per sample, noisy only

  std::size_t count() const {
    return geo.n() > 0 ? data.size() / static_cast<std::size_t>(geo.n()) : 0;
  }
  Complex* sample(std::size_t i) { return data.data() + i * static_cast<std::size_t>(geo.n()); }
  const Complex* sample(std::size_t i) const {
    return data.data() + i * static_cast<std::size_t>(geo.n());
  }
};

class DatasetError : public std::runtime_error {
public:
  enum class Kind { kIo, kBadMagic, kBadVersion, kTruncated, kMalformed };
  DatasetError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

// Scales every sample by one common factor so the mean per-antenna power over
// the whole set is exactly 1. Returns the factor. Each file is normalized on
// its own; splits never share statistics.
double normalize_dataset(ChannelDataset& ds);

// y_i = h_i + n_i with n_i circular complex Gaussian of per-antenna variance
// 10^(-snr_db[i] / 10). Noise of sample i comes from the stream
// (seed, dom, start_index + i); dom should be one of the noise domains,
// optionally carrying a tag. snr_db is either one value per sample or a
// single value applied to all.
ChannelDataset add_awgn(const ChannelDataset& clean, const std::vector<double>& snr_db,
                        std::uint64_t seed, std::uint64_t dom, std::uint64_t start_index = 0);

void save_dataset(const ChannelDataset& ds, const std::string& path);
ChannelDataset load_dataset(const std::string& path);

} // namespace cevae::sim
