#include "cevae/sim/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "cevae/rng.hpp"

namespace cevae::sim {

namespace {

// On-disk layout, little-endian throughout:
//   "CEDF" | u32 version=1 | u8 kind (0 clean, 1 noisy) | u32 n_v | u32 n_h |
//   u64 count | u8 normalized | [count f64 noise variances if noisy] |
//   count * n_v * n_h (f64 re, f64 im) pairs, sample-major.
constexpr char kMagic[4] = {'C', 'E', 'D', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_u64(os, u);
}

bool get_bytes(std::istream& is, void* dst, std::size_t n) {
  is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(is.gcount()) == n;
}

std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!get_bytes(is, b, 4))
    throw DatasetError(DatasetError::Kind::kTruncated,
                       std::string("dataset file ends inside ") + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is, const char* what) {
  unsigned char b[8];
  if (!get_bytes(is, b, 8))
    throw DatasetError(DatasetError::Kind::kTruncated,
                       std::string("dataset file ends inside ") + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is, const char* what) {
  const std::uint64_t u = get_u64(is, what);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

} // namespace

double normalize_dataset(ChannelDataset& ds) {
  double total = 0.0;
  for (const Complex& z : ds.data) total += std::norm(z);
  if (total <= 0.0)
    throw DatasetError(DatasetError::Kind::kMalformed, "normalize: dataset has no energy");
  const double scale = std::sqrt(static_cast<double>(ds.data.size()) / total);
  for (Complex& z : ds.data) z *= scale;
  ds.normalized = true;
  return scale;
}

ChannelDataset add_awgn(const ChannelDataset& clean, const std::vector<double>& snr_db,
                        std::uint64_t seed, std::uint64_t dom, std::uint64_t start_index) {
  if (clean.noisy)
    throw DatasetError(DatasetError::Kind::kMalformed, "add_awgn: input is already noisy");
  const std::size_t count = clean.count();
  if (snr_db.size() != 1 && snr_db.size() != count)
    throw std::invalid_argument("add_awgn: need one SNR per sample or a single shared value");
  ChannelDataset out = clean;
  out.noisy = true;
  out.noise_var.resize(count);
  const int n = clean.geo.n();
  const double half = std::sqrt(0.5);
  for (std::size_t i = 0; i < count; ++i) {
    const double snr = snr_db.size() == 1 ? snr_db[0] : snr_db[i];
    const double var = std::pow(10.0, -snr / 10.0);
    out.noise_var[i] = var;
    const double sd = std::sqrt(var) * half;
    RngStream rng(seed, dom, start_index + i);
    Complex* y = out.sample(i);
    for (int k = 0; k < n; ++k) y[k] += Complex(rng.normal() * sd, rng.normal() * sd);
  }
  return out;
}

void save_dataset(const ChannelDataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DatasetError(DatasetError::Kind::kIo, "cannot open for writing: " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  os.put(ds.noisy ? 1 : 0);
  put_u32(os, static_cast<std::uint32_t>(ds.geo.n_v));
  put_u32(os, static_cast<std::uint32_t>(ds.geo.n_h));
  put_u64(os, ds.count());
  os.put(ds.normalized ? 1 : 0);
  if (ds.noisy) {
    if (ds.noise_var.size() != ds.count())
      throw DatasetError(DatasetError::Kind::kMalformed,
                         "save: noise variance count does not match sample count");
    for (double v : ds.noise_var) put_f64(os, v);
  }
  for (const Complex& z : ds.data) {
    put_f64(os, z.real());
    put_f64(os, z.imag());
  }
  if (!os) throw DatasetError(DatasetError::Kind::kIo, "write failed: " + path);
}

ChannelDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DatasetError(DatasetError::Kind::kIo, "cannot open: " + path);
  char magic[4];
  if (!get_bytes(is, magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DatasetError(DatasetError::Kind::kBadMagic, "not a channel dataset file: " + path);
  const std::uint32_t version = get_u32(is, "version");
  if (version != kVersion)
    throw DatasetError(DatasetError::Kind::kBadVersion,
                       "unsupported dataset version " + std::to_string(version) + " in " + path);
  int kind = is.get();
  if (kind != 0 && kind != 1)
    throw DatasetError(kind < 0 ? DatasetError::Kind::kTruncated : DatasetError::Kind::kMalformed,
                       "bad sample kind byte in " + path);
  ChannelDataset ds;
  ds.noisy = kind == 1;
  ds.geo.n_v = static_cast<int>(get_u32(is, "geometry"));
  ds.geo.n_h = static_cast<int>(get_u32(is, "geometry"));
  if (ds.geo.n_v < 1 || ds.geo.n_h < 1 || ds.geo.n() > (1 << 20))
    throw DatasetError(DatasetError::Kind::kMalformed, "implausible geometry in " + path);
  const std::uint64_t count = get_u64(is, "sample count");
  const int norm = is.get();
  if (norm != 0 && norm != 1)
    throw DatasetError(norm < 0 ? DatasetError::Kind::kTruncated : DatasetError::Kind::kMalformed,
                       "bad normalization byte in " + path);
  ds.normalized = norm == 1;
  if (ds.noisy) {
    ds.noise_var.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) ds.noise_var[i] = get_f64(is, "noise variances");
  }
  ds.data.resize(count * static_cast<std::uint64_t>(ds.geo.n()));
  for (Complex& z : ds.data) {
    const double re = get_f64(is, "samples");
    const double im = get_f64(is, "samples");
    z = Complex(re, im);
  }
  // trailing garbage means the header lied about the count
  if (is.peek() != std::char_traits<char>::eof())
    throw DatasetError(DatasetError::Kind::kMalformed, "trailing bytes after samples in " + path);
  return ds;
}

} // namespace cevae::sim
