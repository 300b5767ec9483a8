#include "cevae/vae/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace cevae::vae {

namespace {

constexpr char kMagic[4] = {'C', 'E', 'V', 'M'};
constexpr std::uint32_t kVersion = 1;

using Kind = CheckpointError::Kind;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

bool get_bytes(std::istream& is, void* dst, std::size_t n) {
  is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(is.gcount()) == n;
}

std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!get_bytes(is, b, 4))
    throw CheckpointError(Kind::kTruncated, std::string("model file ends inside ") + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is, const char* what) {
  unsigned char b[8];
  if (!get_bytes(is, b, 8))
    throw CheckpointError(Kind::kTruncated, std::string("model file ends inside ") + what);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

std::string get_str(std::istream& is, const char* what) {
  const std::uint32_t len = get_u32(is, what);
  if (len > (1u << 16))
    throw CheckpointError(Kind::kMalformed, std::string("implausible string length in ") + what);
  std::string s(len, '\0');
  if (!get_bytes(is, s.data(), len))
    throw CheckpointError(Kind::kTruncated, std::string("model file ends inside ") + what);
  return s;
}

} // namespace

void save_model(VaeModel& model, int epochs_trained, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError(Kind::kIo, "cannot open for writing: " + path);
  const VaeConfig& c = model.config();
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(c.geo.n_v));
  put_u32(os, static_cast<std::uint32_t>(c.geo.n_h));
  put_f64(os, c.geo.spacing_v);
  put_f64(os, c.geo.spacing_h);
  put_u32(os, static_cast<std::uint32_t>(c.base_channels));
  put_u32(os, static_cast<std::uint32_t>(c.latent_dim));
  put_u32(os, static_cast<std::uint32_t>(c.kernel));
  put_u32(os, static_cast<std::uint32_t>(c.padding));
  put_u32(os, static_cast<std::uint32_t>(c.conv_blocks));
  put_u32(os, static_cast<std::uint32_t>(epochs_trained));

  std::vector<nn::Tensor*> state;
  std::vector<std::string> names;
  model.collect_state(state, names);
  put_u32(os, static_cast<std::uint32_t>(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) {
    put_str(os, names[i]);
    put_u32(os, static_cast<std::uint32_t>(state[i]->shape.size()));
    for (int d : state[i]->shape) put_u32(os, static_cast<std::uint32_t>(d));
    for (double v : state[i]->data) put_f64(os, v);
  }
  if (!os) throw CheckpointError(Kind::kIo, "write failed: " + path);
}

std::unique_ptr<VaeModel> load_model(const std::string& path, int* epochs_trained) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError(Kind::kIo, "cannot open: " + path);
  char magic[4];
  if (!get_bytes(is, magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError(Kind::kBadMagic, "not a model file: " + path);
  const std::uint32_t version = get_u32(is, "version");
  if (version != kVersion)
    throw CheckpointError(Kind::kBadVersion,
                          "unsupported model version " + std::to_string(version) + " in " + path);
  VaeConfig c;
  c.geo.n_v = static_cast<int>(get_u32(is, "configuration"));
  c.geo.n_h = static_cast<int>(get_u32(is, "configuration"));
  c.geo.spacing_v = get_f64(is, "configuration");
  c.geo.spacing_h = get_f64(is, "configuration");
  c.base_channels = static_cast<int>(get_u32(is, "configuration"));
  c.latent_dim = static_cast<int>(get_u32(is, "configuration"));
  c.kernel = static_cast<int>(get_u32(is, "configuration"));
  c.padding = static_cast<int>(get_u32(is, "configuration"));
  c.conv_blocks = static_cast<int>(get_u32(is, "configuration"));
  const int epochs = static_cast<int>(get_u32(is, "configuration"));
  if (epochs_trained) *epochs_trained = epochs;

  auto model = std::make_unique<VaeModel>(c, 0); // state fully overwritten below

  std::vector<nn::Tensor*> state;
  std::vector<std::string> names;
  model->collect_state(state, names);
  const std::uint32_t count = get_u32(is, "tensor count");
  if (count != state.size())
    throw CheckpointError(Kind::kMalformed,
                          "model file has " + std::to_string(count) + " tensors, expected " +
                              std::to_string(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) {
    const std::string name = get_str(is, "tensor name");
    if (name != names[i])
      throw CheckpointError(Kind::kMalformed,
                            "tensor " + std::to_string(i) + " is '" + name + "', expected '" +
                                names[i] + "'");
    const std::uint32_t rank = get_u32(is, name.c_str());
    if (rank != state[i]->shape.size())
      throw CheckpointError(Kind::kMalformed, "tensor rank mismatch for " + name);
    for (std::uint32_t d = 0; d < rank; ++d)
      if (get_u32(is, name.c_str()) != static_cast<std::uint32_t>(state[i]->shape[d]))
        throw CheckpointError(Kind::kMalformed, "tensor shape mismatch for " + name);
    for (double& v : state[i]->data) v = get_f64(is, name.c_str());
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw CheckpointError(Kind::kMalformed, "trailing bytes after tensors in " + path);
  return model;
}

} // namespace cevae::vae
