#include "cevae/vae/model.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "cevae/linalg/hermitian.hpp"
#include "cevae/parallel.hpp"
#include "cevae/rng.hpp"

namespace cevae::vae {

namespace {

// [B, C*L] <-> [B, C, L] bridge between the decoder's dense input and its
// transposed-convolution stages
class Unflatten final : public nn::Layer {
public:
  Unflatten(int ch, int len) : ch_(ch), len_(len) {}

  nn::Tensor forward(const nn::Tensor& x, nn::Mode) override {
    if (x.shape.size() != 2 || x.dim(1) != ch_ * len_)
      throw std::invalid_argument("Unflatten: input width mismatch");
    nn::Tensor y = x;
    y.reshape({x.dim(0), ch_, len_});
    has_cache_ = true;
    return y;
  }

  nn::Tensor backward(const nn::Tensor& gy) override {
    require_cache("Unflatten");
    nn::Tensor gx = gy;
    gx.reshape({gy.dim(0), ch_ * len_});
    has_cache_ = false;
    return gx;
  }

  std::string kind() const override { return "Unflatten"; }

private:
  int ch_, len_;
};

void validate(const VaeConfig& cfg) {
  if (cfg.base_channels < 1) throw std::invalid_argument("VaeConfig: base_channels must be >= 1");
  if (cfg.latent_dim < 1) throw std::invalid_argument("VaeConfig: latent_dim must be >= 1");
  if (cfg.conv_blocks < 1) throw std::invalid_argument("VaeConfig: conv_blocks must be >= 1");
  if (cfg.kernel < 1 || cfg.kernel % 2 == 0)
    throw std::invalid_argument("VaeConfig: kernel must be odd");
  if (cfg.padding != (cfg.kernel - 1) / 2)
    throw std::invalid_argument("VaeConfig: padding must be (kernel - 1) / 2");
  if (cfg.geo.n() < 1 || cfg.geo.n() % (1 << cfg.conv_blocks) != 0)
    throw std::invalid_argument("VaeConfig: array size must be divisible by 2^conv_blocks");
}

void rename_params(nn::Layer& l, const std::string& prefix) {
  std::vector<nn::Param*> ps;
  l.collect_params(ps);
  for (nn::Param* p : ps) {
    const auto dot = p->name.rfind('.');
    p->name = prefix + "." + (dot == std::string::npos ? p->name : p->name.substr(dot + 1));
  }
}

// uniform (-1/sqrt(fan_in), 1/sqrt(fan_in)), one stream per tensor ordinal
void init_uniform(nn::Tensor& t, int fan_in, std::uint64_t seed, std::uint64_t ordinal) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  RngStream rng(seed, domain::kInit, ordinal);
  for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * bound;
}

} // namespace

std::vector<int> VaeConfig::widths() const {
  std::vector<int> w{base_channels};
  for (int i = 0; i < conv_blocks; ++i)
    w.push_back(static_cast<int>(std::lround(1.75 * w.back())));
  return w;
}

VaeModel::VaeModel(const VaeConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  validate(cfg);
  const std::vector<int> w = cfg.widths();
  const int n = cfg.geo.n();
  const int k = cfg.kernel, p = cfg.padding;
  const int len_min = n >> cfg.conv_blocks;
  const int flat = w.back() * len_min;
  std::uint64_t ord = 0; // every parameter tensor advances it, drawn or not

  auto add_conv = [&](nn::LayerStack& s, int ic, int oc, int kk, int st, int pp,
                      const std::string& name) {
    auto l = std::make_unique<nn::Conv1d>(ic, oc, kk, st, pp);
    init_uniform(l->weight.v, ic * kk, seed, ord);
    ord += 2; // weight, bias (bias stays zero)
    rename_params(*l, name);
    s.add(std::move(l));
  };
  auto add_convt = [&](nn::LayerStack& s, int ic, int oc, int st, int op,
                       const std::string& name) {
    auto l = std::make_unique<nn::ConvTranspose1d>(ic, oc, k, st, p, op);
    init_uniform(l->weight.v, ic * k, seed, ord);
    ord += 2;
    rename_params(*l, name);
    s.add(std::move(l));
  };
  auto add_bn = [&](nn::LayerStack& s, int ch, const std::string& name) {
    auto l = std::make_unique<nn::BatchNorm1d>(ch);
    ord += 2; // gamma, beta keep their static init
    rename_params(*l, name);
    s.add(std::move(l));
  };
  auto add_dense = [&](nn::LayerStack& s, int in, int out, bool zero, const std::string& name) {
    auto l = std::make_unique<nn::Dense>(in, out);
    if (!zero) init_uniform(l->weight.v, in, seed, ord);
    ord += 2;
    rename_params(*l, name);
    s.add(std::move(l));
  };

  // encoder: 1x1 embed, strided conv blocks, flatten, posterior head
  add_conv(enc_, 2, w[0], 1, 1, 0, "enc.embed");
  for (int i = 0; i < cfg.conv_blocks; ++i) {
    const std::string b = "enc.block" + std::to_string(i + 1);
    add_conv(enc_, w[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(i) + 1], k, 2, p,
             b + ".conv");
    add_bn(enc_, w[static_cast<std::size_t>(i) + 1], b + ".bn");
    enc_.add(std::make_unique<nn::ReLU>());
  }
  enc_.add(std::make_unique<nn::Flatten>());
  add_dense(enc_, flat, 2 * cfg.latent_dim, true, "enc.head");

  // decoder: dense lift, mirrored transposed blocks, channel reducer,
  // moment head
  add_dense(dec_, cfg.latent_dim, flat, false, "dec.dense");
  dec_.add(std::make_unique<Unflatten>(w.back(), len_min));
  for (int i = cfg.conv_blocks; i > 0; --i) {
    const std::string b = "dec.block" + std::to_string(cfg.conv_blocks - i + 1);
    add_convt(dec_, w[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(i) - 1], 2, 1,
              b + ".convt");
    add_bn(dec_, w[static_cast<std::size_t>(i) - 1], b + ".bn");
    dec_.add(std::make_unique<nn::ReLU>());
  }
  add_convt(dec_, w[0], 3, 1, 0, "dec.final.convt");
  dec_.add(std::make_unique<nn::Flatten>());
  add_dense(dec_, 3 * n, 6 * n, true, "dec.head");

  qdense_ = linalg::dense_q(cfg.geo);
}

nn::Tensor VaeModel::encode(const nn::Tensor& x, nn::Mode mode) { return enc_.forward(x, mode); }
nn::Tensor VaeModel::encoder_backward(const nn::Tensor& g) { return enc_.backward(g); }
nn::Tensor VaeModel::decode(const nn::Tensor& z, nn::Mode mode) { return dec_.forward(z, mode); }
nn::Tensor VaeModel::decoder_backward(const nn::Tensor& g) { return dec_.backward(g); }

std::vector<nn::Param*> VaeModel::params() {
  std::vector<nn::Param*> ps = enc_.params();
  std::vector<nn::Param*> dp = dec_.params();
  ps.insert(ps.end(), dp.begin(), dp.end());
  return ps;
}

std::size_t VaeModel::param_count() {
  std::size_t total = 0;
  for (const nn::Param* p : params()) total += p->v.numel();
  return total;
}

void VaeModel::collect_state(std::vector<nn::Tensor*>& ts, std::vector<std::string>& names) {
  enc_.collect_state(ts, names);
  dec_.collect_state(ts, names);
}

nn::Tensor VaeModel::pack(const std::vector<const Complex*>& ys, int n) {
  nn::Tensor x({static_cast<int>(ys.size()), 2, n});
  for (std::size_t b = 0; b < ys.size(); ++b) {
    double* re = x.ptr() + b * 2 * static_cast<std::size_t>(n);
    double* im = re + n;
    for (int i = 0; i < n; ++i) {
      re[i] = ys[b][i].real();
      im[i] = ys[b][i].imag();
    }
  }
  return x;
}

void VaeModel::split_moments(const double* row, ComplexVec& mu, std::vector<double>& c) const {
  const int n = cfg_.geo.n();
  mu.resize(static_cast<std::size_t>(n));
  c.resize(4u * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) mu[static_cast<std::size_t>(i)] = Complex(row[i], row[n + i]);
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::exp(row[2 * static_cast<std::size_t>(n) + j]);
}

ComplexVec VaeModel::estimate(const Complex* y, double noise_var) {
  return estimate_batch({y}, {noise_var})[0];
}

std::vector<ComplexVec> VaeModel::estimate_batch(const std::vector<const Complex*>& ys,
                                                 const std::vector<double>& noise_var) {
  if (ys.size() != noise_var.size())
    throw std::invalid_argument("estimate_batch: one noise variance per sample");
  const int n = cfg_.geo.n();
  const int batch = static_cast<int>(ys.size());
  const nn::Tensor enc = encode(pack(ys, n), nn::Mode::kEval);
  nn::Tensor z({batch, cfg_.latent_dim});
  for (int b = 0; b < batch; ++b)
    for (int l = 0; l < cfg_.latent_dim; ++l)
      z.ptr()[static_cast<std::size_t>(b) * cfg_.latent_dim + l] =
          enc.ptr()[static_cast<std::size_t>(b) * 2 * cfg_.latent_dim + l];
  const nn::Tensor dec = decode(z, nn::Mode::kEval);

  std::vector<ComplexVec> out(ys.size());
  parallel_for(batch, [&](std::int64_t b) {
    ComplexVec mu;
    std::vector<double> c;
    split_moments(dec.ptr() + static_cast<std::size_t>(b) * 6 * n, mu, c);
    linalg::HermitianMatrix ct = linalg::block_toeplitz_from_c(cfg_.geo, c);
    ct.add_scaled_identity(noise_var[static_cast<std::size_t>(b)]);
    const linalg::Cholesky chol(ct);
    ComplexVec r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = ys[static_cast<std::size_t>(b)][i] - mu[static_cast<std::size_t>(i)];
    chol.solve_inplace(r.data());
    ComplexVec h(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      h[static_cast<std::size_t>(i)] =
          ys[static_cast<std::size_t>(b)][i] - noise_var[static_cast<std::size_t>(b)] * r[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(b)] = std::move(h);
  });
  return out;
}

} // namespace cevae::vae
