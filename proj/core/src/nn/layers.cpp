#include "cevae/nn/layers.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "cevae/parallel.hpp"

namespace cevae::nn {

namespace {

// Minimal row-major matmul kernels. Each output row is produced entirely by
// one parallel_for invocation with a fixed-order inner loop, so results do
// not depend on the worker count.

// C[i][j] += sum_k A[i][k] * B[k][j]
void mm_ab(const double* a, const double* b, double* c, int m, int k, int n) {
  parallel_for(m, [&](std::int64_t i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (int kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  });
}

// C[i][j] += dot(A[i][:], B[j][:])
void mm_abt(const double* a, const double* b, double* c, int m, int k, int n) {
  parallel_for(m, [&](std::int64_t i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] += acc;
    }
  });
}

// C[i][j] += sum_k A[k][i] * B[k][j]  (A is K x M)
void mm_atb(const double* a, const double* b, double* c, int m, int k, int n) {
  parallel_for(m, [&](std::int64_t i) {
    double* crow = c + i * n;
    for (int kk = 0; kk < k; ++kk) {
      const double av = a[static_cast<std::size_t>(kk) * m + i];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  });
}

// col[(ic,k), ol] = x[ic, s*ol + k - p], zero outside [0, L)
void im2col(const double* x, int ch, int len, int k, int s, int p, int out_len, double* col) {
  for (int ic = 0; ic < ch; ++ic) {
    const double* xrow = x + static_cast<std::size_t>(ic) * len;
    for (int kk = 0; kk < k; ++kk) {
      double* crow = col + (static_cast<std::size_t>(ic) * k + kk) * out_len;
      const int base = kk - p;
      for (int ol = 0; ol < out_len; ++ol) {
        const int il = ol * s + base;
        crow[ol] = (il >= 0 && il < len) ? xrow[il] : 0.0;
      }
    }
  }
}

// gx[ic, s*ol + k - p] += col[(ic,k), ol]
void col2im_add(const double* col, int ch, int len, int k, int s, int p, int out_len, double* gx) {
  for (int ic = 0; ic < ch; ++ic) {
    double* xrow = gx + static_cast<std::size_t>(ic) * len;
    for (int kk = 0; kk < k; ++kk) {
      const double* crow = col + (static_cast<std::size_t>(ic) * k + kk) * out_len;
      const int base = kk - p;
      for (int ol = 0; ol < out_len; ++ol) {
        const int il = ol * s + base;
        if (il >= 0 && il < len) xrow[il] += crow[ol];
      }
    }
  }
}

void check_3d(const Tensor& x, int ch, const char* who) {
  if (x.shape.size() != 3) throw std::invalid_argument(std::string(who) + ": expected [B, C, L] input");
  if (x.dim(1) != ch) throw std::invalid_argument(std::string(who) + ": channel count mismatch");
}

} // namespace

void Layer::require_cache(const char* who) const {
  if (!has_cache_) throw std::logic_error(std::string(who) + ": backward called without forward");
}

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(int in_ch, int out_ch, int kernel, int stride, int padding)
    : weight("conv.weight", {out_ch, in_ch, kernel}),
      bias("conv.bias", {out_ch}),
      in_ch_(in_ch), out_ch_(out_ch), k_(kernel), s_(stride), p_(padding) {
  if (in_ch < 1 || out_ch < 1 || kernel < 1 || stride < 1 || padding < 0)
    throw std::invalid_argument("Conv1d: invalid configuration");
}

int Conv1d::out_length(int in_length) const {
  const int l = (in_length + 2 * p_ - k_) / s_ + 1;
  if (in_length + 2 * p_ < k_ || l < 1)
    throw std::invalid_argument("Conv1d: input too short for kernel/stride/padding");
  return l;
}

Tensor Conv1d::forward(const Tensor& x, Mode) {
  check_3d(x, in_ch_, "Conv1d");
  const int batch = x.dim(0), len = x.dim(2);
  const int lo = out_length(len);
  const int f = in_ch_ * k_;
  Tensor y({batch, out_ch_, lo});
  const double* w = weight.v.ptr();
  const double* b = bias.v.ptr();
  parallel_for(batch, [&](std::int64_t bi) {
    std::vector<double> col(static_cast<std::size_t>(f) * lo);
    im2col(x.ptr() + bi * in_ch_ * len, in_ch_, len, k_, s_, p_, lo, col.data());
    double* yrow = y.ptr() + bi * out_ch_ * lo;
    for (int oc = 0; oc < out_ch_; ++oc) {
      double* out = yrow + static_cast<std::size_t>(oc) * lo;
      for (int j = 0; j < lo; ++j) out[j] = b[oc];
      const double* wrow = w + static_cast<std::size_t>(oc) * f;
      for (int ff = 0; ff < f; ++ff) {
        const double wv = wrow[ff];
        if (wv == 0.0) continue;
        const double* crow = col.data() + static_cast<std::size_t>(ff) * lo;
        for (int j = 0; j < lo; ++j) out[j] += wv * crow[j];
      }
    }
  });
  x_ = x;
  has_cache_ = true;
  return y;
}

Tensor Conv1d::backward(const Tensor& gy) {
  require_cache("Conv1d");
  const int batch = x_.dim(0), len = x_.dim(2);
  const int lo = gy.dim(2);
  const int f = in_ch_ * k_;

  // all columns at once; needed for the deterministic weight-grad reduction
  std::vector<double> cols(static_cast<std::size_t>(batch) * f * lo);
  parallel_for(batch, [&](std::int64_t bi) {
    im2col(x_.ptr() + bi * in_ch_ * len, in_ch_, len, k_, s_, p_, lo,
           cols.data() + bi * static_cast<std::size_t>(f) * lo);
  });

  double* gw = weight.g.ptr();
  double* gb = bias.g.ptr();
  parallel_for(out_ch_, [&](std::int64_t oc) {
    double* gwrow = gw + oc * f;
    double gbacc = 0.0;
    for (int bi = 0; bi < batch; ++bi) {
      const double* grow = gy.ptr() + (static_cast<std::size_t>(bi) * out_ch_ + oc) * lo;
      const double* col = cols.data() + static_cast<std::size_t>(bi) * f * lo;
      for (int ff = 0; ff < f; ++ff) {
        const double* crow = col + static_cast<std::size_t>(ff) * lo;
        double acc = 0.0;
        for (int j = 0; j < lo; ++j) acc += grow[j] * crow[j];
        gwrow[ff] += acc;
      }
      for (int j = 0; j < lo; ++j) gbacc += grow[j];
    }
    gb[oc] += gbacc;
  });

  Tensor gx({batch, in_ch_, len});
  const double* w = weight.v.ptr();
  parallel_for(batch, [&](std::int64_t bi) {
    std::vector<double> gcol(static_cast<std::size_t>(f) * lo, 0.0);
    const double* grow = gy.ptr() + bi * out_ch_ * lo;
    // gcol = W^T g
    for (int oc = 0; oc < out_ch_; ++oc) {
      const double* wrow = w + static_cast<std::size_t>(oc) * f;
      const double* g = grow + static_cast<std::size_t>(oc) * lo;
      for (int ff = 0; ff < f; ++ff) {
        const double wv = wrow[ff];
        if (wv == 0.0) continue;
        double* crow = gcol.data() + static_cast<std::size_t>(ff) * lo;
        for (int j = 0; j < lo; ++j) crow[j] += wv * g[j];
      }
    }
    col2im_add(gcol.data(), in_ch_, len, k_, s_, p_, lo, gx.ptr() + bi * in_ch_ * len);
  });
  has_cache_ = false;
  return gx;
}

void Conv1d::collect_params(std::vector<Param*>& ps) {
  ps.push_back(&weight);
  ps.push_back(&bias);
}

void Conv1d::collect_state(std::vector<Tensor*>& ts, std::vector<std::string>& names) {
  ts.push_back(&weight.v); names.push_back(weight.name);
  ts.push_back(&bias.v);   names.push_back(bias.name);
}

// ---------------------------------------------------------------------------
// ConvTranspose1d

ConvTranspose1d::ConvTranspose1d(int in_ch, int out_ch, int kernel, int stride, int padding,
                                 int output_padding)
    : weight("convt.weight", {in_ch, out_ch, kernel}),
      bias("convt.bias", {out_ch}),
      in_ch_(in_ch), out_ch_(out_ch), k_(kernel), s_(stride), p_(padding), op_(output_padding) {
  if (in_ch < 1 || out_ch < 1 || kernel < 1 || stride < 1 || padding < 0 || output_padding < 0)
    throw std::invalid_argument("ConvTranspose1d: invalid configuration");
  if (output_padding >= stride)
    throw std::invalid_argument("ConvTranspose1d: output_padding must be smaller than stride");
}

int ConvTranspose1d::out_length(int in_length) const {
  const int l = (in_length - 1) * s_ - 2 * p_ + k_ + op_;
  if (l < 1) throw std::invalid_argument("ConvTranspose1d: configuration yields empty output");
  return l;
}

Tensor ConvTranspose1d::forward(const Tensor& x, Mode) {
  check_3d(x, in_ch_, "ConvTranspose1d");
  const int batch = x.dim(0), len = x.dim(2);
  const int lo = out_length(len);
  const int f = out_ch_ * k_;
  Tensor y({batch, out_ch_, lo});
  const double* w = weight.v.ptr();
  const double* b = bias.v.ptr();
  parallel_for(batch, [&](std::int64_t bi) {
    // Y[(oc,k), ji] = sum_ic W[ic][(oc,k)] x[ic][ji], then scatter-add
    std::vector<double> yf(static_cast<std::size_t>(f) * len, 0.0);
    const double* xrow = x.ptr() + bi * in_ch_ * len;
    for (int ic = 0; ic < in_ch_; ++ic) {
      const double* wrow = w + static_cast<std::size_t>(ic) * f;
      const double* xr = xrow + static_cast<std::size_t>(ic) * len;
      for (int ff = 0; ff < f; ++ff) {
        const double wv = wrow[ff];
        if (wv == 0.0) continue;
        double* yrow = yf.data() + static_cast<std::size_t>(ff) * len;
        for (int j = 0; j < len; ++j) yrow[j] += wv * xr[j];
      }
    }
    double* out = y.ptr() + bi * out_ch_ * lo;
    for (int oc = 0; oc < out_ch_; ++oc) {
      double* orow = out + static_cast<std::size_t>(oc) * lo;
      for (int j = 0; j < lo; ++j) orow[j] = b[oc];
      for (int kk = 0; kk < k_; ++kk) {
        const double* yrow = yf.data() + (static_cast<std::size_t>(oc) * k_ + kk) * len;
        const int base = kk - p_;
        for (int ji = 0; ji < len; ++ji) {
          const int jo = ji * s_ + base;
          if (jo >= 0 && jo < lo) orow[jo] += yrow[ji];
        }
      }
    }
  });
  x_ = x;
  has_cache_ = true;
  return y;
}

Tensor ConvTranspose1d::backward(const Tensor& gy) {
  require_cache("ConvTranspose1d");
  const int batch = x_.dim(0), len = x_.dim(2);
  const int lo = gy.dim(2);
  const int f = out_ch_ * k_;

  // colg[(oc,k), ji] = gy[oc, s*ji + k - p]
  std::vector<double> cols(static_cast<std::size_t>(batch) * f * len);
  parallel_for(batch, [&](std::int64_t bi) {
    im2col(gy.ptr() + bi * out_ch_ * lo, out_ch_, lo, k_, s_, p_, len,
           cols.data() + bi * static_cast<std::size_t>(f) * len);
  });

  double* gw = weight.g.ptr();
  parallel_for(in_ch_, [&](std::int64_t ic) {
    double* gwrow = gw + ic * f;
    for (int bi = 0; bi < batch; ++bi) {
      const double* xr = x_.ptr() + (static_cast<std::size_t>(bi) * in_ch_ + ic) * len;
      const double* col = cols.data() + static_cast<std::size_t>(bi) * f * len;
      for (int ff = 0; ff < f; ++ff) {
        const double* crow = col + static_cast<std::size_t>(ff) * len;
        double acc = 0.0;
        for (int j = 0; j < len; ++j) acc += xr[j] * crow[j];
        gwrow[ff] += acc;
      }
    }
  });

  double* gb = bias.g.ptr();
  parallel_for(out_ch_, [&](std::int64_t oc) {
    double acc = 0.0;
    for (int bi = 0; bi < batch; ++bi) {
      const double* grow = gy.ptr() + (static_cast<std::size_t>(bi) * out_ch_ + oc) * lo;
      for (int j = 0; j < lo; ++j) acc += grow[j];
    }
    gb[oc] += acc;
  });

  Tensor gx({batch, in_ch_, len});
  const double* w = weight.v.ptr();
  parallel_for(batch, [&](std::int64_t bi) {
    const double* col = cols.data() + static_cast<std::size_t>(bi) * f * len;
    double* gxrow = gx.ptr() + bi * in_ch_ * len;
    // gx = W colg
    for (int ic = 0; ic < in_ch_; ++ic) {
      double* gr = gxrow + static_cast<std::size_t>(ic) * len;
      const double* wrow = w + static_cast<std::size_t>(ic) * f;
      for (int ff = 0; ff < f; ++ff) {
        const double wv = wrow[ff];
        if (wv == 0.0) continue;
        const double* crow = col + static_cast<std::size_t>(ff) * len;
        for (int j = 0; j < len; ++j) gr[j] += wv * crow[j];
      }
    }
  });
  has_cache_ = false;
  return gx;
}

void ConvTranspose1d::collect_params(std::vector<Param*>& ps) {
  ps.push_back(&weight);
  ps.push_back(&bias);
}

void ConvTranspose1d::collect_state(std::vector<Tensor*>& ts, std::vector<std::string>& names) {
  ts.push_back(&weight.v); names.push_back(weight.name);
  ts.push_back(&bias.v);   names.push_back(bias.name);
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(int in, int out)
    : weight("dense.weight", {out, in}), bias("dense.bias", {out}), in_(in), out_(out) {
  if (in < 1 || out < 1) throw std::invalid_argument("Dense: invalid configuration");
}

Tensor Dense::forward(const Tensor& x, Mode) {
  if (x.shape.size() != 2 || x.dim(1) != in_)
    throw std::invalid_argument("Dense: expected [B, in] input");
  const int batch = x.dim(0);
  Tensor y({batch, out_});
  const double* b = bias.v.ptr();
  parallel_for(batch, [&](std::int64_t bi) {
    double* yrow = y.ptr() + bi * out_;
    for (int o = 0; o < out_; ++o) yrow[o] = b[o];
  });
  mm_abt(x.ptr(), weight.v.ptr(), y.ptr(), batch, in_, out_);
  x_ = x;
  has_cache_ = true;
  return y;
}

Tensor Dense::backward(const Tensor& gy) {
  require_cache("Dense");
  const int batch = x_.dim(0);
  // gW[o][i] = sum_b gy[b][o] x[b][i]
  mm_atb(gy.ptr(), x_.ptr(), weight.g.ptr(), out_, batch, in_);
  double* gb = bias.g.ptr();
  parallel_for(out_, [&](std::int64_t o) {
    double acc = 0.0;
    for (int bi = 0; bi < batch; ++bi) acc += gy.ptr()[static_cast<std::size_t>(bi) * out_ + o];
    gb[o] += acc;
  });
  Tensor gx({batch, in_});
  mm_ab(gy.ptr(), weight.v.ptr(), gx.ptr(), batch, out_, in_);
  has_cache_ = false;
  return gx;
}

void Dense::collect_params(std::vector<Param*>& ps) {
  ps.push_back(&weight);
  ps.push_back(&bias);
}

void Dense::collect_state(std::vector<Tensor*>& ts, std::vector<std::string>& names) {
  ts.push_back(&weight.v); names.push_back(weight.name);
  ts.push_back(&bias.v);   names.push_back(bias.name);
}

// ---------------------------------------------------------------------------
// BatchNorm1d

BatchNorm1d::BatchNorm1d(int channels, double momentum, double eps)
    : gamma("bn.gamma", {channels}),
      beta("bn.beta", {channels}),
      running_mean({channels}),
      running_var({channels}),
      ch_(channels), momentum_(momentum), eps_(eps) {
  if (channels < 1) throw std::invalid_argument("BatchNorm1d: invalid channel count");
  for (int c = 0; c < channels; ++c) {
    gamma.v.data[static_cast<std::size_t>(c)] = 1.0;
    running_var.data[static_cast<std::size_t>(c)] = 1.0;
  }
}

Tensor BatchNorm1d::forward(const Tensor& x, Mode mode) {
  check_3d(x, ch_, "BatchNorm1d");
  const int batch = x.dim(0), len = x.dim(2);
  mode_ = mode;
  if (mode == Mode::kTrain && batch < 2)
    throw std::invalid_argument("BatchNorm1d: training requires batch size >= 2");

  Tensor y({batch, ch_, len});
  xhat_ = Tensor({batch, ch_, len});
  inv_std_.assign(static_cast<std::size_t>(ch_), 0.0);
  const double n = static_cast<double>(batch) * len;

  parallel_for(ch_, [&](std::int64_t c) {
    double mean, var;
    if (mode == Mode::kTrain) {
      double s = 0.0;
      for (int bi = 0; bi < batch; ++bi) {
        const double* xr = x.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
        for (int j = 0; j < len; ++j) s += xr[j];
      }
      mean = s / n;
      double sq = 0.0;
      for (int bi = 0; bi < batch; ++bi) {
        const double* xr = x.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
        for (int j = 0; j < len; ++j) {
          const double d = xr[j] - mean;
          sq += d * d;
        }
      }
      var = sq / n;
      const double unbiased = n > 1.0 ? sq / (n - 1.0) : var;
      running_mean.data[c] = (1.0 - momentum_) * running_mean.data[c] + momentum_ * mean;
      running_var.data[c] = (1.0 - momentum_) * running_var.data[c] + momentum_ * unbiased;
    } else {
      mean = running_mean.data[c];
      var = running_var.data[c];
    }
    const double istd = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = istd;
    const double g = gamma.v.data[c], b = beta.v.data[c];
    for (int bi = 0; bi < batch; ++bi) {
      const double* xr = x.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
      double* hr = xhat_.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
      double* yr = y.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
      for (int j = 0; j < len; ++j) {
        const double h = (xr[j] - mean) * istd;
        hr[j] = h;
        yr[j] = g * h + b;
      }
    }
  });
  has_cache_ = true;
  return y;
}

Tensor BatchNorm1d::backward(const Tensor& gy) {
  require_cache("BatchNorm1d");
  const int batch = gy.dim(0), len = gy.dim(2);
  const double n = static_cast<double>(batch) * len;
  Tensor gx({batch, ch_, len});

  parallel_for(ch_, [&](std::int64_t c) {
    double sg = 0.0, sgh = 0.0;
    for (int bi = 0; bi < batch; ++bi) {
      const double* gr = gy.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
      const double* hr = xhat_.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
      for (int j = 0; j < len; ++j) {
        sg += gr[j];
        sgh += gr[j] * hr[j];
      }
    }
    gamma.g.data[c] += sgh;
    beta.g.data[c] += sg;
    const double g = gamma.v.data[c];
    const double istd = inv_std_[c];
    if (mode_ == Mode::kTrain) {
      const double mg = sg / n, mgh = sgh / n;
      for (int bi = 0; bi < batch; ++bi) {
        const double* gr = gy.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
        const double* hr = xhat_.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
        double* xr = gx.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
        for (int j = 0; j < len; ++j) xr[j] = g * istd * (gr[j] - mg - hr[j] * mgh);
      }
    } else {
      for (int bi = 0; bi < batch; ++bi) {
        const double* gr = gy.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
        double* xr = gx.ptr() + (static_cast<std::size_t>(bi) * ch_ + c) * len;
        for (int j = 0; j < len; ++j) xr[j] = g * istd * gr[j];
      }
    }
  });
  has_cache_ = false;
  return gx;
}

void BatchNorm1d::collect_params(std::vector<Param*>& ps) {
  ps.push_back(&gamma);
  ps.push_back(&beta);
}

void BatchNorm1d::collect_state(std::vector<Tensor*>& ts, std::vector<std::string>& names) {
  ts.push_back(&gamma.v);       names.push_back(gamma.name);
  ts.push_back(&beta.v);        names.push_back(beta.name);
  ts.push_back(&running_mean);  names.push_back("bn.running_mean");
  ts.push_back(&running_var);   names.push_back("bn.running_var");
}

// ---------------------------------------------------------------------------
// ReLU, Flatten

Tensor ReLU::forward(const Tensor& x, Mode) {
  Tensor y = x;
  mask_.assign(x.numel(), 0);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    if (y.data[i] > 0.0) {
      mask_[i] = 1;
    } else {
      y.data[i] = 0.0;
    }
  }
  shape_ = x.shape;
  has_cache_ = true;
  return y;
}

Tensor ReLU::backward(const Tensor& gy) {
  require_cache("ReLU");
  Tensor gx = gy;
  for (std::size_t i = 0; i < gx.data.size(); ++i)
    if (!mask_[i]) gx.data[i] = 0.0;
  has_cache_ = false;
  return gx;
}

Tensor Flatten::forward(const Tensor& x, Mode) {
  if (x.shape.size() != 3) throw std::invalid_argument("Flatten: expected [B, C, L] input");
  in_shape_ = x.shape;
  Tensor y = x;
  y.reshape({x.dim(0), x.dim(1) * x.dim(2)});
  has_cache_ = true;
  return y;
}

Tensor Flatten::backward(const Tensor& gy) {
  require_cache("Flatten");
  Tensor gx = gy;
  gx.reshape(in_shape_);
  has_cache_ = false;
  return gx;
}

// ---------------------------------------------------------------------------
// LayerStack

Tensor LayerStack::forward(const Tensor& x, Mode mode) {
  Tensor cur = x;
  for (auto& l : layers_) cur = l->forward(cur, mode);
  return cur;
}

Tensor LayerStack::backward(const Tensor& gy) {
  Tensor cur = gy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

std::vector<Param*> LayerStack::params() {
  std::vector<Param*> ps;
  for (auto& l : layers_) l->collect_params(ps);
  return ps;
}

void LayerStack::collect_state(std::vector<Tensor*>& ts, std::vector<std::string>& names) {
  for (auto& l : layers_) l->collect_state(ts, names);
}

} // namespace cevae::nn
