#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cevae/nn/tensor.hpp"

namespace cevae::nn {

enum class Mode { kTrain, kEval };

// Layers cache whatever the matching backward pass needs during forward.
// backward() must see the gradient of the loss with respect to the forward
// output and returns the gradient with respect to the forward input, adding
// parameter gradients into Param::g. Calling backward without a preceding
// forward is a usage error and throws.
class Layer {
public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor backward(const Tensor& gy) = 0;
  virtual std::string kind() const = 0;

  // learnable parameters, declaration order
  virtual void collect_params(std::vector<Param*>&) {}
  // learnable parameters plus persistent buffers (running statistics);
  // defines the checkpoint serialization order
  virtual void collect_state(std::vector<Tensor*>&, std::vector<std::string>&) {}

protected:
  bool has_cache_ = false;
  void require_cache(const char* who) const;
};

using LayerPtr = std::unique_ptr<Layer>;

// 1-D convolution (cross-correlation), input [B, C_in, L], output
// [B, C_out, L_out] with L_out = (L + 2p - k) / s + 1 (floor).
class Conv1d : public Layer {
public:
  Conv1d(int in_ch, int out_ch, int kernel, int stride, int padding);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "Conv1d"; }
  void collect_params(std::vector<Param*>& ps) override;
  void collect_state(std::vector<Tensor*>& ts, std::vector<std::string>& names) override;

  int out_length(int in_length) const;
  Param weight; // [out_ch, in_ch, k]
  Param bias;   // [out_ch]

private:
  int in_ch_, out_ch_, k_, s_, p_;
  Tensor x_;
};

// Transposed 1-D convolution, the adjoint of Conv1d's linear map. Input
// [B, C_in, L], output length (L - 1) s - 2p + k + output_padding.
class ConvTranspose1d : public Layer {
public:
  ConvTranspose1d(int in_ch, int out_ch, int kernel, int stride, int padding, int output_padding);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "ConvTranspose1d"; }
  void collect_params(std::vector<Param*>& ps) override;
  void collect_state(std::vector<Tensor*>& ts, std::vector<std::string>& names) override;

  int out_length(int in_length) const;
  Param weight; // [in_ch, out_ch, k]
  Param bias;   // [out_ch]

private:
  int in_ch_, out_ch_, k_, s_, p_, op_;
  Tensor x_;
};

// Fully connected layer, input [B, in], output [B, out]
class Dense : public Layer {
public:
  Dense(int in, int out);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "Dense"; }
  void collect_params(std::vector<Param*>& ps) override;
  void collect_state(std::vector<Tensor*>& ts, std::vector<std::string>& names) override;

  Param weight; // [out, in]
  Param bias;   // [out]

private:
  int in_, out_;
  Tensor x_;
};

// Per-channel batch normalization over (batch, length) positions. Training
// mode uses biased batch statistics and maintains running estimates with the
// given momentum (running variance stored unbiased); eval mode normalizes
// with the running estimates. Training on a batch of size 1 throws.
class BatchNorm1d : public Layer {
public:
  explicit BatchNorm1d(int channels, double momentum = 0.1, double eps = 1e-5);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "BatchNorm1d"; }
  void collect_params(std::vector<Param*>& ps) override;
  void collect_state(std::vector<Tensor*>& ts, std::vector<std::string>& names) override;

  Param gamma; // [C]
  Param beta;  // [C]
  Tensor running_mean;
  Tensor running_var;

private:
  int ch_;
  double momentum_, eps_;
  Mode mode_ = Mode::kTrain;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

class ReLU : public Layer {
public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "ReLU"; }

private:
  std::vector<unsigned char> mask_;
  std::vector<int> shape_;
};

// [B, C, L] -> [B, C*L]
class Flatten : public Layer {
public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "Flatten"; }

private:
  std::vector<int> in_shape_;
};

// Sequential container; owns its layers.
class LayerStack {
public:
  void add(LayerPtr l) { layers_.push_back(std::move(l)); }
  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& gy);
  std::vector<Param*> params();
  void collect_state(std::vector<Tensor*>& ts, std::vector<std::string>& names);
  std::size_t size() const { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_[i]; }
  const Layer& at(std::size_t i) const { return *layers_[i]; }

private:
  std::vector<LayerPtr> layers_;
};

} // namespace cevae::nn
