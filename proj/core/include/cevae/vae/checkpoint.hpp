#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "cevae/vae/model.hpp"

namespace cevae::vae {

class CheckpointError : public std::runtime_error {
public:
  enum class Kind { kIo, kBadMagic, kBadVersion, kTruncated, kMalformed };
  CheckpointError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

// Binary model snapshot: configuration, epoch counter, then every state
// tensor (parameters and batch-norm running statistics) in declaration order
// with its name and dims. Values are raw f64 little-endian, so a save/load
// round trip is bit-exact. Optimizer state is not stored; resuming or
// fine-tuning starts a fresh optimizer.
void save_model(VaeModel& model, int epochs_trained, const std::string& path);

// Rebuilds the architecture from the stored configuration and overwrites all
// state. Tensor names and shapes are cross-checked against the rebuilt model
// and mismatch is an error, not a best-effort load.
std::unique_ptr<VaeModel> load_model(const std::string& path, int* epochs_trained = nullptr);

} // namespace cevae::vae
