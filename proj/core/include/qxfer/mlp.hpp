#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qxfer/patches.hpp"
#include "qxfer/volume.hpp"

namespace qxfer {

/// Fully connected network: rectifier on hidden layers, identity output.
struct MlpModel {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  std::vector<Eigen::MatrixXd> weights;  // weights[i] is sizes[i+1] x sizes[i]
  std::vector<Eigen::VectorXd> biases;
  std::uint64_t seed = 0;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;
};

/// He-style initialization (weights ~ N(0, 2 / fan_in)), zero biases.
/// Throws std::invalid_argument for fewer than two layers or a zero width.
MlpModel init_mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

/// Default architecture: 3 hidden layers of 150 units.
std::vector<std::size_t> default_layer_sizes(std::size_t inputs, std::size_t outputs);

Eigen::VectorXd forward(const MlpModel& model, std::span<const double> input);
/// Column-per-sample batch forward pass.
Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

struct LossAndGradients {
  double mse = 0.0;
  Gradients gradients;
};

/// Mean squared error over samples and output units, with its exact
/// gradient by reverse-mode accumulation. Inputs/targets hold one sample per
/// column.
LossAndGradients loss_and_gradients(const MlpModel& model,
                                    const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                    const Eigen::Ref<const Eigen::MatrixXd>& targets);
LossAndGradients loss_and_gradients(const MlpModel& model, std::span<const PatchSample> batch);

double mean_squared_error(const MlpModel& model, const SampleSet& samples,
                          std::span<const std::size_t> indices);

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochLoss {
  double train = 0.0;
  double validation = 0.0;
};

struct TrainResult {
  MlpModel model;  // parameters of the epoch with the lowest validation loss
  std::vector<EpochLoss> history;
  std::size_t best_epoch = 0;
};

/// Mini-batch SGD with momentum on a seeded split/shuffle. Single-threaded
/// and bitwise deterministic for a given seed.
TrainResult train(MlpModel model, const SampleSet& samples, const TrainConfig& config);

struct PredictOptions {
  std::size_t threads = 0;
  std::size_t stride = 1;  // centre-grid stride
};

/// Sliding-window prediction over a normalized volume whose scheme matches
/// the trained geometry. Returns n_measures maps on the output grid (the
/// input grid for q-DL, gamma x the input grid for SR).
std::vector<Volume> predict_volume(const MlpModel& model, const DwiVolume& dwi, const Volume& mask,
                                   const PatchGeometry& geometry,
                                   const PredictOptions& options = {});

/// Model plus the configuration and sample geometry it was trained with.
struct Checkpoint {
  MlpModel model;
  TrainConfig config;
  PatchGeometry geometry;
};

/// Binary checkpoint, little-endian:
///   char[8] "QXMLP001", u32 version (1), u32 layer count, u64 sizes[],
///   u64 model seed, training config (u64 epochs, u64 batch, f64 lr,
///   f64 momentum, f64 validation fraction, u64 seed), geometry (u32 mode,
///   u32 in, u32 out, u32 gamma, u64 signals, u64 measures), then per layer
///   the row-major f64 weights followed by the f64 biases.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qxfer
