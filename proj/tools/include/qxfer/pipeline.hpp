#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qxfer/eval.hpp"
#include "qxfer/mlp.hpp"
#include "qxfer/patches.hpp"
#include "qxfer/shore.hpp"
#include "qxfer/volume.hpp"

namespace qxfer {

/// End-to-end transfer experiment on synthetic subjects:
/// source subjects (dense scheme) are normalized, resampled in q-space to
/// the target scheme (and spatially downsampled first in SR mode) and used
/// to train the network; target subjects acquired with the sparse scheme
/// are then estimated by the network and by the per-voxel dictionary fit,
/// and both are scored against ground truth.
struct PipelineConfig {
  PatchMode mode = PatchMode::QDL;
  int gamma = 2;
  int in_size = 3;
  int out_size = 1;  // SR forces out_size = gamma
  Index3 dims{20, 20, 20};  // acquisition grid (high resolution in SR mode)
  std::size_t source_subjects = 5;
  std::size_t target_subjects = 10;
  double noise_sigma = 0.02;
  std::uint64_t seed = 1;
  ShoreBasisSpec shore;
  TrainConfig train;
  std::size_t threads = 0;
  bool verbose = false;

  PatchGeometry geometry(std::size_t n_signals) const;

  /// Settings used for each mode by the command line and the test suite.
  static PipelineConfig defaults(PatchMode mode);
};

struct MeasureComparison {
  std::string measure;
  double mlp_mean = 0.0;
  double mlp_sd = 0.0;
  double baseline_mean = 0.0;
  double baseline_sd = 0.0;
  TTestResult test;  // mlp - baseline
};

struct PipelineResult {
  ErrorTable errors;  // per target subject: mlp.<measure>..., baseline.<measure>...
  std::vector<MeasureComparison> comparisons;
  std::size_t training_samples = 0;
  std::size_t best_epoch = 0;
  std::vector<EpochLoss> history;
  Checkpoint checkpoint;
  // Maps of the first target subject.
  std::vector<Volume> mlp_maps;
  std::vector<Volume> baseline_maps;
  std::vector<Volume> gold_maps;
  Volume eval_mask;
  double seconds = 0.0;
};

PipelineResult run_pipeline(const PipelineConfig& config);

/// Writes maps, errors.tsv, metrics.txt and the checkpoint into `dir`.
void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineConfig& config,
                            const PipelineResult& result);

}  // namespace qxfer
