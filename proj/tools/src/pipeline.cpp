#include "qxfer/pipeline.hpp"

#include <chrono>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qxfer/baseline.hpp"
#include "qxfer/error.hpp"
#include "qxfer/nifti.hpp"
#include "qxfer/resample.hpp"
#include "qxfer/synth.hpp"

namespace qxfer {
namespace {

// Seed offsets keep source and target subjects disjoint.
constexpr std::uint64_t kSourceStride = 1000;
constexpr std::uint64_t kTargetOffset = 500000;

struct Acquisition {
  NormalizedDwi data;
  Volume mask;                   // on the network input grid
  std::vector<Volume> measures;  // on the output grid
  Volume output_mask;
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(9) << v;
  return ss.str();
}

Volume intersect(const Volume& a, const Volume& b) {
  Volume out(a.header());
  for (std::size_t v = 0; v < a.voxel_count(); ++v)
    out.data()[v] = (a.data()[v] != 0.0 && b.data()[v] != 0.0) ? 1.0 : 0.0;
  return out;
}

// One subject as seen by the network: b0-normalized, downsampled in SR mode.
Acquisition acquire(const PipelineConfig& cfg, std::uint64_t subject_seed, bool source) {
  const GradientScheme src = default_source_scheme();
  const GradientScheme dst = default_target_scheme();
  const PhantomConfig pc = random_subject_config(cfg.dims, subject_seed, cfg.noise_sigma);

  Acquisition acq;
  if (cfg.mode == PatchMode::QDL) {
    Phantom ph = generate(pc, src, dst, cfg.threads);
    acq.data = normalize_b0(source ? ph.source : ph.target);
    acq.mask = ph.mask;
    acq.output_mask = std::move(ph.mask);
    acq.measures = std::move(ph.measures);
    return acq;
  }

  // SR: noiseless high-resolution truth, block-mean downsampled, then noise
  // at the acquired (low) resolution.
  PhantomConfig clean = pc;
  clean.noise_sigma = 0.0;
  Phantom ph = generate(clean, src, dst, cfg.threads);
  const DwiVolume& hr = source ? ph.source : ph.target;
  DwiVolume lr{block_mean_downsample(hr.image, cfg.gamma), hr.scheme};
  acq.mask = downsample_mask(ph.mask, cfg.gamma);
  add_rician_noise(lr.image, acq.mask, cfg.noise_sigma, 1.0, subject_seed ^ (source ? 0x1ULL : 0x2ULL),
                   cfg.threads);
  acq.data = normalize_b0(lr);
  // Truth on the cropped high-resolution grid that the low-resolution grid tiles.
  Index3 hr_dims = acq.mask.dims();
  for (auto& d : hr_dims) d *= static_cast<std::size_t>(cfg.gamma);
  auto crop = [&](const Volume& v) {
    Volume out(VolumeHeader::make(hr_dims, 1, v.header().voxel_size, v.header().datatype));
    out.header().description = v.header().description;
    for (std::size_t z = 0; z < hr_dims[2]; ++z)
      for (std::size_t y = 0; y < hr_dims[1]; ++y)
        for (std::size_t x = 0; x < hr_dims[0]; ++x) out.at(x, y, z) = v.at(x, y, z);
    return out;
  };
  for (const Volume& m : ph.measures) acq.measures.push_back(crop(m));
  acq.output_mask = crop(ph.mask);
  return acq;
}

}  // namespace

PatchGeometry PipelineConfig::geometry(std::size_t n_signals) const {
  if (mode == PatchMode::SR) return PatchGeometry::sr(n_signals, kMeasureNames.size(), gamma, in_size, gamma);
  return PatchGeometry::qdl(n_signals, kMeasureNames.size(), in_size, out_size);
}

PipelineConfig PipelineConfig::defaults(PatchMode mode) {
  PipelineConfig c;
  c.mode = mode;
  c.train.learning_rate = 0.02;
  if (mode == PatchMode::SR) {
    c.dims = {28, 28, 28};
    c.train.epochs = 40;
  } else {
    c.dims = {20, 20, 20};
    c.train.epochs = 60;
  }
  return c;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.source_subjects < 1) throw std::invalid_argument("pipeline needs at least one source subject");
  if (cfg.target_subjects < 2) throw std::invalid_argument("pipeline needs at least two target subjects");
  cfg.shore.validate();
  cfg.train.validate();

  const GradientScheme target_scheme = default_target_scheme();
  const GradientScheme target_dw = target_scheme.subset(target_scheme.dw_indices());
  const PatchGeometry geometry = cfg.geometry(target_dw.size());
  geometry.validate();

  auto log = [&](const std::string& msg) {
    if (cfg.verbose) std::cerr << "[pipeline] " << msg << '\n';
  };

  // Training pairs: source subjects mapped onto the target scheme.
  SampleSet samples(geometry);
  ResampleOptions ropt;
  ropt.threads = cfg.threads;
  for (std::size_t s = 0; s < cfg.source_subjects; ++s) {
    const Acquisition acq = acquire(cfg, cfg.seed * kSourceStride + s, true);
    const DwiVolume mapped = resample_qspace(acq.data.dwi, acq.mask, cfg.shore, target_dw, ropt);
    if (cfg.mode == PatchMode::SR) {
      samples.append(extract_sr(mapped, acq.measures, acq.mask, cfg.gamma, cfg.in_size, cfg.gamma));
    } else {
      samples.append(extract_qdl(mapped, acq.measures, acq.mask, cfg.in_size, cfg.out_size));
    }
  }
  log("training samples: " + std::to_string(samples.size()));

  PipelineResult result;
  result.training_samples = samples.size();
  const MlpModel init = init_mlp(default_layer_sizes(geometry.input_length(), geometry.target_length()),
                                 cfg.train.seed);
  TrainResult trained = train(init, samples, cfg.train);
  result.best_epoch = trained.best_epoch;
  result.history = trained.history;
  result.checkpoint = {trained.model, cfg.train, geometry};
  log("best epoch " + std::to_string(trained.best_epoch + 1) + ", validation mse " +
      fmt(trained.history[trained.best_epoch].validation));

  for (const char* prefix : {"mlp.", "baseline."})
    for (const char* m : kMeasureNames) result.errors.columns.push_back(std::string(prefix) + m);

  PredictOptions popt;
  popt.threads = cfg.threads;
  for (std::size_t t = 0; t < cfg.target_subjects; ++t) {
    const Acquisition acq = acquire(cfg, cfg.seed * kSourceStride + kTargetOffset + t, false);
    std::vector<Volume> mlp = predict_volume(trained.model, acq.data.dwi, acq.mask, geometry, popt);
    std::vector<Volume> base = baseline_volume(acq.data.dwi, acq.mask, cfg.threads);
    if (cfg.mode == PatchMode::SR) {
      for (auto& b : base) b = block_upsample(b, cfg.gamma);
    }

    const auto centers = eligible_centers(acq.mask, geometry.in_size, popt.stride);
    const Volume covered = coverage_mask(centers, geometry, acq.output_mask.dims());
    const Volume eval_mask = intersect(exclude_fluid(acq.output_mask, acq.measures[1]), covered);

    std::vector<double> row;
    for (const auto* maps : {&mlp, &base})
      for (std::size_t k = 0; k < kMeasureNames.size(); ++k)
        row.push_back(mean_abs_error((*maps)[k], acq.measures[k], eval_mask));
    result.errors.add_row(row);
    log("subject " + std::to_string(t) + ": f_aniso mlp " + fmt(row[0]) + " baseline " + fmt(row[3]));

    if (t == 0) {
      result.mlp_maps = std::move(mlp);
      result.baseline_maps = std::move(base);
      result.gold_maps = acq.measures;
      result.eval_mask = eval_mask;
    }
  }

  const std::size_t nm = kMeasureNames.size();
  const Summary summary = summarize(result.errors);
  for (std::size_t k = 0; k < nm; ++k) {
    MeasureComparison c;
    c.measure = kMeasureNames[k];
    c.mlp_mean = summary.columns[k].mean;
    c.mlp_sd = summary.columns[k].sd;
    c.baseline_mean = summary.columns[nm + k].mean;
    c.baseline_sd = summary.columns[nm + k].sd;
    c.test = paired_t_test(result.errors.column(k), result.errors.column(nm + k));
    result.comparisons.push_back(c);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineConfig& cfg,
                            const PipelineResult& result) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < kMeasureNames.size() && k < result.mlp_maps.size(); ++k) {
    const std::string m = kMeasureNames[k];
    save_volume(dir / ("mlp_" + m + ".nii"), result.mlp_maps[k]);
    save_volume(dir / ("baseline_" + m + ".nii"), result.baseline_maps[k]);
    save_volume(dir / ("gold_" + m + ".nii"), result.gold_maps[k]);
  }
  if (result.eval_mask.voxel_count() > 0) save_volume(dir / "eval_mask.nii", result.eval_mask);
  write_tsv(dir / "errors.tsv", result.errors);
  save_checkpoint(dir / "model.qxm", result.checkpoint);

  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("mode", cfg.mode == PatchMode::SR ? "srqdl" : "qdl");
  kv.emplace_back("source_subjects", std::to_string(cfg.source_subjects));
  kv.emplace_back("target_subjects", std::to_string(cfg.target_subjects));
  kv.emplace_back("training_samples", std::to_string(result.training_samples));
  kv.emplace_back("best_epoch", std::to_string(result.best_epoch + 1));
  for (const auto& c : result.comparisons) {
    kv.emplace_back(c.measure + ".mlp_mean", fmt(c.mlp_mean));
    kv.emplace_back(c.measure + ".mlp_sd", fmt(c.mlp_sd));
    kv.emplace_back(c.measure + ".baseline_mean", fmt(c.baseline_mean));
    kv.emplace_back(c.measure + ".baseline_sd", fmt(c.baseline_sd));
    kv.emplace_back(c.measure + ".t", fmt(c.test.t));
    kv.emplace_back(c.measure + ".p", fmt(c.test.p));
  }
  kv.emplace_back("seconds", fmt(result.seconds));
  write_key_values(dir / "metrics.txt", kv);
}

}  // namespace qxfer
