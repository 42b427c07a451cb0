#include "qxfer/cli.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"

#include "qxfer/baseline.hpp"
#include "qxfer/error.hpp"
#include "qxfer/eval.hpp"
#include "qxfer/mlp.hpp"
#include "qxfer/nifti.hpp"
#include "qxfer/patches.hpp"
#include "qxfer/pipeline.hpp"
#include "qxfer/resample.hpp"
#include "qxfer/shore.hpp"
#include "qxfer/synth.hpp"

namespace qxfer::cli {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(9) << v;
  return ss.str();
}

// Options shared by the subcommands.
struct Common {
  std::size_t threads = 0;
  std::uint64_t seed = 1;
  std::string config;
  bool verbose = false;
};

struct GradientFiles {
  std::string image;
  std::string bvals;
  std::string bvecs;
};

struct ShoreFlags {
  int radial_order = 6;
  double zeta = 700.0;
  double lambda_l = 1e-8;
  double lambda_n = 1e-8;

  ShoreBasisSpec spec() const {
    ShoreBasisSpec s;
    s.radial_order = radial_order;
    s.zeta = zeta;
    s.lambda_l = lambda_l;
    s.lambda_n = lambda_n;
    return s;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--threads", c.threads, "Worker threads (0: all cores; QXFER_THREADS if absent)");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--config", c.config, "key = value file; command-line flags take precedence");
  app->add_flag("-v,--verbose", c.verbose, "Progress messages on stderr");
}

void add_dwi(CLI::App* app, GradientFiles& g, bool required = true) {
  auto* in = app->add_option("--in", g.image, "4D NIfTI input")->check(CLI::ExistingFile);
  auto* bv = app->add_option("--bvals", g.bvals, "FSL b-values")->check(CLI::ExistingFile);
  auto* bc = app->add_option("--bvecs", g.bvecs, "FSL b-vectors")->check(CLI::ExistingFile);
  if (required) {
    in->required();
    bv->required();
    bc->required();
  }
}

void add_shore(CLI::App* app, ShoreFlags& s) {
  app->add_option("--radial-order", s.radial_order, "SHORE radial order N (even)")->capture_default_str();
  app->add_option("--zeta", s.zeta, "SHORE scale parameter")->capture_default_str();
  app->add_option("--lambda-l", s.lambda_l, "Angular regularization weight")->capture_default_str();
  app->add_option("--lambda-n", s.lambda_n, "Radial regularization weight")->capture_default_str();
}

PatchMode parse_mode(const std::string& mode) {
  if (mode == "qdl") return PatchMode::QDL;
  if (mode == "srqdl") return PatchMode::SR;
  throw std::invalid_argument("unknown mode '" + mode + "' (expected qdl or srqdl)");
}

std::size_t resolve_thread_flag(const CLI::App* app, std::size_t flag) {
  if (app->count("--threads") > 0) return flag;
  if (const char* env = std::getenv("QXFER_THREADS")) {
    try {
      return static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("QXFER_THREADS is not a number: ") + env);
    }
  }
  return 0;
}

DwiVolume load_dwi(const GradientFiles& g) {
  DwiVolume dwi{load_volume(g.image), read_fsl_gradients(g.bvals, g.bvecs)};
  dwi.validate();
  return dwi;
}

Volume load_mask_or_full(const std::string& path, const Volume& like) {
  if (path.empty()) {
    VolumeHeader h = like.header();
    h.volumes = 1;
    h.datatype = DataType::UInt8;
    return Volume(h, 1.0);
  }
  Volume m = load_volume(path);
  require_mask(m);
  if (!m.same_grid(like)) throw DataError("mask " + path + " does not match the image grid");
  return m;
}

// Normalized diffusion-weighted signals when b0 entries are present.
DwiVolume prepare_signals(const DwiVolume& dwi) {
  if (dwi.scheme.b0_indices().empty()) return dwi;
  return normalize_b0(dwi).dwi;
}

fs::path sibling(const fs::path& image, const std::string& ext) {
  fs::path p = image;
  if (p.extension() == ".gz") p.replace_extension();
  return p.replace_extension(ext);
}

void write_manifest(const fs::path& path, const CLI::App* sub, std::size_t threads,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << "# qxfer " << sub->get_name() << '\n';
  out << sub->config_to_str(true, false);
  out << "threads_resolved = " << threads << '\n';
  for (const auto& [k, v] : extra) out << k << " = " << v << '\n';
}

fs::path manifest_for(const fs::path& out) {
  if (fs::is_directory(out)) return out / "manifest.txt";
  fs::path p = out;
  return p += ".manifest.txt";
}

}  // namespace

std::map<std::string, std::string> parse_config(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw DataError("config line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

std::vector<std::string> apply_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();

  std::vector<std::string> out = args;
  for (const auto& [key, value] : parse_config(ss.str())) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    if (has_flag(args, flag)) continue;
    const auto tokens = split_ws(value);
    if (tokens.size() == 1) {
      out.push_back(flag + "=" + tokens[0]);
    } else {
      out.push_back(flag);
      out.insert(out.end(), tokens.begin(), tokens.end());
    }
  }
  return out;
}

int run(const std::vector<std::string>& raw_args) {
  CLI::App app("Transfer of q-space learning across gradient schemes", "qxfer");
  app.require_subcommand(1);
  app.fallthrough(false);

  Common common;
  GradientFiles dwi_files;
  ShoreFlags shore;
  std::string out;
  std::string mask;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic phantom");
  std::array<std::size_t, 3> synth_dims{20, 20, 20};
  double synth_noise = 0.02;
  add_common(synth, common);
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--dims", synth_dims, "Grid size")->capture_default_str();
  synth->add_option("--noise", synth_noise, "Rician noise sigma relative to s0")->capture_default_str();

  // fit-shore
  auto* fit = app.add_subcommand("fit-shore", "Fit SHORE coefficients per voxel");
  add_common(fit, common);
  add_dwi(fit, dwi_files);
  add_shore(fit, shore);
  fit->add_option("--mask", mask, "Binary mask")->check(CLI::ExistingFile);
  fit->add_option("--out", out, "Coefficient image (K volumes)")->required();

  // resample
  auto* resample = app.add_subcommand("resample", "Map signals onto another gradient scheme");
  GradientFiles target_files;
  double clip = 0.0;
  add_common(resample, common);
  add_dwi(resample, dwi_files);
  add_shore(resample, shore);
  resample->add_option("--mask", mask, "Binary mask")->check(CLI::ExistingFile);
  resample->add_option("--target-bvals", target_files.bvals, "Target b-values")->required()->check(CLI::ExistingFile);
  resample->add_option("--target-bvecs", target_files.bvecs, "Target b-vectors")->required()->check(CLI::ExistingFile);
  resample->add_option("--clip", clip, "Clamp output to [0, clip] (0: off)");
  resample->add_option("--out", out, "Output image; gradients are written next to it")->required();

  // downsample
  auto* down = app.add_subcommand("downsample", "Block-mean spatial downsampling");
  int gamma = 2;
  bool binary = false;
  add_common(down, common);
  down->add_option("--in", dwi_files.image, "3D or 4D NIfTI")->required()->check(CLI::ExistingFile);
  down->add_option("--out", out, "Output image")->required();
  down->add_option("--gamma", gamma, "Integer factor")->capture_default_str();
  down->add_flag("--binary", binary, "Threshold block means at 0.5 (for masks)");

  // extract
  auto* extract = app.add_subcommand("extract", "Build training patches");
  std::string mode = "qdl";
  int in_size = 3;
  int out_size = 1;
  std::vector<std::string> measure_paths;
  add_common(extract, common);
  add_dwi(extract, dwi_files);
  extract->add_option("--mask", mask, "Binary mask on the input grid")->check(CLI::ExistingFile);
  extract->add_option("--measures", measure_paths, "Target measure maps")->required()->check(CLI::ExistingFile);
  extract->add_option("--mode", mode, "qdl or srqdl")->check(CLI::IsMember({"qdl", "srqdl"}));
  extract->add_option("--gamma", gamma, "Upsampling factor (srqdl)");
  extract->add_option("--in-size", in_size, "Input patch edge")->capture_default_str();
  extract->add_option("--out-size", out_size, "Output patch edge (qdl)")->capture_default_str();
  extract->add_option("--out", out, "Sample file")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the network on a sample file");
  std::string samples_path;
  TrainConfig tc;
  tc.learning_rate = 0.02;
  add_common(train_cmd, common);
  train_cmd->add_option("--in", samples_path, "Sample file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs", tc.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train_cmd->add_option("--learning-rate", tc.learning_rate)->capture_default_str();
  train_cmd->add_option("--momentum", tc.momentum)->capture_default_str();
  train_cmd->add_option("--validation-fraction", tc.validation_fraction)->capture_default_str();
  train_cmd->add_option("--out", out, "Model checkpoint")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Estimate measure maps with a trained model");
  std::string model_path;
  std::size_t stride = 1;
  add_common(predict, common);
  add_dwi(predict, dwi_files);
  predict->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--mask", mask, "Binary mask")->check(CLI::ExistingFile);
  predict->add_option("--stride", stride, "Centre-grid stride")->capture_default_str();
  predict->add_option("--out", out, "Output directory")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Error statistics");
  std::vector<std::string> estimates;
  std::vector<std::string> golds;
  std::string f_iso_path;
  std::string table_path;
  std::string column_a;
  std::string column_b;
  add_common(evaluate, common);
  evaluate->add_option("--estimate", estimates, "Estimated maps")->check(CLI::ExistingFile);
  evaluate->add_option("--gold", golds, "Gold-standard maps (same order)")->check(CLI::ExistingFile);
  evaluate->add_option("--mask", mask, "Binary mask")->check(CLI::ExistingFile);
  evaluate->add_option("--f-iso", f_iso_path, "Exclude voxels with f_iso >= 0.9")->check(CLI::ExistingFile);
  evaluate->add_option("--table", table_path, "Per-subject error table (TSV)")->check(CLI::ExistingFile);
  evaluate->add_option("--column-a", column_a, "First column for a paired t-test");
  evaluate->add_option("--column-b", column_b, "Second column for a paired t-test");
  evaluate->add_option("--out", out, "Key-value results file");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "End-to-end transfer experiment on synthetic subjects");
  std::size_t n_source = 5;
  std::size_t n_target = 10;
  double noise = 0.02;
  std::array<std::size_t, 3> pipe_dims{0, 0, 0};
  std::size_t epochs = 0;
  double learning_rate = 0.0;
  add_common(pipeline, common);
  add_shore(pipeline, shore);
  pipeline->add_option("--mode", mode, "qdl or srqdl")->check(CLI::IsMember({"qdl", "srqdl"}))->capture_default_str();
  pipeline->add_option("--gamma", gamma, "Upsampling factor (srqdl)");
  pipeline->add_option("--in-size", in_size, "Input patch edge")->capture_default_str();
  pipeline->add_option("--source-subjects", n_source)->capture_default_str();
  pipeline->add_option("--target-subjects", n_target)->capture_default_str();
  pipeline->add_option("--noise", noise)->capture_default_str();
  pipeline->add_option("--dims", pipe_dims, "Acquisition grid (default depends on mode)");
  pipeline->add_option("--epochs", epochs, "Training epochs (default depends on mode)");
  pipeline->add_option("--learning-rate", learning_rate, "SGD step (default 0.02)");
  pipeline->add_option("--out", out, "Output directory")->required();

  std::vector<std::string> args;
  try {
    args = apply_config(raw_args);
  } catch (const DataError& e) {
    std::cerr << "qxfer: " << e.what() << '\n';
    return kUsage;
  }

  if (!args.empty() && !args.front().empty() && args.front()[0] != '-') {
    const auto subs = app.get_subcommands([&](CLI::App* s) { return s->get_name() == args.front(); });
    if (subs.empty()) {
      std::cerr << "qxfer: unknown subcommand '" << args.front() << "'\n\n" << app.help();
      return kUsage;
    }
  }

  std::vector<const char*> argv{"qxfer"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "qxfer: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->get_help_ptr() && sub->get_help_ptr()->count() > 0) {
    std::cout << sub->help();
    return kOk;
  }

  try {
    const std::size_t threads = resolve_thread_flag(sub, common.threads);

    if (sub == synth) {
      const PhantomConfig pc = random_subject_config({synth_dims[0], synth_dims[1], synth_dims[2]},
                                                     common.seed, synth_noise);
      const Phantom ph = generate(pc, default_source_scheme(), default_target_scheme(), threads);
      write_phantom(out, ph, pc);
      return kOk;
    }

    if (sub == fit) {
      const DwiVolume dwi = prepare_signals(load_dwi(dwi_files));
      const Volume m = load_mask_or_full(mask, dwi.image);
      const ShoreBasisSpec spec = shore.spec();
      const Volume coeffs = fit_shore_volume(dwi, m, spec, threads);
      save_volume(out, coeffs);
      write_index_sidecar(sibling(out, ".shore.txt"), index_set(spec.radial_order), spec);
      write_manifest(manifest_for(out), sub, threads, {{"coefficients", std::to_string(coeffs.volumes())}});
      return kOk;
    }

    if (sub == resample) {
      const DwiVolume dwi = prepare_signals(load_dwi(dwi_files));
      const Volume m = load_mask_or_full(mask, dwi.image);
      const GradientScheme target = read_fsl_gradients(target_files.bvals, target_files.bvecs);
      const GradientScheme target_dw = target.subset(target.dw_indices());
      if (target_dw.empty()) throw DataError("target scheme has no diffusion-weighted entries");
      ResampleOptions ro;
      ro.threads = threads;
      ro.clip_max = clip;
      const DwiVolume mapped = resample_qspace(dwi, m, shore.spec(), target_dw, ro);
      save_volume(out, mapped.image);
      write_fsl_gradients(mapped.scheme, sibling(out, ".bval"), sibling(out, ".bvec"));
      write_manifest(manifest_for(out), sub, threads, {{"target_gradients", std::to_string(target_dw.size())}});
      return kOk;
    }

    if (sub == down) {
      const Volume in = load_volume(dwi_files.image);
      const Volume result = binary ? downsample_mask(in, gamma) : block_mean_downsample(in, gamma);
      save_volume(out, result);
      write_manifest(manifest_for(out), sub, threads, {{"output_dims", std::to_string(result.dims()[0]) + " " +
                                                                  std::to_string(result.dims()[1]) + " " +
                                                                  std::to_string(result.dims()[2])}});
      return kOk;
    }

    if (sub == extract) {
      const PatchMode pm = parse_mode(mode);
      if (pm == PatchMode::QDL && extract->count("--gamma") > 0 && gamma != 1) {
        throw std::invalid_argument("--gamma applies to srqdl mode only");
      }
      if (pm == PatchMode::SR && extract->count("--out-size") > 0 && out_size != gamma) {
        throw std::invalid_argument("srqdl output patches span gamma voxels per axis");
      }
      const DwiVolume dwi = prepare_signals(load_dwi(dwi_files));
      const Volume m = load_mask_or_full(mask, dwi.image);
      std::vector<Volume> measures;
      for (const auto& p : measure_paths) measures.push_back(load_volume(p));
      const SampleSet samples = pm == PatchMode::SR
                                    ? extract_sr(dwi, measures, m, gamma, in_size, gamma)
                                    : extract_qdl(dwi, measures, m, in_size, out_size);
      save_samples(out, samples);
      write_manifest(manifest_for(out), sub, threads, {{"samples", std::to_string(samples.size())}});
      return kOk;
    }

    if (sub == train_cmd) {
      tc.seed = common.seed;
      const SampleSet samples = load_samples(samples_path);
      const PatchGeometry& g = samples.geometry();
      const MlpModel init = init_mlp(default_layer_sizes(g.input_length(), g.target_length()), common.seed);
      const TrainResult r = train(init, samples, tc);
      save_checkpoint(out, {r.model, tc, g});
      std::vector<std::pair<std::string, std::string>> kv{
          {"samples", std::to_string(samples.size())},
          {"best_epoch", std::to_string(r.best_epoch + 1)}};
      for (std::size_t e = 0; e < r.history.size(); ++e) {
        kv.emplace_back("epoch." + std::to_string(e + 1),
                        fmt(r.history[e].train) + " " + fmt(r.history[e].validation));
      }
      write_manifest(manifest_for(out), sub, threads, kv);
      if (common.verbose) {
        std::cerr << "best epoch " << r.best_epoch + 1 << " validation mse "
                  << r.history[r.best_epoch].validation << '\n';
      }
      return kOk;
    }

    if (sub == predict) {
      const Checkpoint cp = load_checkpoint(model_path);
      const DwiVolume dwi = prepare_signals(load_dwi(dwi_files));
      const Volume m = load_mask_or_full(mask, dwi.image);
      PredictOptions po;
      po.threads = threads;
      po.stride = stride;
      const auto maps = predict_volume(cp.model, dwi, m, cp.geometry, po);
      fs::create_directories(out);
      for (std::size_t k = 0; k < maps.size(); ++k) {
        const std::string name = k < kMeasureNames.size() ? kMeasureNames[k] : "measure" + std::to_string(k);
        save_volume(fs::path(out) / (name + ".nii"), maps[k]);
      }
      write_manifest(manifest_for(out), sub, threads, {{"maps", std::to_string(maps.size())}});
      return kOk;
    }

    if (sub == evaluate) {
      std::vector<std::pair<std::string, std::string>> kv;
      if (!estimates.empty() || !golds.empty()) {
        if (estimates.size() != golds.size()) {
          throw std::invalid_argument("--estimate and --gold need the same number of files");
        }
        if (mask.empty()) throw std::invalid_argument("--mask is required with --estimate");
        Volume m = load_volume(mask);
        require_mask(m);
        if (!f_iso_path.empty()) m = exclude_fluid(m, load_volume(f_iso_path));
        for (std::size_t i = 0; i < estimates.size(); ++i) {
          const double mae = mean_abs_error(load_volume(estimates[i]), load_volume(golds[i]), m);
          kv.emplace_back("mae." + fs::path(estimates[i]).stem().string(), fmt(mae));
        }
      }
      if (!table_path.empty()) {
        if (column_a.empty() || column_b.empty()) {
          throw std::invalid_argument("--table needs --column-a and --column-b");
        }
        std::ifstream in(table_path);
        ErrorTable table;
        std::string line;
        std::getline(in, line);
        auto header = split_ws(line);
        if (header.empty()) throw DataError(table_path + ": empty table");
        table.columns.assign(header.begin() + 1, header.end());
        while (std::getline(in, line)) {
          auto cells = split_ws(line);
          if (cells.empty()) continue;
          std::vector<double> row;
          for (std::size_t c = 1; c < cells.size(); ++c) {
            try {
              row.push_back(std::stod(cells[c]));
            } catch (const std::exception&) {
              throw DataError(table_path + ": non-numeric cell '" + cells[c] + "'");
            }
          }
          table.add_row(row);
        }
        const auto t = paired_t_test(table.column(column_a), table.column(column_b));
        kv.emplace_back("t", fmt(t.t));
        kv.emplace_back("p", fmt(t.p));
        kv.emplace_back("dof", std::to_string(t.dof));
        kv.emplace_back("mean_difference", fmt(t.mean_difference));
        const Summary s = summarize(table);
        for (const auto& c : s.columns) {
          kv.emplace_back(c.name + ".mean", fmt(c.mean));
          kv.emplace_back(c.name + ".sd", fmt(c.sd));
        }
      }
      if (kv.empty()) throw std::invalid_argument("nothing to evaluate: give --estimate/--gold or --table");
      for (const auto& [k, v] : kv) std::cout << k << " = " << v << '\n';
      if (!out.empty()) write_key_values(out, kv);
      return kOk;
    }

    if (sub == pipeline) {
      const PatchMode pm = parse_mode(mode);
      if (pm == PatchMode::QDL && pipeline->count("--gamma") > 0 && gamma != 1) {
        throw std::invalid_argument("--gamma applies to srqdl mode only");
      }
      PipelineConfig pc = PipelineConfig::defaults(pm);
      pc.gamma = pm == PatchMode::SR ? gamma : 1;
      pc.in_size = in_size;
      pc.source_subjects = n_source;
      pc.target_subjects = n_target;
      pc.noise_sigma = noise;
      pc.seed = common.seed;
      pc.train.seed = common.seed;
      pc.shore = shore.spec();
      pc.threads = threads;
      pc.verbose = common.verbose;
      if (pipeline->count("--dims") > 0) pc.dims = {pipe_dims[0], pipe_dims[1], pipe_dims[2]};
      if (pipeline->count("--epochs") > 0) pc.train.epochs = epochs;
      if (pipeline->count("--learning-rate") > 0) pc.train.learning_rate = learning_rate;

      const PipelineResult r = run_pipeline(pc);
      write_pipeline_outputs(out, pc, r);
      write_manifest(fs::path(out) / "manifest.txt", sub, threads, {{"seconds", fmt(r.seconds)}});
      for (const auto& c : r.comparisons) {
        std::cout << c.measure << ": mlp " << fmt(c.mlp_mean) << " +/- " << fmt(c.mlp_sd) << ", baseline "
                  << fmt(c.baseline_mean) << " +/- " << fmt(c.baseline_sd) << ", t = " << fmt(c.test.t)
                  << ", p = " << fmt(c.test.p) << '\n';
      }
      return kOk;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "qxfer " << sub->get_name() << ": " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "qxfer " << sub->get_name() << ": numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "qxfer " << sub->get_name() << ": " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "qxfer " << sub->get_name() << ": " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace qxfer::cli
