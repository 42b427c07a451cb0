#include "qxfer/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "binary_io.hpp"
#include "qxfer/error.hpp"
#include "qxfer/parallel.hpp"

namespace qxfer {
namespace {

constexpr char kCheckpointMagic[8] = {'Q', 'X', 'M', 'L', 'P', '0', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;
// Columns per forward/backward block when evaluating whole sample sets.
constexpr std::size_t kEvalBlock = 256;

using Matrix = Eigen::MatrixXd;

void check_input_rows(const MlpModel& model, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != model.input_size()) {
    throw DataError("input length " + std::to_string(rows) + " does not match the model input size " +
                    std::to_string(model.input_size()));
  }
}

// Forward pass keeping pre-activations (zs) and activations (as).
void forward_trace(const MlpModel& model, const Eigen::Ref<const Matrix>& inputs,
                   std::vector<Matrix>& zs, std::vector<Matrix>& as) {
  const std::size_t layers = model.weights.size();
  zs.resize(layers);
  as.resize(layers + 1);
  as[0] = inputs;
  for (std::size_t i = 0; i < layers; ++i) {
    zs[i].noalias() = model.weights[i] * as[i];
    zs[i].colwise() += model.biases[i];
    as[i + 1] = i + 1 < layers ? Matrix(zs[i].cwiseMax(0.0)) : zs[i];
  }
}

void gather_columns(std::span<const double> flat, std::size_t length,
                    std::span<const std::size_t> indices, Matrix& out) {
  out.resize(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    std::copy_n(flat.data() + indices[j] * length, length, out.col(static_cast<Eigen::Index>(j)).data());
  }
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    n += static_cast<std::size_t>(weights[i].size() + biases[i].size());
  return n;
}

MlpModel init_mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("an MLP needs at least two layers");
  for (std::size_t s : layer_sizes)
    if (s == 0) throw std::invalid_argument("layer sizes must be positive");

  MlpModel model;
  model.layer_sizes = layer_sizes;
  model.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const auto fan_in = static_cast<Eigen::Index>(layer_sizes[i]);
    const auto fan_out = static_cast<Eigen::Index>(layer_sizes[i + 1]);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Matrix w(fan_out, fan_in);
    for (Eigen::Index c = 0; c < fan_in; ++c)
      for (Eigen::Index r = 0; r < fan_out; ++r) w(r, c) = dist(rng);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return model;
}

std::vector<std::size_t> default_layer_sizes(std::size_t inputs, std::size_t outputs) {
  return {inputs, 150, 150, 150, outputs};
}

Eigen::VectorXd forward(const MlpModel& model, std::span<const double> input) {
  check_input_rows(model, static_cast<Eigen::Index>(input.size()));
  Eigen::Map<const Matrix> x(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  return forward_batch(model, x).col(0);
}

Matrix forward_batch(const MlpModel& model, const Eigen::Ref<const Matrix>& inputs) {
  check_input_rows(model, inputs.rows());
  Matrix a = inputs;
  const std::size_t layers = model.weights.size();
  for (std::size_t i = 0; i < layers; ++i) {
    Matrix z = model.weights[i] * a;
    z.colwise() += model.biases[i];
    a = i + 1 < layers ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return a;
}

LossAndGradients loss_and_gradients(const MlpModel& model, const Eigen::Ref<const Matrix>& inputs,
                                    const Eigen::Ref<const Matrix>& targets) {
  check_input_rows(model, inputs.rows());
  if (static_cast<std::size_t>(targets.rows()) != model.output_size() ||
      targets.cols() != inputs.cols()) {
    throw DataError("target shape does not match the model output");
  }
  if (inputs.cols() == 0) throw DataError("empty batch");

  std::vector<Matrix> zs;
  std::vector<Matrix> as;
  forward_trace(model, inputs, zs, as);

  const std::size_t layers = model.weights.size();
  const double count = static_cast<double>(targets.size());
  const Matrix residual = as[layers] - targets;

  LossAndGradients out;
  out.mse = residual.squaredNorm() / count;
  out.gradients.weights.resize(layers);
  out.gradients.biases.resize(layers);

  Matrix delta = (2.0 / count) * residual;
  for (std::size_t i = layers; i-- > 0;) {
    out.gradients.weights[i].noalias() = delta * as[i].transpose();
    out.gradients.biases[i] = delta.rowwise().sum();
    if (i > 0) {
      Matrix back = model.weights[i].transpose() * delta;
      delta = back.cwiseProduct((zs[i - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

LossAndGradients loss_and_gradients(const MlpModel& model, std::span<const PatchSample> batch) {
  if (batch.empty()) throw DataError("empty batch");
  const auto in = static_cast<Eigen::Index>(batch.front().input.size());
  const auto out = static_cast<Eigen::Index>(batch.front().target.size());
  Matrix x(in, static_cast<Eigen::Index>(batch.size()));
  Matrix t(out, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (static_cast<Eigen::Index>(batch[j].input.size()) != in ||
        static_cast<Eigen::Index>(batch[j].target.size()) != out) {
      throw DataError("batch samples have inconsistent lengths");
    }
    x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(batch[j].input.data(), in);
    t.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(batch[j].target.data(), out);
  }
  return loss_and_gradients(model, x, t);
}

double mean_squared_error(const MlpModel& model, const SampleSet& samples,
                          std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  const auto& g = samples.geometry();
  double sum = 0.0;
  Matrix x;
  Matrix t;
  for (std::size_t begin = 0; begin < indices.size(); begin += kEvalBlock) {
    const auto block = indices.subspan(begin, std::min(kEvalBlock, indices.size() - begin));
    gather_columns(samples.inputs(), g.input_length(), block, x);
    gather_columns(samples.targets(), g.target_length(), block, t);
    sum += (forward_batch(model, x) - t).squaredNorm();
  }
  return sum / static_cast<double>(indices.size() * g.target_length());
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must be in (0, 1)");
  }
}

TrainResult train(MlpModel model, const SampleSet& samples, const TrainConfig& config) {
  config.validate();
  if (samples.empty()) throw DataError("cannot train on an empty sample set");
  const auto& g = samples.geometry();
  if (g.input_length() != model.input_size() || g.target_length() != model.output_size()) {
    throw DataError("sample geometry (" + std::to_string(g.input_length()) + " -> " +
                    std::to_string(g.target_length()) + ") does not match the model (" +
                    std::to_string(model.input_size()) + " -> " +
                    std::to_string(model.output_size()) + ")");
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t n_val = 0;
  if (samples.size() >= 2) {
    n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(samples.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, samples.size() - 1);
  }
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  Gradients velocity;
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    velocity.weights.push_back(Matrix::Zero(model.weights[i].rows(), model.weights[i].cols()));
    velocity.biases.push_back(Eigen::VectorXd::Zero(model.biases[i].size()));
  }

  TrainResult result;
  result.model = model;
  double best = std::numeric_limits<double>::infinity();
  Matrix x;
  Matrix t;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    for (std::size_t begin = 0; begin < train_idx.size(); begin += config.batch_size) {
      const auto batch = std::span<const std::size_t>(train_idx).subspan(
          begin, std::min(config.batch_size, train_idx.size() - begin));
      gather_columns(samples.inputs(), g.input_length(), batch, x);
      gather_columns(samples.targets(), g.target_length(), batch, t);
      const LossAndGradients lg = loss_and_gradients(model, x, t);
      for (std::size_t i = 0; i < model.weights.size(); ++i) {
        velocity.weights[i] = config.momentum * velocity.weights[i] - config.learning_rate * lg.gradients.weights[i];
        velocity.biases[i] = config.momentum * velocity.biases[i] - config.learning_rate * lg.gradients.biases[i];
        model.weights[i] += velocity.weights[i];
        model.biases[i] += velocity.biases[i];
      }
    }

    EpochLoss loss;
    loss.train = mean_squared_error(model, samples, train_idx);
    loss.validation = n_val > 0 ? mean_squared_error(model, samples, val_idx) : loss.train;
    if (!std::isfinite(loss.train)) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch + 1) +
                           "; lower the learning rate");
    }
    result.history.push_back(loss);
    if (loss.validation < best) {
      best = loss.validation;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

std::vector<Volume> predict_volume(const MlpModel& model, const DwiVolume& dwi, const Volume& mask,
                                   const PatchGeometry& geometry, const PredictOptions& options) {
  geometry.validate();
  if (dwi.image.volumes() != geometry.n_signals || dwi.scheme.size() != geometry.n_signals) {
    throw DataError("input has " + std::to_string(dwi.image.volumes()) +
                    " gradient volumes but the model was trained on " +
                    std::to_string(geometry.n_signals));
  }
  if (model.input_size() != geometry.input_length() || model.output_size() != geometry.target_length()) {
    throw DataError("model layer sizes do not match the patch geometry");
  }
  if (!dwi.image.same_grid(mask)) throw DataError("mask dimensions do not match the input");

  const auto centers = eligible_centers(mask, geometry.in_size, options.stride);
  std::vector<PatchPrediction> predictions(centers.size());
  const std::size_t in_len = geometry.input_length();

  // Fixed global blocks keep results independent of the thread count.
  const std::size_t n_blocks = (centers.size() + kEvalBlock - 1) / kEvalBlock;
  parallel_for(n_blocks, options.threads, [&](std::size_t first, std::size_t last) {
    Matrix x;
    for (std::size_t blk = first; blk < last; ++blk) {
      const std::size_t b = blk * kEvalBlock;
      const std::size_t n = std::min(kEvalBlock, centers.size() - b);
      x.resize(static_cast<Eigen::Index>(in_len), static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j) {
        gather_input(dwi.image, centers[b + j], geometry.in_size,
                     {x.col(static_cast<Eigen::Index>(j)).data(), in_len});
      }
      const Matrix y = forward_batch(model, x);
      for (std::size_t j = 0; j < n; ++j) {
        auto col = y.col(static_cast<Eigen::Index>(j));
        predictions[b + j] = {centers[b + j], std::vector<double>(col.data(), col.data() + col.size())};
      }
    }
  });

  Index3 out_dims = dwi.image.dims();
  if (geometry.mode == PatchMode::SR) {
    for (auto& d : out_dims) d *= static_cast<std::size_t>(geometry.gamma);
  }
  auto maps = assemble(predictions, geometry, out_dims);

  // Carry over spacing and placement from the input grid.
  VolumeHeader h = dwi.image.header();
  h.volumes = 1;
  h.datatype = DataType::Float32;
  h.description.clear();
  if (geometry.mode == PatchMode::SR) {
    const int gamma = geometry.gamma;
    h.dims = out_dims;
    const Eigen::Matrix4d old = dwi.image.header().sform;
    for (int a = 0; a < 3; ++a) {
      h.voxel_size[a] /= gamma;
      h.sform.col(a) = old.col(a) / gamma;
    }
    const double shift = -0.5 * (gamma - 1) / gamma;
    h.sform.col(3) = old * Eigen::Vector4d(shift, shift, shift, 1.0);
  }
  for (auto& m : maps) m.header() = h;
  return maps;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const MlpModel& m = checkpoint.model;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::write_le<std::uint32_t>(out, kCheckpointVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.layer_sizes.size()));
  for (std::size_t s : m.layer_sizes) detail::write_le<std::uint64_t>(out, s);
  detail::write_le<std::uint64_t>(out, m.seed);

  const TrainConfig& c = checkpoint.config;
  detail::write_le<std::uint64_t>(out, c.epochs);
  detail::write_le<std::uint64_t>(out, c.batch_size);
  detail::write_le<double>(out, c.learning_rate);
  detail::write_le<double>(out, c.momentum);
  detail::write_le<double>(out, c.validation_fraction);
  detail::write_le<std::uint64_t>(out, c.seed);

  const PatchGeometry& g = checkpoint.geometry;
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.mode));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.in_size));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.out_size));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.gamma));
  detail::write_le<std::uint64_t>(out, g.n_signals);
  detail::write_le<std::uint64_t>(out, g.n_measures);

  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    const Matrix& w = m.weights[i];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index col = 0; col < w.cols(); ++col) detail::write_le<double>(out, w(r, col));
    for (Eigen::Index r = 0; r < m.biases[i].size(); ++r) detail::write_le<double>(out, m.biases[i][r]);
  }
  if (!out) throw DataError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw DataError(path.string() + ": not a model checkpoint");
  }
  const char* what = "checkpoint";
  const auto version = detail::read_le<std::uint32_t>(in, what);
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto n_layers = detail::read_le<std::uint32_t>(in, what);
  if (n_layers < 2 || n_layers > 64) throw DataError(path.string() + ": implausible layer count");

  Checkpoint cp;
  std::vector<std::size_t> sizes(n_layers);
  for (auto& s : sizes) {
    s = detail::read_le<std::uint64_t>(in, what);
    if (s == 0 || s > (std::size_t{1} << 24)) throw DataError(path.string() + ": implausible layer size");
  }
  const auto model_seed = detail::read_le<std::uint64_t>(in, what);

  cp.config.epochs = detail::read_le<std::uint64_t>(in, what);
  cp.config.batch_size = detail::read_le<std::uint64_t>(in, what);
  cp.config.learning_rate = detail::read_le<double>(in, what);
  cp.config.momentum = detail::read_le<double>(in, what);
  cp.config.validation_fraction = detail::read_le<double>(in, what);
  cp.config.seed = detail::read_le<std::uint64_t>(in, what);

  const auto mode = detail::read_le<std::uint32_t>(in, what);
  if (mode > 1) throw DataError(path.string() + ": unknown patch mode");
  cp.geometry.mode = static_cast<PatchMode>(mode);
  cp.geometry.in_size = static_cast<int>(detail::read_le<std::uint32_t>(in, what));
  cp.geometry.out_size = static_cast<int>(detail::read_le<std::uint32_t>(in, what));
  cp.geometry.gamma = static_cast<int>(detail::read_le<std::uint32_t>(in, what));
  cp.geometry.n_signals = detail::read_le<std::uint64_t>(in, what);
  cp.geometry.n_measures = detail::read_le<std::uint64_t>(in, what);

  cp.model.layer_sizes = sizes;
  cp.model.seed = model_seed;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    Matrix w(static_cast<Eigen::Index>(sizes[i + 1]), static_cast<Eigen::Index>(sizes[i]));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index col = 0; col < w.cols(); ++col) w(r, col) = detail::read_le<double>(in, what);
    Eigen::VectorXd b(static_cast<Eigen::Index>(sizes[i + 1]));
    for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = detail::read_le<double>(in, what);
    cp.model.weights.push_back(std::move(w));
    cp.model.biases.push_back(std::move(b));
  }
  return cp;
}

}  // namespace qxfer
