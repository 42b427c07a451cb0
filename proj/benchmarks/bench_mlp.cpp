#include <random>

#include <benchmark/benchmark.h>

#include "qxfer/mlp.hpp"

namespace {

using namespace qxfer;

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// q-DL input: 3^3 patch of 36 signals.
constexpr Eigen::Index kInputs = 27 * 36;

void BM_ForwardBatch(benchmark::State& state) {
  const MlpModel m = init_mlp(default_layer_sizes(kInputs, 3), 1);
  const Eigen::MatrixXd x = random_matrix(kInputs, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(m, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(64)->Arg(256);

void BM_LossAndGradients(benchmark::State& state) {
  const MlpModel m = init_mlp(default_layer_sizes(kInputs, 3), 1);
  const Eigen::MatrixXd x = random_matrix(kInputs, state.range(0));
  const Eigen::MatrixXd y = random_matrix(3, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradients(m, x, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGradients)->Arg(64);

}  // namespace
