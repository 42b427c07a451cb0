#include <filesystem>
#include <fstream>
#include <algorithm>
#include <random>

#include "doctest.h"
#include "oracles/mlp_oracle.hpp"
#include "qxfer/error.hpp"
#include "qxfer/mlp.hpp"

using namespace qxfer;

namespace {

std::vector<std::vector<double>> random_rows(std::size_t n, std::size_t len, std::uint64_t seed,
                                             double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<std::vector<double>> out(n, std::vector<double>(len));
  for (auto& r : out)
    for (double& x : r) x = u(rng);
  return out;
}

Eigen::MatrixXd columns(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t i = 0; i < rows[j].size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
  return m;
}

bool same_parameters(const MlpModel& a, const MlpModel& b) {
  if (a.layer_sizes != b.layer_sizes) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
  return true;
}

// y = A x on a q-DL geometry with 1^3 patches.
SampleSet linear_samples(std::size_t n, std::size_t in, std::size_t out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng) / std::sqrt(static_cast<double>(in));
  SampleSet s(PatchGeometry::qdl(in, out, 1, 1));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(in));
    for (auto& v : x) v = g(rng);
    const Eigen::VectorXd y = a * x;
    s.push_back({std::vector<double>(x.begin(), x.end()), std::vector<double>(y.begin(), y.end()),
                 {i, 0, 0}});
  }
  return s;
}

}  // namespace

TEST_CASE("initialization") {
  const MlpModel a = init_mlp({6, 10, 3}, 42);
  const MlpModel b = init_mlp({6, 10, 3}, 42);
  CHECK(same_parameters(a, b));
  CHECK_FALSE(same_parameters(a, init_mlp({6, 10, 3}, 43)));
  CHECK_THROWS_AS(init_mlp({4}, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_mlp({4, 0, 2}, 1), std::invalid_argument);
  for (const auto& bias : a.biases) CHECK(bias.isZero(0.0));
  CHECK(a.parameter_count() == 6 * 10 + 10 + 10 * 3 + 3);
  CHECK(default_layer_sizes(12, 3) == std::vector<std::size_t>{12, 150, 150, 150, 3});

  const MlpModel big = init_mlp({400, 300}, 7);
  const double var = big.weights[0].array().square().mean() - std::pow(big.weights[0].mean(), 2);
  CHECK(var == doctest::Approx(2.0 / 400.0).epsilon(0.02));
}

TEST_CASE("forward pass") {
  SUBCASE("zero parameters give zero output") {
    MlpModel m = init_mlp({4, 5, 2}, 1);
    for (auto& w : m.weights) w.setZero();
    const std::vector<double> x{1, -2, 3, 4};
    CHECK(forward(m, x).isZero(0.0));
  }
  SUBCASE("identity single layer") {
    MlpModel m = init_mlp({3, 3}, 1);
    m.weights[0].setIdentity();
    const std::vector<double> x{0.5, 0.0, 2.0};
    const Eigen::VectorXd y = forward(m, x);
    for (int i = 0; i < 3; ++i) CHECK(y(i) == x[static_cast<std::size_t>(i)]);
  }
  SUBCASE("matches the loop oracle") {
    MlpModel m = init_mlp({7, 20, 15, 4}, 5);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 0.3);
    for (auto& b : m.biases)
      for (auto& v : b) v = g(rng);
    const auto xs = random_rows(30, 7, 11);
    const Eigen::MatrixXd batch = forward_batch(m, columns(xs));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto ref = oracle::forward(m, xs[i]);
      const Eigen::VectorXd y = forward(m, xs[i]);
      for (std::size_t k = 0; k < ref.size(); ++k) {
        CHECK(std::abs(y(static_cast<Eigen::Index>(k)) - ref[k]) < 1e-12);
        CHECK(std::abs(batch(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) - ref[k]) < 1e-12);
      }
    }
  }
  SUBCASE("length mismatch") {
    const MlpModel m = init_mlp({4, 2}, 1);
    const std::vector<double> x{1, 2, 3};
    CHECK_THROWS_AS(forward(m, x), DataError);
  }
}

TEST_CASE("loss and gradients") {
  const MlpModel m = init_mlp({5, 8, 6, 3}, 3);
  const auto xs = random_rows(6, 5, 4);

  SUBCASE("perfect predictions") {
    std::vector<std::vector<double>> ys;
    for (const auto& x : xs) ys.push_back(oracle::forward(m, x));
    const auto lg = loss_and_gradients(m, columns(xs), columns(ys));
    CHECK(lg.mse == doctest::Approx(0.0));
    CHECK(lg.gradients.weights.back().isZero(1e-15));
    CHECK(lg.gradients.biases.back().isZero(1e-15));
  }
  SUBCASE("central differences") {
    MlpModel r = m;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 0.2);
    for (auto& b : r.biases)
      for (auto& v : b) v = g(rng);
    const auto ys = random_rows(6, 3, 5);
    const auto lg = loss_and_gradients(r, columns(xs), columns(ys));
    CHECK(lg.mse == doctest::Approx(oracle::mse(r, xs, ys)).epsilon(1e-12));
    const auto gc = oracle::gradient_check(r, xs, ys, lg.gradients, 1e-5, 1e-5, 1e-10);
    CHECK(gc.checked == r.parameter_count());
    CHECK(gc.failures == 0);
  }
  SUBCASE("duplicating the batch changes nothing") {
    const auto ys = random_rows(6, 3, 6);
    auto xs2 = xs;
    auto ys2 = ys;
    xs2.insert(xs2.end(), xs.begin(), xs.end());
    ys2.insert(ys2.end(), ys.begin(), ys.end());
    const auto a = loss_and_gradients(m, columns(xs), columns(ys));
    const auto b = loss_and_gradients(m, columns(xs2), columns(ys2));
    CHECK(a.mse == doctest::Approx(b.mse).epsilon(1e-14));
    for (std::size_t l = 0; l < a.gradients.weights.size(); ++l) {
      CHECK(a.gradients.weights[l].isApprox(b.gradients.weights[l], 1e-13));
      CHECK((a.gradients.biases[l] - b.gradients.biases[l]).norm() <= 1e-13 * (1 + a.gradients.biases[l].norm()));
    }
  }
  SUBCASE("sample span overload agrees") {
    const auto ys = random_rows(6, 3, 7);
    std::vector<PatchSample> batch;
    for (std::size_t i = 0; i < xs.size(); ++i) batch.push_back({xs[i], ys[i], {}});
    const auto a = loss_and_gradients(m, columns(xs), columns(ys));
    const auto b = loss_and_gradients(m, batch);
    CHECK(a.mse == b.mse);
    batch[1].target.push_back(0.0);
    CHECK_THROWS_AS(loss_and_gradients(m, batch), DataError);
    CHECK_THROWS_AS(loss_and_gradients(m, std::span<const PatchSample>{}), DataError);
  }
}

TEST_CASE("training") {
  const SampleSet s = linear_samples(400, 6, 2, 13);
  const MlpModel m0 = init_mlp({6, 32, 32, 2}, 1);

  SUBCASE("zero learning rate keeps the parameters") {
    TrainConfig c;
    c.epochs = 3;
    c.learning_rate = 0.0;
    const TrainResult r = train(m0, s, c);
    CHECK(same_parameters(r.model, m0));
    CHECK(r.history.size() == 3);
  }
  SUBCASE("fits a linear map") {
    TrainConfig c;
    c.epochs = 200;
    c.batch_size = 16;
    c.learning_rate = 0.01;
    std::vector<std::size_t> all(s.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const double initial = mean_squared_error(m0, s, all);
    const TrainResult r = train(m0, s, c);
    CHECK(mean_squared_error(r.model, s, all) < 1e-3 * initial);
    CHECK(r.best_epoch < r.history.size());
    for (const auto& e : r.history) CHECK(e.validation >= r.history[r.best_epoch].validation);
  }
  SUBCASE("deterministic") {
    TrainConfig c;
    c.epochs = 5;
    const TrainResult a = train(m0, s, c);
    const TrainResult b = train(m0, s, c);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      CHECK(a.history[i].train == b.history[i].train);
      CHECK(a.history[i].validation == b.history[i].validation);
    }
    CHECK(same_parameters(a.model, b.model));
  }
  SUBCASE("bad inputs") {
    TrainConfig c;
    CHECK_THROWS_AS(train(m0, SampleSet(PatchGeometry::qdl(6, 2, 1, 1)), c), DataError);
    CHECK_THROWS_AS(train(init_mlp({5, 4, 2}, 1), s, c), DataError);
    c.validation_fraction = 1.0;
    CHECK_THROWS_AS(train(m0, s, c), std::invalid_argument);
    c = {};
    c.epochs = 0;
    CHECK_THROWS_AS(train(m0, s, c), std::invalid_argument);
    c = {};
    c.learning_rate = -1.0;
    CHECK_THROWS_AS(train(m0, s, c), std::invalid_argument);
  }
}

TEST_CASE("volume prediction") {
  const PatchGeometry g = PatchGeometry::qdl(2, 3, 3, 1);
  const MlpModel m = init_mlp({g.input_length(), 10, g.target_length()}, 4);
  Volume img(VolumeHeader::make({5, 5, 5}, 2, {2, 2, 2}));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& x : img.data()) x = u(rng);
  const GradientScheme scheme({{1000, Eigen::Vector3d::UnitX()}, {1000, Eigen::Vector3d::UnitY()}});
  const DwiVolume dwi{img, scheme};
  const Volume full(VolumeHeader::make({5, 5, 5}, 1, {2, 2, 2}, DataType::UInt8), 1.0);

  const auto maps = predict_volume(m, dwi, full, g);
  REQUIRE(maps.size() == 3);
  std::size_t nonzero = 0;
  for (std::size_t v = 0; v < maps[0].voxel_count(); ++v) {
    bool any = false;
    for (const auto& mp : maps) any = any || mp.data()[v] != 0.0;
    nonzero += any ? 1 : 0;
  }
  CHECK(nonzero == 27);
  std::vector<double> patch(g.input_length());
  gather_input(img, {2, 1, 3}, 3, patch);
  const auto ref = oracle::forward(m, patch);
  for (std::size_t k = 0; k < 3; ++k) CHECK(maps[k].at(2, 1, 3) == doctest::Approx(ref[k]).epsilon(1e-12));

  PredictOptions one;
  one.threads = 1;
  PredictOptions three;
  three.threads = 3;
  const auto a = predict_volume(m, dwi, full, g, one);
  const auto b = predict_volume(m, dwi, full, g, three);
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::ranges::equal(a[k].data(), b[k].data()));

  const Volume empty(full.header(), 0.0);
  for (const auto& mp : predict_volume(m, dwi, empty, g))
    for (double x : mp.data()) CHECK(x == 0.0);

  const PatchGeometry wrong = PatchGeometry::qdl(3, 3, 3, 1);
  CHECK_THROWS_AS(predict_volume(init_mlp({wrong.input_length(), 3}, 1), dwi, full, wrong), DataError);

  const PatchGeometry sr = PatchGeometry::sr(2, 3, 2, 3, 2);
  const auto hr = predict_volume(init_mlp({sr.input_length(), 4, sr.target_length()}, 2), dwi, full, sr);
  CHECK(hr[0].dims() == Index3{10, 10, 10});
  CHECK(hr[0].header().voxel_size[0] == doctest::Approx(1.0));
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path();
  Checkpoint c{init_mlp({12, 7, 3}, 99), {}, PatchGeometry::qdl(12, 3, 1, 1)};
  c.config.epochs = 17;
  c.config.learning_rate = 0.125;
  c.model.biases[0](2) = -0.375;
  save_checkpoint(dir / "qxfer_test.qxm", c);
  const Checkpoint r = load_checkpoint(dir / "qxfer_test.qxm");
  CHECK(same_parameters(r.model, c.model));
  CHECK(r.model.seed == 99);
  CHECK(r.config.epochs == 17);
  CHECK(r.config.learning_rate == 0.125);
  CHECK(r.geometry == c.geometry);

  {
    std::ofstream f(dir / "qxfer_bad.qxm", std::ios::binary);
    f << "NOTAMODEL-------------------";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "qxfer_bad.qxm"), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir / "qxfer_missing.qxm"), DataError);
  std::filesystem::remove(dir / "qxfer_test.qxm");
  std::filesystem::remove(dir / "qxfer_bad.qxm");
}
