#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles/shore_oracle.hpp"
#include "qxfer/error.hpp"
#include "qxfer/resample.hpp"
#include "qxfer/synth.hpp"

using namespace qxfer;

namespace {

Volume filled(Index3 dims, std::size_t volumes, std::uint64_t seed) {
  Volume v(VolumeHeader::make(dims, volumes));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& x : v.data()) x = u(rng);
  return v;
}

Volume full_mask(Index3 dims) { return Volume(VolumeHeader::make(dims, 1, {1, 1, 1}, DataType::UInt8), 1.0); }

GradientScheme two_entry() { return GradientScheme({{0.0, Eigen::Vector3d::Zero()}, {1000.0, {1, 0, 0}}}); }

}  // namespace

TEST_CASE("b0 normalization") {
  SUBCASE("single b0") {
    Volume img(VolumeHeader::make({1, 1, 1}, 2));
    img.at(0, 0, 0, 0) = 2.0;
    img.at(0, 0, 0, 1) = 1.0;
    const auto n = normalize_b0({img, two_entry()});
    CHECK(n.dwi.image.volumes() == 1);
    CHECK(n.dwi.scheme.size() == 1);
    CHECK(n.dwi.image.at(0, 0, 0) == 0.5);
    CHECK(n.excluded.at(0, 0, 0) == 0.0);
  }
  SUBCASE("zero b0 is flagged") {
    Volume img(VolumeHeader::make({2, 1, 1}, 2));
    img.at(0, 0, 0, 0) = 0.0;
    img.at(0, 0, 0, 1) = 0.7;
    img.at(1, 0, 0, 0) = 1.0;
    img.at(1, 0, 0, 1) = 0.7;
    const auto n = normalize_b0({img, two_entry()});
    CHECK(n.dwi.image.at(0, 0, 0) == 0.0);
    CHECK(n.excluded.at(0, 0, 0) == 1.0);
    CHECK(n.excluded.at(1, 0, 0) == 0.0);
  }
  SUBCASE("mean of two b0 volumes") {
    const GradientScheme s({{0.0, Eigen::Vector3d::Zero()}, {5.0, Eigen::Vector3d::Zero()}, {1000.0, {0, 1, 0}}});
    Volume img(VolumeHeader::make({1, 1, 1}, 3));
    img.at(0, 0, 0, 0) = 1.0;
    img.at(0, 0, 0, 1) = 3.0;
    img.at(0, 0, 0, 2) = 1.0;
    const auto n = normalize_b0({img, s});
    CHECK(n.b0_map.at(0, 0, 0) == 2.0);
    CHECK(n.dwi.image.at(0, 0, 0) == 0.5);
  }
  SUBCASE("no b0 entry") {
    const GradientScheme s({{1000.0, {1, 0, 0}}});
    CHECK_THROWS_AS(normalize_b0({Volume(VolumeHeader::make({1, 1, 1}, 1)), s}), DataError);
  }
}

TEST_CASE("block-mean downsampling") {
  SUBCASE("1..8 cube") {
    Volume v(VolumeHeader::make({2, 2, 2}));
    std::iota(v.data().begin(), v.data().end(), 1.0);
    const Volume d = block_mean_downsample(v, 2);
    CHECK(d.dims() == Index3{1, 1, 1});
    CHECK(d.at(0, 0, 0) == 4.5);
  }
  SUBCASE("constant volume stays constant") {
    for (int g : {1, 2, 3}) {
      const Volume d = block_mean_downsample(Volume(VolumeHeader::make({7, 6, 9}, 2), 3.25), g);
      for (double x : d.data()) CHECK(x == 3.25);
    }
  }
  SUBCASE("gamma 1 is the identity") {
    const Volume v = filled({4, 3, 5}, 2, 1);
    const Volume d = block_mean_downsample(v, 1);
    CHECK(std::equal(d.data().begin(), d.data().end(), v.data().begin(), v.data().end()));
  }
  SUBCASE("global mean is preserved on divisible grids") {
    std::uint64_t seed = 10;
    for (int g : {2, 3}) {
      const Volume v = filled({static_cast<std::size_t>(2 * g), static_cast<std::size_t>(3 * g), static_cast<std::size_t>(g)}, 3, seed++);
      const Volume d = block_mean_downsample(v, g);
      const double a = std::accumulate(v.data().begin(), v.data().end(), 0.0) / static_cast<double>(v.data().size());
      const double b = std::accumulate(d.data().begin(), d.data().end(), 0.0) / static_cast<double>(d.data().size());
      CHECK(std::abs(a - b) < 1e-14);
    }
  }
  SUBCASE("header follows the new grid") {
    Volume v(VolumeHeader::make({5, 4, 4}, 1, {1.25, 1.25, 1.5}));
    const Volume d = block_mean_downsample(v, 2);
    CHECK(d.dims() == Index3{2, 2, 2});
    CHECK(d.header().voxel_size[0] == 2.5);
    CHECK(d.header().voxel_size[2] == 3.0);
    CHECK(d.header().sform(0, 0) == 2.5);
    CHECK(d.header().description.find("crop") != std::string::npos);
  }
  SUBCASE("bad factors") {
    const Volume v(VolumeHeader::make({3, 3, 3}));
    CHECK_THROWS_AS(block_mean_downsample(v, 0), std::invalid_argument);
    CHECK_THROWS_AS(block_mean_downsample(v, 4), DataError);
  }
}

TEST_CASE("mask downsampling and block upsampling") {
  Volume m(VolumeHeader::make({2, 2, 2}, 1, {1, 1, 1}, DataType::UInt8));
  for (int i = 0; i < 5; ++i) m.data()[static_cast<std::size_t>(i)] = 1.0;
  CHECK(downsample_mask(m, 2).at(0, 0, 0) == 1.0);
  m.data()[4] = 0.0;
  CHECK(downsample_mask(m, 2).at(0, 0, 0) == 1.0);  // exactly 0.5
  m.data()[3] = 0.0;
  CHECK(downsample_mask(m, 2).at(0, 0, 0) == 0.0);
  CHECK(downsample_mask(full_mask({4, 4, 4}), 2).data()[5] == 1.0);
  const Volume empty(VolumeHeader::make({4, 4, 4}, 1, {1, 1, 1}, DataType::UInt8));
  const Volume empty_down = downsample_mask(empty, 2);
  for (double x : empty_down.data()) CHECK(x == 0.0);

  const Volume v = filled({2, 3, 2}, 1, 3);
  const Volume up = block_upsample(v, 2);
  CHECK(up.dims() == Index3{4, 6, 4});
  CHECK(up.at(3, 5, 2) == v.at(1, 2, 1));
  const Volume back = block_mean_downsample(up, 2);
  for (std::size_t i = 0; i < v.data().size(); ++i) CHECK(back.data()[i] == doctest::Approx(v.data()[i]).epsilon(1e-15));
}

TEST_CASE("q-space resampling") {
  const GradientScheme src = default_source_scheme();
  const GradientScheme src_dw = src.subset(src.dw_indices());
  const GradientScheme dst = default_target_scheme();
  const GradientScheme dst_dw = dst.subset(dst.dw_indices());

  SUBCASE("zero input gives zero output") {
    const DwiVolume zero{Volume(VolumeHeader::make({2, 2, 1}, src_dw.size())), src_dw};
    const auto out = resample_qspace(zero, full_mask({2, 2, 1}), ShoreBasisSpec{}, dst_dw);
    CHECK(out.image.volumes() == dst_dw.size());
    for (double x : out.image.data()) CHECK(x == 0.0);
  }
  SUBCASE("signal in the basis span is reproduced") {
    ShoreBasisSpec spec;
    spec.lambda_l = spec.lambda_n = 0.0;
    const GradientScheme dense = shell_scheme({1000.0, 2000.0, 3000.0}, 30, 4);
    const auto phi = design_matrix(dense, spec);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd c(50);
    for (auto& x : c) x = n(rng);
    const Eigen::VectorXd y = phi.values * c;
    Volume img(VolumeHeader::make({1, 1, 1}, dense.size()));
    img.write_signal(0, {y.data(), static_cast<std::size_t>(y.size())});
    const auto out = resample_qspace({img, dense}, full_mask({1, 1, 1}), spec, dense);
    for (std::size_t i = 0; i < dense.size(); ++i) CHECK(std::abs(out.image.data()[i] - y[static_cast<Eigen::Index>(i)]) < 1e-8);
  }
  SUBCASE("commutes with voxel-wise scaling and ignores thread count") {
    const Volume v = filled({3, 3, 2}, src_dw.size(), 5);
    Volume scaled = v;
    std::vector<double> factor(v.voxel_count());
    for (std::size_t i = 0; i < factor.size(); ++i) factor[i] = 0.5 + static_cast<double>(i);
    for (std::size_t k = 0; k < v.volumes(); ++k)
      for (std::size_t i = 0; i < v.voxel_count(); ++i) scaled.data()[k * v.voxel_count() + i] *= factor[i];
    ResampleOptions one;
    one.threads = 1;
    ResampleOptions three;
    three.threads = 3;
    const auto a = resample_qspace({v, src_dw}, full_mask(v.dims()), ShoreBasisSpec{}, dst_dw, one);
    const auto b = resample_qspace({scaled, src_dw}, full_mask(v.dims()), ShoreBasisSpec{}, dst_dw, three);
    const auto a3 = resample_qspace({v, src_dw}, full_mask(v.dims()), ShoreBasisSpec{}, dst_dw, three);
    CHECK(std::equal(a.image.data().begin(), a.image.data().end(), a3.image.data().begin()));
    for (std::size_t k = 0; k < a.image.volumes(); ++k)
      for (std::size_t i = 0; i < v.voxel_count(); ++i) {
        const double x = a.image.data()[k * v.voxel_count() + i] * factor[i];
        CHECK(std::abs(b.image.data()[k * v.voxel_count() + i] - x) <= 1e-10 * (1 + std::abs(x)));
      }
  }
  SUBCASE("unmasked voxels are zero; mismatches are errors") {
    const Volume v = filled({2, 1, 1}, src_dw.size(), 6);
    Volume m = full_mask({2, 1, 1});
    m.at(1, 0, 0) = 0.0;
    const auto out = resample_qspace({v, src_dw}, m, ShoreBasisSpec{}, dst_dw);
    for (std::size_t k = 0; k < out.image.volumes(); ++k) CHECK(out.image.at(1, 0, 0, k) == 0.0);
    CHECK_THROWS_AS(resample_qspace({v, src_dw}, full_mask({3, 1, 1}), ShoreBasisSpec{}, dst_dw), DataError);
    CHECK_THROWS_AS(resample_qspace({v, dst_dw}, full_mask({2, 1, 1}), ShoreBasisSpec{}, dst_dw), DataError);
  }
  SUBCASE("coefficient volume") {
    const Volume v = filled({2, 2, 2}, src_dw.size(), 7);
    const Volume c = fit_shore_volume({v, src_dw}, full_mask({2, 2, 2}), ShoreBasisSpec{});
    CHECK(c.volumes() == 50);
    const auto dm = design_matrix(src_dw, ShoreBasisSpec{});
    const auto reg = RegularizerSpec::from_index_set(dm.index_set);
    std::vector<double> y(src_dw.size());
    v.read_signal(3, y);
    const auto ref = fit_coefficients(dm, reg, 1e-8, 1e-8, y);
    for (Eigen::Index j = 0; j < 50; ++j) CHECK(c.data()[static_cast<std::size_t>(j) * 8 + 3] == doctest::Approx(ref[j]).epsilon(1e-12));
  }
}
