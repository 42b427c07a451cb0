#include <filesystem>
#include <random>

#include "doctest.h"
#include "qxfer/error.hpp"
#include "qxfer/patches.hpp"

using namespace qxfer;

namespace {

Volume mask_of(Index3 dims, double fill = 1.0) {
  return Volume(VolumeHeader::make(dims, 1, {1, 1, 1}, DataType::UInt8), fill);
}

GradientScheme scheme_of(std::size_t n) {
  std::vector<GradientEntry> e;
  for (std::size_t i = 0; i < n; ++i) e.push_back({1000.0, Eigen::Vector3d::UnitX()});
  return GradientScheme(e);
}

DwiVolume random_dwi(Index3 dims, std::size_t n, std::uint64_t seed) {
  Volume v(VolumeHeader::make(dims, n));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& x : v.data()) x = u(rng);
  return {v, scheme_of(n)};
}

// Direct triple loop over every voxel.
std::size_t brute_force_count(const Volume& mask, int in_size) {
  const auto h = static_cast<std::size_t>(in_size / 2);
  const Index3 d = mask.dims();
  std::size_t n = 0;
  for (std::size_t z = 0; z < d[2]; ++z)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[0]; ++x) {
        if (mask.at(x, y, z) == 0.0) continue;
        if (x < h || y < h || z < h) continue;
        if (x + h >= d[0] || y + h >= d[1] || z + h >= d[2]) continue;
        ++n;
      }
  return n;
}

}  // namespace

TEST_CASE("geometry validation") {
  CHECK_NOTHROW(PatchGeometry::qdl(10, 3).validate());
  CHECK_NOTHROW(PatchGeometry::sr(10, 3).validate());
  CHECK(PatchGeometry::qdl(10, 3).input_length() == 270);
  CHECK(PatchGeometry::sr(10, 3).target_length() == 24);
  CHECK_THROWS_AS(PatchGeometry::qdl(10, 3, 4, 1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(PatchGeometry::qdl(10, 3, 3, 5).validate(), std::invalid_argument);
  CHECK_THROWS_AS(PatchGeometry::sr(10, 3, 2, 5, 3).validate(), std::invalid_argument);
}

TEST_CASE("eligible centre counts") {
  CHECK(eligible_centers(mask_of({5, 5, 5}, 0.0), 3).empty());
  CHECK(eligible_centers(mask_of({5, 5, 5}), 3).size() == 27);
  CHECK(eligible_centers(mask_of({7, 7, 7}), 5).size() == 27);
  const auto c = eligible_centers(mask_of({5, 5, 5}), 3);
  CHECK(c.front() == Index3{1, 1, 1});
  CHECK(c[1] == Index3{2, 1, 1});
  CHECK(c.back() == Index3{3, 3, 3});
  CHECK(eligible_centers(mask_of({5, 5, 5}), 3, 2).size() == 8);
}

TEST_CASE("sample counts match brute force on random masks") {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const Index3 dims{dim(rng), dim(rng), dim(rng)};
    Volume m = mask_of(dims, 0.0);
    const double density = u(rng);
    for (double& x : m.data()) x = u(rng) < density ? 1.0 : 0.0;
    for (int in : {1, 3, 5}) CHECK(eligible_centers(m, in).size() == brute_force_count(m, in));
    const DwiVolume dwi = random_dwi(dims, 2, static_cast<std::uint64_t>(t));
    const std::vector<Volume> meas{Volume(VolumeHeader::make(dims))};
    CHECK(extract_qdl(dwi, meas, m, 3, 1).size() == brute_force_count(m, 3));
  }
}

TEST_CASE("input layout is voxel-major then gradient") {
  const DwiVolume dwi = random_dwi({4, 5, 6}, 3, 7);
  const Index3 c{2, 2, 3};
  std::vector<double> buf(27 * 3);
  gather_input(dwi.image, c, 3, buf);
  std::size_t k = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        for (std::size_t g = 0; g < 3; ++g) {
          CHECK(buf[k++] == dwi.image.at(c[0] + static_cast<std::size_t>(dx), c[1] + static_cast<std::size_t>(dy),
                                         c[2] + static_cast<std::size_t>(dz), g));
        }
}

TEST_CASE("constant signals give identical inputs") {
  const DwiVolume dwi{Volume(VolumeHeader::make({5, 5, 5}, 4), 0.25), scheme_of(4)};
  const std::vector<Volume> meas{Volume(VolumeHeader::make({5, 5, 5}), 1.0)};
  const SampleSet s = extract_qdl(dwi, meas, mask_of({5, 5, 5}));
  REQUIRE(s.size() == 27);
  for (std::size_t i = 1; i < s.size(); ++i) {
    const auto a = s.input(0);
    const auto b = s.input(i);
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST_CASE("super-resolution targets") {
  const DwiVolume lr = random_dwi({3, 3, 3}, 2, 9);
  std::vector<Volume> hr{Volume(VolumeHeader::make({6, 6, 6}))};
  for (std::size_t i = 0; i < hr[0].data().size(); ++i) hr[0].data()[i] = static_cast<double>(i);
  const SampleSet s = extract_sr(lr, hr, mask_of({3, 3, 3}), 2, 3, 2);
  REQUIRE(s.size() == 1);
  CHECK(s.center(0) == Index3{1, 1, 1});
  const auto t = s.target(0);
  std::size_t k = 0;
  for (std::size_t z = 2; z <= 3; ++z)
    for (std::size_t y = 2; y <= 3; ++y)
      for (std::size_t x = 2; x <= 3; ++x) CHECK(t[k++] == hr[0].at(x, y, z));

  std::vector<Volume> wrong{Volume(VolumeHeader::make({8, 6, 6}))};
  CHECK_THROWS_AS(extract_sr(lr, wrong, mask_of({3, 3, 3}), 2, 3, 2), DataError);
}

TEST_CASE("assemble") {
  SUBCASE("overlaps are averaged") {
    const PatchGeometry g = PatchGeometry::qdl(1, 1, 3, 1);
    const std::vector<PatchPrediction> p{{{1, 1, 1}, {0.2}}, {{1, 1, 1}, {0.4}}};
    const auto maps = assemble(p, g, {3, 3, 3});
    CHECK(maps[0].at(1, 1, 1) == doctest::Approx(0.3));
    CHECK(maps[0].at(0, 0, 0) == 0.0);
  }
  SUBCASE("adjacent SR blocks are disjoint") {
    const PatchGeometry g = PatchGeometry::sr(1, 1, 2, 3, 2);
    std::vector<PatchPrediction> p{{{1, 1, 1}, std::vector<double>(8, 1.0)}, {{2, 1, 1}, std::vector<double>(8, 2.0)}};
    const auto maps = assemble(p, g, {8, 8, 8});
    CHECK(maps[0].at(3, 3, 3) == 1.0);
    CHECK(maps[0].at(4, 2, 2) == 2.0);
    CHECK(maps[0].at(5, 3, 3) == 2.0);
  }
  SUBCASE("out of bounds") {
    const PatchGeometry g = PatchGeometry::qdl(1, 1, 3, 3);
    const std::vector<PatchPrediction> p{{{0, 1, 1}, std::vector<double>(27, 1.0)}};
    CHECK_THROWS_AS(assemble(p, g, {3, 3, 3}), DataError);
  }
}

TEST_CASE("extract then assemble reproduces the targets on covered voxels") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    Volume m = mask_of({8, 7, 6}, 0.0);
    for (double& x : m.data()) x = u(rng) < 0.6 ? 1.0 : 0.0;
    const DwiVolume dwi = random_dwi({8, 7, 6}, 2, static_cast<std::uint64_t>(t));
    std::vector<Volume> meas{Volume(VolumeHeader::make({8, 7, 6})), Volume(VolumeHeader::make({8, 7, 6}))};
    for (auto& v : meas)
      for (double& x : v.data()) x = u(rng);

    for (int out : {1, 3}) {
      const SampleSet s = extract_qdl(dwi, meas, m, 3, out);
      std::vector<PatchPrediction> p;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const auto tg = s.target(i);
        p.push_back({s.center(i), std::vector<double>(tg.begin(), tg.end())});
      }
      const auto maps = assemble(p, s.geometry(), {8, 7, 6});
      std::vector<Index3> centers;
      for (std::size_t i = 0; i < s.size(); ++i) centers.push_back(s.center(i));
      const Volume cov = coverage_mask(centers, s.geometry(), {8, 7, 6});
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t v = 0; v < cov.voxel_count(); ++v)
          if (cov.data()[v] != 0.0) CHECK(maps[k].data()[v] == doctest::Approx(meas[k].data()[v]).epsilon(1e-14));
    }

    Volume lr_mask = mask_of({4, 4, 3}, 0.0);
    for (double& x : lr_mask.data()) x = u(rng) < 0.8 ? 1.0 : 0.0;
    std::vector<Volume> hr{Volume(VolumeHeader::make({8, 8, 6}))};
    for (double& x : hr[0].data()) x = u(rng);
    const SampleSet s = extract_sr(random_dwi({4, 4, 3}, 2, 5), hr, lr_mask, 2, 3, 2);
    std::vector<PatchPrediction> p;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto tg = s.target(i);
      p.push_back({s.center(i), std::vector<double>(tg.begin(), tg.end())});
    }
    const auto maps = assemble(p, s.geometry(), {8, 8, 6});
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Index3 c = s.center(i);
      for (std::size_t dz = 0; dz < 2; ++dz)
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const Index3 v{2 * c[0] + dx, 2 * c[1] + dy, 2 * c[2] + dz};
            CHECK(maps[0].at(v) == hr[0].at(v));
          }
    }
  }
}

TEST_CASE("sample file round trip") {
  const DwiVolume dwi{Volume(VolumeHeader::make({5, 5, 4}, 2)), scheme_of(2)};
  Volume img = dwi.image;
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<double>(i % 17) * 0.25;
  std::vector<Volume> meas{Volume(VolumeHeader::make({5, 5, 4}), 0.5)};
  const SampleSet s = extract_qdl({img, dwi.scheme}, meas, mask_of({5, 5, 4}));
  const auto path = std::filesystem::temp_directory_path() / "qxfer_test_samples.bin";
  save_samples(path, s);
  const SampleSet r = load_samples(path);
  CHECK(r.geometry() == s.geometry());
  REQUIRE(r.size() == s.size());
  CHECK(std::equal(r.inputs().begin(), r.inputs().end(), s.inputs().begin(), s.inputs().end()));
  CHECK(std::equal(r.targets().begin(), r.targets().end(), s.targets().begin(), s.targets().end()));
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(r.center(i) == s.center(i));
  std::filesystem::remove(path);
}
