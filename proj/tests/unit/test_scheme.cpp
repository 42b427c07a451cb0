#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "qxfer/error.hpp"
#include "qxfer/scheme.hpp"

using namespace qxfer;

TEST_CASE("parse two-entry FSL text") {
  const auto s = parse_fsl_gradients("0 1000\n", "0 1\n0 0\n0 0\n");
  REQUIRE(s.size() == 2);
  CHECK(s[1].bval == 1000.0);
  CHECK(s[1].bvec == Eigen::Vector3d(1, 0, 0));
  CHECK(s.is_b0(0));
  CHECK_FALSE(s.is_b0(1));
}

TEST_CASE("single b0 entry may carry a zero vector") {
  const auto s = parse_fsl_gradients("0", "0\n0\n0");
  REQUIRE(s.size() == 1);
  CHECK(s.b0_indices().size() == 1);
  CHECK(s.dw_indices().empty());
}

TEST_CASE("malformed gradient text is rejected") {
  CHECK_THROWS_AS(parse_fsl_gradients("0 1000", "0 1 0\n0 0 0\n0 0 0"), DataError);
  CHECK_THROWS_AS(parse_fsl_gradients("0 1000\n5 5", "0 1\n0 0\n0 0"), DataError);
  CHECK_THROWS_AS(parse_fsl_gradients("0 1000", "0 1\n0 0"), DataError);
  CHECK_THROWS_AS(parse_fsl_gradients("0 abc", "0 1\n0 0\n0 0"), DataError);
  // DW direction far from unit length.
  CHECK_THROWS_AS(parse_fsl_gradients("0 1000", "0 0.5\n0 0\n0 0"), DataError);
  CHECK_THROWS_AS(parse_fsl_gradients("0 1000", "0 0\n0 0\n0 0"), DataError);
  CHECK_THROWS_AS(parse_fsl_gradients("-5", "0\n0\n0"), DataError);
}

TEST_CASE("norm tolerance is 1e-4") {
  CHECK_NOTHROW(parse_fsl_gradients("1000", "1.00005\n0\n0"));
  CHECK_THROWS_AS(parse_fsl_gradients("1000", "1.0002\n0\n0"), DataError);
}

TEST_CASE("b0 threshold is configurable") {
  const auto s = parse_fsl_gradients("5 50", "0 1\n0 0\n0 0", 10.0);
  CHECK(s.is_b0(0));
  CHECK_FALSE(s.is_b0(1));
  const auto t = parse_fsl_gradients("5 50", "1 1\n0 0\n0 0", 100.0);
  CHECK(t.b0_indices().size() == 2);
}

TEST_CASE("q magnitudes with the default diffusion time") {
  const GradientScheme s({{0.0, {0, 0, 0}}, {1000.0, {1, 0, 0}}, {3000.0, {0, 1, 0}}});
  const auto q = q_coordinates(s);
  CHECK(q[0].magnitude == 0.0);
  CHECK(q[0].direction == Eigen::Vector3d::UnitZ());
  CHECK(q[1].magnitude == doctest::Approx(31.6228).epsilon(1e-6));
  CHECK(q[2].magnitude == doctest::Approx(54.7723).epsilon(1e-6));
  CHECK(q[2].direction == Eigen::Vector3d::UnitY());
}

TEST_CASE("q magnitude is monotone in b and scales as tau^-1/2") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> b(0.0, 5000.0);
  std::vector<GradientEntry> e;
  for (int i = 0; i < 50; ++i) e.push_back({b(rng), Eigen::Vector3d(0, 0, 1)});
  std::sort(e.begin(), e.end(), [](auto& x, auto& y) { return x.bval < y.bval; });
  const GradientScheme s1(e, kDefaultB0Threshold, kDefaultTau);
  const GradientScheme s4(e, kDefaultB0Threshold, 4 * kDefaultTau);
  const auto q1 = q_coordinates(s1);
  const auto q4 = q_coordinates(s4);
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) CHECK(q1[i].magnitude >= q1[i - 1].magnitude);
    CHECK(std::abs(q4[i].magnitude - 0.5 * q1[i].magnitude) <= 1e-12 * (1 + q1[i].magnitude));
  }
}

TEST_CASE("FSL text round trip keeps 6 significant digits") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> b(100.0, 4000.0);
  std::vector<GradientEntry> e{{0.0, Eigen::Vector3d::Zero()}};
  for (int i = 0; i < 40; ++i) e.push_back({b(rng), Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized()});
  const GradientScheme s(e);
  const auto [vals, vecs] = format_fsl_gradients(s);
  const auto r = parse_fsl_gradients(vals, vecs);
  REQUIRE(r.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(std::abs(r[i].bval - s[i].bval) <= 5e-6 * std::abs(s[i].bval));
    for (int a = 0; a < 3; ++a) CHECK(std::abs(r[i].bvec[a] - s[i].bvec[a]) <= 5e-6 * (std::abs(s[i].bvec[a]) + 1e-300) + 1e-300);
  }
  CHECK(vecs.find("-0 ") == std::string::npos);
}

TEST_CASE("subset and fingerprint") {
  const GradientScheme s({{0.0, {0, 0, 0}}, {1000.0, {1, 0, 0}}, {2000.0, {0, 1, 0}}});
  const std::vector<std::size_t> dw = s.dw_indices();
  const auto sub = s.subset(dw);
  CHECK(sub.size() == 2);
  CHECK(sub[0].bval == 1000.0);
  CHECK(s.fingerprint() == GradientScheme(s.entries()).fingerprint());
  CHECK(s.fingerprint() != sub.fingerprint());
  CHECK(s.fingerprint() != GradientScheme(s.entries(), kDefaultB0Threshold, 2 * kDefaultTau).fingerprint());
}
