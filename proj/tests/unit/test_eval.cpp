#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "doctest.h"
#include "qxfer/error.hpp"
#include "qxfer/eval.hpp"

using namespace qxfer;

namespace {

Volume filled(Index3 dims, std::vector<double> values) {
  Volume v(VolumeHeader::make(dims));
  std::copy(values.begin(), values.end(), v.data().begin());
  return v;
}

}  // namespace

TEST_CASE("masked mean absolute error") {
  const Volume a = filled({2, 2, 1}, {1, 2, 3, 4});
  const Volume b = filled({2, 2, 1}, {1.5, 2, 1, 10});
  const Volume m = filled({2, 2, 1}, {1, 1, 1, 0});
  CHECK(mean_abs_error(a, b, m) == doctest::Approx((0.5 + 0 + 2) / 3.0));
  CHECK(mean_abs_error(a, a, m) == 0.0);
  CHECK_THROWS_AS(mean_abs_error(a, b, filled({2, 2, 1}, {0, 0, 0, 0})), DataError);
  CHECK_THROWS_AS(mean_abs_error(a, filled({4, 1, 1}, {1, 2, 3, 4}), m), DataError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    Volume x(VolumeHeader::make({5, 4, 3}));
    Volume y(x.header());
    Volume mk(x.header());
    for (std::size_t i = 0; i < x.voxel_count(); ++i) {
      x.data()[i] = u(rng);
      y.data()[i] = u(rng);
      mk.data()[i] = u(rng) > 0 ? 1 : 0;
    }
    mk.data()[0] = 1;
    double s = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.voxel_count(); ++i)
      if (mk.data()[i] != 0) {
        s += std::abs(x.data()[i] - y.data()[i]);
        ++n;
      }
    CHECK(mean_abs_error(x, y, mk) == doctest::Approx(s / n).epsilon(1e-13));
  }
}

TEST_CASE("fluid exclusion") {
  const Volume m = filled({3, 1, 1}, {1, 1, 0});
  const Volume f = filled({3, 1, 1}, {0.95, 0.5, 0.1});
  const Volume r = exclude_fluid(m, f);
  CHECK(r.at(0, 0, 0) == 0.0);
  CHECK(r.at(1, 0, 0) == 1.0);
  CHECK(r.at(2, 0, 0) == 0.0);
}

TEST_CASE("incomplete beta agrees with an independent implementation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ab(0.2, 40.0);
  std::uniform_real_distribution<double> xs(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const double a = ab(rng);
    const double b = ab(rng);
    const double x = xs(rng);
    CHECK(regularized_incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-10));
  }
  CHECK(regularized_incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2, 3, 1.0) == 1.0);
}

TEST_CASE("t distribution CDF") {
  struct Q {
    double p, dof, t;
  };
  // Reference quantiles of Student's t.
  for (const Q q : {Q{0.975, 2, 4.302652729911275}, Q{0.975, 5, 2.570581835636314}, Q{0.975, 10, 2.228138851986274},
                    Q{0.95, 10, 1.812461122811676}, Q{0.995, 5, 4.032142983557536}}) {
    CHECK(std::abs(student_t_cdf(q.t, q.dof) - q.p) < 1e-6);
    CHECK(std::abs(student_t_cdf(-q.t, q.dof) - (1 - q.p)) < 1e-6);
  }
  CHECK(student_t_cdf(0.0, 7) == doctest::Approx(0.5));
  for (double dof : {1.0, 2.5, 9.0, 30.0})
    for (double t : {-6.0, -1.3, 0.2, 2.0, 11.0}) {
      const boost::math::students_t d(dof);
      CHECK(std::abs(student_t_cdf(t, dof) - boost::math::cdf(d, t)) < 1e-12);
    }
}

TEST_CASE("paired t-test") {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> zero{0, 0, 0};
  const TTestResult r = paired_t_test(a, zero);
  CHECK(std::abs(r.t - 3.4641) < 1e-3);
  CHECK(std::abs(r.p - 0.0742) < 1e-3);
  CHECK(r.dof == 2);
  CHECK(r.mean_difference == doctest::Approx(2.0));
  const boost::math::students_t d(2);
  CHECK(r.p == doctest::Approx(2 * boost::math::cdf(boost::math::complement(d, r.t))).epsilon(1e-12));

  const TTestResult s = paired_t_test(zero, a);
  CHECK(s.t == doctest::Approx(-r.t));
  CHECK(s.p == doctest::Approx(r.p));

  CHECK_THROWS_AS(paired_t_test(std::vector<double>{1}, std::vector<double>{0}), DataError);
  CHECK_THROWS_AS(paired_t_test(a, std::vector<double>{0, 0}), DataError);
  CHECK_THROWS_AS(paired_t_test(a, std::vector<double>{0, 1, 2}), DataError);
}

TEST_CASE("summaries") {
  ErrorTable t;
  t.columns = {"a", "b"};
  CHECK_THROWS_AS(summarize(t), DataError);
  t.add_row({1.0, 5.0});
  const Summary one = summarize(t);
  CHECK(one.single_subject);
  CHECK(one.columns[0].mean == 1.0);
  CHECK(one.columns[0].sd == 0.0);

  t.add_row({2.0, 5.0});
  t.add_row({6.0, 5.0});
  const Summary s = summarize(t);
  CHECK_FALSE(s.single_subject);
  CHECK(s.columns[0].mean == doctest::Approx(3.0));
  CHECK(s.columns[0].sd == doctest::Approx(std::sqrt(((4.0 + 1.0 + 9.0)) / 2.0)));
  CHECK(s.columns[1].sd == 0.0);
  CHECK(t.column("b") == std::vector<double>{5, 5, 5});
  CHECK_THROWS(t.column("c"));
  CHECK_THROWS_AS(t.add_row({1.0}), DataError);

  const auto path = std::filesystem::temp_directory_path() / "qxfer_test_errors.tsv";
  write_tsv(path, t);
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  CHECK(header == "subject\ta\tb");
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) n += line.empty() ? 0 : 1;
  CHECK(n == 3);
  std::filesystem::remove(path);
}
