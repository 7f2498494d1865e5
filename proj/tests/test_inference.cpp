#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "aissqp/inference.hpp"

using namespace aissqp;

namespace {

// V_t straight from its definition: (1/t^2) sum_i i^2 (s_bar_i - s_bar_t)(...)^T.
Matrix direct_rs(const std::vector<Vector>& stream) {
  const auto n = stream.front().size();
  const auto t = static_cast<int>(stream.size());
  std::vector<Vector> means;
  Vector acc = Vector::Zero(n);
  for (int i = 0; i < t; ++i) {
    acc += stream[static_cast<std::size_t>(i)];
    means.push_back(acc / (i + 1));
  }
  Matrix V = Matrix::Zero(n, n);
  for (int i = 1; i <= t; ++i) {
    const Vector diff = means[static_cast<std::size_t>(i - 1)] - means.back();
    V += static_cast<double>(i) * i * diff * diff.transpose();
  }
  return V / (static_cast<double>(t) * t);
}

// Standard normal quantile by bisection on 0.5 erfc(-x / sqrt 2).
double bisect_normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("random scaling matches the double-sum definition") {
  RandomStream rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(7));
    const int t = 2 + static_cast<int>(rng.index(300));
    std::vector<Vector> stream;
    RandomScalingState rs(n);
    const double offset = 100.0 * rng.normal();
    for (int i = 0; i < t; ++i) {
      Vector s(n);
      for (int k = 0; k < n; ++k) s[k] = offset + rng.normal();
      stream.push_back(s);
      rs.update(s);
    }
    const Matrix oracle = direct_rs(stream);
    CHECK((rs.materialize() - oracle).norm() <= 1e-10 * oracle.norm());
    const Vector w = Vector::LinSpaced(n, -1, 1);
    CHECK(rs.quadratic_form(w) == doctest::Approx(w.dot(oracle * w)).epsilon(1e-9));
    Vector mean = Vector::Zero(n);
    for (const auto& s : stream) mean += s;
    CHECK((rs.mean() - mean / t).norm() < 1e-9 * (1.0 + std::abs(offset)));
  }
}

TEST_CASE("random scaling small cases") {
  RandomScalingState rs(2);
  rs.update(Vector::Constant(2, 3.0));
  CHECK(rs.materialize().isZero());
  CHECK(rs.count() == 1);

  RandomScalingState constant(3);
  for (int i = 0; i < 50; ++i) constant.update(Vector::Constant(3, -2.5));
  CHECK(constant.materialize().norm() < 1e-12);

  // s = (0, 1): s_bar = (0, 0.5), V_2 = (1/4)(1^2 (0 - 0.5)^2 + 2^2 * 0).
  RandomScalingState scalar(1);
  scalar.update(Vector::Zero(1));
  scalar.update(Vector::Ones(1));
  CHECK(scalar.materialize()(0, 0) == doctest::Approx(0.0625));

  // Default-constructed state adopts the first element's dimension.
  RandomScalingState lazy;
  lazy.update(Vector::Ones(4));
  CHECK(lazy.dim() == 4);
  CHECK_THROWS_AS(lazy.update(Vector::Ones(3)), std::invalid_argument);
  CHECK_THROWS_AS(RandomScalingState(2).mean(), std::logic_error);
}

TEST_CASE("random scaling quantiles") {
  CHECK(random_scaling_quantile(0.90) == 3.875);
  CHECK(random_scaling_quantile(0.95) == 5.323);
  CHECK(random_scaling_quantile(0.975) == 6.747);
  CHECK(random_scaling_quantile(0.99) == 8.613);
  CHECK(random_scaling_quantile(0.9625) == doctest::Approx(6.035));
  CHECK_THROWS_AS(random_scaling_quantile(0.5), std::invalid_argument);
  CHECK_THROWS_AS(random_scaling_quantile(0.995), std::invalid_argument);
}

TEST_CASE("normal quantile agrees with an erfc bisection") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  for (double p : {0.01, 0.1, 0.3, 0.5, 0.8, 0.95, 0.999}) {
    CHECK(normal_quantile(p) == doctest::Approx(bisect_normal_quantile(p)).epsilon(1e-10).scale(1.0));
  }
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("random scaling interval") {
  RandomScalingState rs(1);
  rs.update(Vector::Zero(1));
  const ConfidenceInterval early = rs_confint(rs, Vector::Ones(1), 0.95);
  CHECK_FALSE(early.available);
  CHECK_FALSE(early.contains(0.0));

  rs.update(Vector::Ones(1));
  const ConfidenceInterval ci = rs_confint(rs, Vector::Ones(1), 0.95);
  CHECK(ci.available);
  CHECK(ci.center == doctest::Approx(0.5));
  CHECK(ci.half_width == doctest::Approx(6.747 * std::sqrt(0.0625 / 2)));
  CHECK(ci.contains(0.5));
  CHECK(ci.length() == doctest::Approx(2 * ci.half_width));
  CHECK_THROWS_AS(rs_confint(rs, Vector::Ones(1), 1.0), std::invalid_argument);
}

TEST_CASE("random scaling covers the mean of an i.i.d. stream") {
  RandomStream rng(42);
  int covered = 0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    RandomScalingState rs(1);
    Vector s(1);
    for (int i = 0; i < 2000; ++i) {
      s[0] = rng.normal();
      rs.update(s);
    }
    covered += rs_confint(rs, Vector::Ones(1), 0.95).contains(0.0) ? 1 : 0;
  }
  const double cov = static_cast<double>(covered) / reps;
  CHECK(cov > 0.91);
  CHECK(cov < 0.99);
}

TEST_CASE("plug-in covariance") {
  // K = I: Xi is Omega padded with zeros.
  PluginState st(2, 1);
  Vector g(2);
  g << 1, 2;
  st.update(g, Matrix::Identity(3, 3));
  g << -1, 0;
  st.update(g, Matrix::Identity(3, 3));
  Matrix omega(2, 2);
  omega << 1, 1, 1, 2;
  const Matrix xi = st.covariance();
  CHECK(xi.topLeftCorner(2, 2).isApprox(omega));
  CHECK(xi.row(2).isZero());

  // General K: the sandwich K^-1 blockdiag(Omega, 0) K^-1.
  Matrix K(3, 3);
  K << 2, 0.5, 1, 0.5, 3, -1, 1, -1, 0;
  st.update(g, K);
  Matrix pad = Matrix::Zero(3, 3);
  pad.topLeftCorner(2, 2) = st.grad_outer_sum() / 3.0;
  const Matrix Ki = K.inverse();
  CHECK((st.covariance() - Ki * pad * Ki).norm() < 1e-12);

  CHECK_THROWS_AS(PluginState(2, 1).covariance(), std::runtime_error);
  PluginState sing(1, 1);
  sing.update(Vector::Ones(1), Matrix::Zero(2, 2));
  CHECK_THROWS_AS(sing.covariance(), std::runtime_error);
  CHECK_THROWS_AS(sing.update(Vector::Ones(2), Matrix::Zero(2, 2)), std::invalid_argument);
}

TEST_CASE("plug-in covariance of an i.i.d. stream") {
  RandomStream rng(43);
  Matrix L(2, 2);
  L << 1, 0, 0.6, 0.8;
  const Matrix sigma = L * L.transpose();
  PluginState st(2, 0);
  const int N = 100000;
  for (int i = 0; i < N; ++i) {
    Vector z(2);
    z << rng.normal(), rng.normal();
    const Vector g = L * z;
    st.update(g, Matrix::Identity(2, 2));
  }
  const Matrix est = st.grad_outer_sum() / N;
  // s.e. of the (i,j) entry of a sample covariance of Gaussians.
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / N);
      CHECK(std::abs(est(i, j) - sigma(i, j)) < 4.0 * se);
    }
}

TEST_CASE("plug-in interval scalings") {
  const Matrix xi = 4.0 * Matrix::Identity(1, 1);
  const Vector c = Vector::Constant(1, 1.0), w = Vector::Ones(1);
  const auto avg = plugin_confint(xi, 100, c, w, 0.95, PluginScaling::averaged);
  CHECK(avg.half_width == doctest::Approx(normal_quantile(0.975) * 0.2));
  const auto last = plugin_confint(xi, 100, c, w, 0.95, PluginScaling::last, 0.01);
  CHECK(last.half_width == doctest::Approx(normal_quantile(0.975) * 0.2));
  CHECK_THROWS_AS(plugin_confint(xi, 100, c, w, 0.95, PluginScaling::last, 0.0),
                  std::invalid_argument);
  CHECK_FALSE(plugin_confint(xi, 0, c, w, 0.95, PluginScaling::averaged).available);
  const auto neg = plugin_confint(-xi, 100, c, w, 0.95, PluginScaling::averaged);
  CHECK(neg.clamped);
  CHECK(neg.half_width == 0.0);
}

TEST_CASE("batch means schedule") {
  BatchMeansState bm(1, 0.5);
  CHECK(bm.batch_start(1) == 1);
  CHECK(bm.batch_start(2) == 16);
  CHECK(bm.batch_start(3) == 81);
  CHECK_THROWS_AS(BatchMeansState(1, 1.0), std::invalid_argument);

  // Stream i at index i: element 0 is unbatched, batch 1 is 1..15.
  for (int i = 0; i < 100; ++i) bm.update(Vector::Constant(1, i));
  REQUIRE(bm.completed().size() == 2);
  CHECK(bm.completed()[0].length == 15);
  CHECK(bm.completed()[0].mean[0] == doctest::Approx(8.0));
  CHECK(bm.completed()[1].length == 65);
  CHECK(bm.completed()[1].mean[0] == doctest::Approx(48.0));

  BatchMeansState few(1, 0.5);
  for (int i = 0; i < 20; ++i) few.update(Vector::Zero(1));
  CHECK_FALSE(few.covariance(Vector::Zero(1)).has_value());
  CHECK_FALSE(bm_confint(few, Vector::Zero(1), Vector::Ones(1), 0.95).available);
}

TEST_CASE("batch means covariance and interval by hand") {
  BatchMeansState bm(1, 0.5);
  for (int i = 0; i < 100; ++i) bm.update(Vector::Constant(1, i));
  const Vector sbar = Vector::Constant(1, 49.5);
  const double expect = (15 * std::pow(8.0 - 49.5, 2) + 65 * std::pow(48.0 - 49.5, 2)) / 2.0;
  CHECK((*bm.covariance(sbar))(0, 0) == doctest::Approx(expect));
  const auto ci = bm_confint(bm, sbar, Vector::Ones(1), 0.95);
  CHECK(ci.half_width == doctest::Approx(normal_quantile(0.975) * std::sqrt(expect / 100)));
}

TEST_CASE("batch means covers the mean of an i.i.d. stream") {
  RandomStream rng(44);
  int covered = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    BatchMeansState bm(1);
    Vector s(1), sum = Vector::Zero(1);
    const int T = 20000;
    for (int i = 0; i < T; ++i) {
      s[0] = rng.normal();
      sum += s;
      bm.update(s);
    }
    covered += bm_confint(bm, sum / T, Vector::Ones(1), 0.95).contains(0.0) ? 1 : 0;
  }
  const double cov = static_cast<double>(covered) / reps;
  CHECK(cov >= 0.80);
  CHECK(cov <= 0.99);
}

TEST_CASE("weights and alignment") {
  const Vector w = coordinate_average_weights(4, 2);
  CHECK(w.head(4).isApprox(Vector::Constant(4, 0.25)));
  CHECK(w.tail(2).isZero());

  Matrix G(1, 3);
  G << 1, 0, 0;
  Vector along = Vector::Zero(4), across = Vector::Zero(4);
  along[0] = 1;
  across[1] = 1;
  CHECK(normal_alignment(along, G) == doctest::Approx(1.0));
  CHECK(normal_alignment(across, G) == doctest::Approx(0.0));
  CHECK(normal_alignment(Vector::Zero(4), G) == 0.0);
}
