#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "support/synth.hpp"
#include "trajectory.hpp"

namespace {

// Sample variance (n-1) of a vector, for dispersion comparisons.
double sample_var(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_SUITE("trajectory") {

TEST_CASE("moments of a constant series are the constant with zero spread") {
  const gbwm::ReturnSeries s = synth::constant_series(50, 0.003, 0.011);
  const gbwm::Moments m = gbwm::estimate_moments(s, 0, s.size());
  CHECK(m.mu[0] == doctest::Approx(0.003).epsilon(1e-15));
  CHECK(m.mu[1] == doctest::Approx(0.011).epsilon(1e-15));
  // Accumulation order leaves ~1e-36 residue; zero for every purpose here.
  CHECK(std::fabs(m.sigma[0][0]) < 1e-30);
  CHECK(std::fabs(m.sigma[0][1]) < 1e-30);
  CHECK(std::fabs(m.sigma[1][1]) < 1e-30);
}

TEST_CASE("moments of a two-row fixture match hand arithmetic") {
  // Rows: (0, 0) and (0.02, 0.04). Means 0.01 / 0.02; with the n-1
  // denominator the variances are 2e-4 and 8e-4, covariance 4e-4.
  const gbwm::ReturnSeries s =
      synth::make_series(2, {2000, 1}, [](int i) {
        return gbwm::AssetReturn{0.02 * i, 0.04 * i};
      });
  const gbwm::Moments m = gbwm::estimate_moments(s, 0, 2);
  CHECK(m.mu[0] == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(m.mu[1] == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(m.sigma[0][0] == doctest::Approx(2e-4).epsilon(1e-14));
  CHECK(m.sigma[0][1] == doctest::Approx(4e-4).epsilon(1e-14));
  CHECK(m.sigma[1][0] == doctest::Approx(4e-4).epsilon(1e-14));
  CHECK(m.sigma[1][1] == doctest::Approx(8e-4).epsilon(1e-14));
}

TEST_CASE("moment window bounds are enforced") {
  const gbwm::ReturnSeries s = synth::constant_series(10, 0.0, 0.0);
  CHECK_THROWS(gbwm::estimate_moments(s, 0, 11));
  CHECK_THROWS(gbwm::estimate_moments(s, 5, 5));
  CHECK_THROWS(gbwm::estimate_moments(s, 4, 5));  // single observation
  CHECK_NOTHROW(gbwm::estimate_moments(s, 4, 6));
}

TEST_CASE("cholesky reproduces the covariance") {
  gbwm::Moments m;
  m.sigma = {{{4e-4, 1e-4}, {1e-4, 9e-4}}};
  const auto l = m.cholesky();
  CHECK(l[0][0] * l[0][0] == doctest::Approx(4e-4).epsilon(1e-12));
  CHECK(l[1][0] * l[0][0] == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(l[1][0] * l[1][0] + l[1][1] * l[1][1] ==
        doctest::Approx(9e-4).epsilon(1e-12));
  CHECK(l[0][1] == 0.0);

  gbwm::Moments zero;
  const auto lz = zero.cholesky();
  CHECK(lz[0][0] == 0.0);
  CHECK(lz[1][1] == 0.0);

  gbwm::Moments bad;
  bad.sigma = {{{-1e-3, 0.0}, {0.0, 1e-4}}};
  CHECK_THROWS(bad.cholesky());
  gbwm::Moments indef;  // |cov| > sqrt(var_b * var_s)
  indef.sigma = {{{1e-4, 5e-4}, {5e-4, 1e-4}}};
  CHECK_THROWS(indef.cholesky());
}

TEST_CASE("sample_mvn with zero covariance returns the mean exactly") {
  gbwm::Moments m;
  m.mu = {0.004, 0.009};
  gbwm::Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const gbwm::AssetReturn r = gbwm::sample_mvn(m, rng);
    CHECK(r.bond == 0.004);
    CHECK(r.stock == 0.009);
  }
}

TEST_CASE("sample_mvn long-run moments match the target within 4 SE") {
  gbwm::Moments m;
  m.mu = {0.002, 0.006};
  m.sigma = {{{1e-6, 0.0}, {0.0, 2e-3}}};
  gbwm::Rng rng(6);
  const int n = 100000;
  double sb = 0, ss = 0, sbb = 0, sss = 0, sbs = 0;
  for (int i = 0; i < n; ++i) {
    const gbwm::AssetReturn r = gbwm::sample_mvn(m, rng);
    sb += r.bond;
    ss += r.stock;
    sbb += r.bond * r.bond;
    sss += r.stock * r.stock;
    sbs += r.bond * r.stock;
  }
  const double mb = sb / n, ms = ss / n;
  const double vb = sbb / n - mb * mb;
  const double vs = sss / n - ms * ms;
  const double cov = sbs / n - mb * ms;
  CHECK(std::abs(mb - 0.002) < 4 * std::sqrt(1e-6 / n));
  CHECK(std::abs(ms - 0.006) < 4 * std::sqrt(2e-3 / n));
  CHECK(std::abs(vb - 1e-6) < 4 * 1e-6 * std::sqrt(2.0 / n));
  CHECK(std::abs(vs - 2e-3) < 4 * 2e-3 * std::sqrt(2.0 / n));
  // Independent components: SE(cov_hat) ~ sqrt(vb*vs/n).
  CHECK(std::abs(cov) < 4 * std::sqrt(1e-6 * 2e-3 / n));
}

TEST_CASE("sample_mvn respects the requested correlation") {
  gbwm::Moments m;
  m.mu = {0.0, 0.0};
  const double rho = 0.5;
  m.sigma = {{{1e-4, rho * std::sqrt(1e-4 * 4e-4)},
              {rho * std::sqrt(1e-4 * 4e-4), 4e-4}}};
  gbwm::Rng rng(7);
  const int n = 100000;
  double sbb = 0, sss = 0, sbs = 0;
  for (int i = 0; i < n; ++i) {
    const gbwm::AssetReturn r = gbwm::sample_mvn(m, rng);
    sbb += r.bond * r.bond;
    sss += r.stock * r.stock;
    sbs += r.bond * r.stock;
  }
  const double corr = sbs / std::sqrt(sbb * sss);
  CHECK(std::abs(corr - rho) < 4 * (1 - rho * rho) / std::sqrt(n));
}

TEST_CASE("sampled returns never fall below the floor") {
  gbwm::Moments m;
  m.mu = {-2.0, -2.0};  // forces the floor on every draw
  gbwm::Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const gbwm::AssetReturn r = gbwm::sample_mvn(m, rng);
    CHECK(r.bond == gbwm::kReturnFloor);
    CHECK(r.stock == gbwm::kReturnFloor);
  }
}

TEST_CASE("simulating from an identical-row series reproduces the row") {
  const gbwm::ReturnSeries s = synth::constant_series(40, 0.0015, 0.0125);
  gbwm::Rng rng(9);
  const gbwm::Trajectory t = gbwm::simulate_trajectory(s, 24, 120, rng);
  REQUIRE(t.returns.size() == 120);
  CHECK(t.provenance == gbwm::Provenance::simulated);
  CHECK(t.params == "window=24");
  for (const auto& r : t.returns) {
    CHECK(r.bond == doctest::Approx(0.0015).epsilon(1e-12));
    CHECK(r.stock == doctest::Approx(0.0125).epsilon(1e-12));
  }
}

TEST_CASE("window covering the whole series pins the fitted moments") {
  // With window = N-1 the only admissible end index is the last row, so
  // every trajectory fits the full-series moments. Sample means across
  // many trajectories must match that fit within 4 SE.
  const gbwm::ReturnSeries s =
      synth::gaussian_series(61, 10, 0.002, 0.008, 0.004, 0.03);
  const gbwm::Moments fit = gbwm::estimate_moments(s, 0, s.size());
  gbwm::Rng rng(11);
  const int trajectories = 500, length = 60;
  double sum_b = 0, sum_s = 0;
  for (int i = 0; i < trajectories; ++i) {
    const gbwm::Trajectory t =
        gbwm::simulate_trajectory(s, static_cast<int>(s.size()) - 1, length,
                                  rng);
    for (const auto& r : t.returns) {
      sum_b += r.bond;
      sum_s += r.stock;
    }
  }
  const double n = trajectories * static_cast<double>(length);
  CHECK(std::abs(sum_b / n - fit.mu[0]) <
        4 * std::sqrt(fit.sigma[0][0] / n));
  CHECK(std::abs(sum_s / n - fit.mu[1]) <
        4 * std::sqrt(fit.sigma[1][1] / n));
}

TEST_CASE("window validation") {
  const gbwm::ReturnSeries s = synth::constant_series(30, 0.001, 0.01);
  gbwm::Rng rng(12);
  CHECK_THROWS(gbwm::simulate_trajectory(s, 1, 10, rng));
  CHECK_THROWS(gbwm::simulate_trajectory(s, 30, 10, rng));  // needs N > window
  CHECK_NOTHROW(gbwm::simulate_trajectory(s, 29, 10, rng));
}

TEST_CASE("singleton mixed-window set reduces to the fixed generator") {
  const gbwm::ReturnSeries s =
      synth::gaussian_series(100, 13, 0.002, 0.008, 0.004, 0.03);
  gbwm::Rng a(14), b(14);
  const gbwm::Trajectory fixed = gbwm::simulate_trajectory(s, 36, 120, a);
  const gbwm::Trajectory mixed =
      gbwm::simulate_trajectory_mixed(s, {36}, 120, b);
  REQUIRE(fixed.returns.size() == mixed.returns.size());
  for (size_t i = 0; i < fixed.returns.size(); ++i) {
    CHECK(fixed.returns[i].bond == mixed.returns[i].bond);
    CHECK(fixed.returns[i].stock == mixed.returns[i].stock);
  }
  CHECK(fixed.params == mixed.params);
}

TEST_CASE("mixed windows are drawn roughly uniformly") {
  const gbwm::ReturnSeries s =
      synth::gaussian_series(100, 15, 0.002, 0.008, 0.004, 0.03);
  gbwm::Rng rng(16);
  std::map<std::string, int> counts;
  const int n = 9000;
  for (int i = 0; i < n; ++i) {
    const gbwm::Trajectory t =
        gbwm::simulate_trajectory_mixed(s, {24, 36, 48}, 1, rng);
    ++counts[t.params];
  }
  REQUIRE(counts.size() == 3);
  for (const char* key : {"window=24", "window=36", "window=48"}) {
    REQUIRE(counts.count(key) == 1);
    CHECK(std::abs(counts[key] - 3000) < 200);  // ~4.5 binomial sd
  }
}

TEST_CASE("bootstrap with unit blocks draws source rows uniformly") {
  // Distinct stock values let each drawn row be mapped back to its source.
  const int n_rows = 10;
  const gbwm::ReturnSeries s =
      synth::make_series(n_rows, {2000, 1}, [](int i) {
        return gbwm::AssetReturn{0.001 * i, 0.01 * (i + 1)};
      });
  gbwm::Rng rng(17);
  std::vector<int> counts(n_rows, 0);
  const int trajectories = 1000, length = 12;
  for (int i = 0; i < trajectories; ++i) {
    const gbwm::Trajectory t =
        gbwm::block_bootstrap_trajectory(s, {1}, length, rng);
    REQUIRE(t.returns.size() == static_cast<size_t>(length));
    CHECK(t.provenance == gbwm::Provenance::bootstrap);
    CHECK(t.params == "blocks=1");
    for (const auto& r : t.returns) {
      auto it = std::find(s.stock.begin(), s.stock.end(), r.stock);
      REQUIRE(it != s.stock.end());  // only source rows appear
      const auto idx = static_cast<size_t>(it - s.stock.begin());
      CHECK(r.bond == s.bond[idx]);  // rows kept intact, never mixed
      ++counts[idx];
    }
  }
  const double total = trajectories * static_cast<double>(length);
  const double expected = total / n_rows;
  const double sd = std::sqrt(total * (1.0 / n_rows) * (1.0 - 1.0 / n_rows));
  for (int c : counts) CHECK(std::abs(c - expected) < 5 * sd);
}

TEST_CASE("bootstrap blocks stay contiguous") {
  const int n_rows = 50;
  const gbwm::ReturnSeries s =
      synth::make_series(n_rows, {2000, 1}, [](int i) {
        return gbwm::AssetReturn{0.0001 * i, 0.001 * (i + 1)};
      });
  gbwm::Rng rng(18);
  for (int rep = 0; rep < 50; ++rep) {
    const gbwm::Trajectory t =
        gbwm::block_bootstrap_trajectory(s, {2}, 120, rng);
    REQUIRE(t.returns.size() == 120);
    CHECK(t.params == "blocks=2");
    // Fixed block size 2: rows (0,1), (2,3), ... must be consecutive
    // source rows.
    for (size_t j = 0; j + 1 < t.returns.size(); j += 2) {
      auto it = std::find(s.stock.begin(), s.stock.end(), t.returns[j].stock);
      REQUIRE(it != s.stock.end());
      const auto idx = static_cast<size_t>(it - s.stock.begin());
      REQUIRE(idx + 1 < s.size());  // a block never starts on the last row
      CHECK(t.returns[j + 1].stock == s.stock[idx + 1]);
      CHECK(t.returns[j + 1].bond == s.bond[idx + 1]);
    }
  }
}

TEST_CASE("bootstrap validates block sizes") {
  const gbwm::ReturnSeries s = synth::constant_series(10, 0.001, 0.01);
  gbwm::Rng rng(19);
  CHECK_THROWS(gbwm::block_bootstrap_trajectory(s, {}, 10, rng));
  CHECK_THROWS(gbwm::block_bootstrap_trajectory(s, {0}, 10, rng));
  CHECK_THROWS(gbwm::block_bootstrap_trajectory(s, {11}, 10, rng));
  CHECK_NOTHROW(gbwm::block_bootstrap_trajectory(s, {10}, 10, rng));
}

TEST_CASE("historical windows enumerate every start in order") {
  const int n_rows = 8, length = 3;
  const gbwm::ReturnSeries s =
      synth::make_series(n_rows, {2001, 11}, [](int i) {
        return gbwm::AssetReturn{0.001 * i, 0.01 * (i + 1)};
      });
  const std::vector<gbwm::Trajectory> windows =
      gbwm::historical_windows(s, length);
  REQUIRE(windows.size() == n_rows - length + 1);
  for (size_t w = 0; w < windows.size(); ++w) {
    REQUIRE(windows[w].returns.size() == static_cast<size_t>(length));
    CHECK(windows[w].provenance == gbwm::Provenance::historical);
    CHECK(windows[w].params == "start=" + s.months[w].str());
    for (int j = 0; j < length; ++j) {
      CHECK(windows[w].returns[j].stock == s.stock[w + j]);
      CHECK(windows[w].returns[j].bond == s.bond[w + j]);
    }
  }
  // Adjacent windows overlap by length-1 rows.
  CHECK(windows[0].returns[1].stock == windows[1].returns[0].stock);

  CHECK(gbwm::historical_windows(s, n_rows).size() == 1);
  CHECK_THROWS(gbwm::historical_windows(s, n_rows + 1));
}

TEST_CASE("378 source rows yield 259 ten-year windows") {
  const gbwm::ReturnSeries s = synth::constant_series(378, 0.001, 0.01);
  CHECK(gbwm::historical_windows(s, 120).size() == 259);
}

TEST_CASE("generation is reproducible from the seed") {
  const gbwm::ReturnSeries s =
      synth::gaussian_series(100, 20, 0.002, 0.008, 0.004, 0.03);
  gbwm::Rng a(21), b(21);
  const gbwm::Trajectory ta = gbwm::simulate_trajectory(s, 36, 120, a);
  const gbwm::Trajectory tb = gbwm::simulate_trajectory(s, 36, 120, b);
  for (size_t i = 0; i < 120; ++i) {
    CHECK(ta.returns[i].bond == tb.returns[i].bond);
    CHECK(ta.returns[i].stock == tb.returns[i].stock);
  }
  gbwm::Rng c(22), d(22);
  const gbwm::Trajectory tc = gbwm::block_bootstrap_trajectory(s, {3}, 60, c);
  const gbwm::Trajectory td = gbwm::block_bootstrap_trajectory(s, {3}, 60, d);
  for (size_t i = 0; i < 60; ++i) {
    CHECK(tc.returns[i].stock == td.returns[i].stock);
  }
}

TEST_CASE("shorter estimation windows produce more dispersed fits") {
  // Per-trajectory mean stock returns vary more when moments come from a
  // 12-row window than from a 120-row window.
  const gbwm::ReturnSeries s =
      synth::gaussian_series(400, 23, 0.003, 0.008, 0.002, 0.05);
  gbwm::Rng rng(24);
  std::vector<double> short_means, long_means;
  const int trajectories = 400, length = 60;
  for (int i = 0; i < trajectories; ++i) {
    const gbwm::Trajectory t = gbwm::simulate_trajectory(s, 12, length, rng);
    double m = 0;
    for (const auto& r : t.returns) m += r.stock;
    short_means.push_back(m / length);
  }
  for (int i = 0; i < trajectories; ++i) {
    const gbwm::Trajectory t = gbwm::simulate_trajectory(s, 120, length, rng);
    double m = 0;
    for (const auto& r : t.returns) m += r.stock;
    long_means.push_back(m / length);
  }
  CHECK(sample_var(short_means) > sample_var(long_means));
}

}  // TEST_SUITE
