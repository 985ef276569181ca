#include <doctest.h>

#include <random>

#include "dsnn/codec.hpp"

using namespace dsnn;

namespace {

// Bin by scanning the edges left to right.
std::size_t scan_bin(const std::vector<double> &edges, double v) {
  const std::size_t b = edges.size() - 1;
  if (v < edges[0]) return 0;
  for (std::size_t i = 0; i < b; ++i)
    if (v >= edges[i] && v < edges[i + 1]) return i;
  return b - 1;
}

} // namespace

TEST_CASE("uniform edges and centers") {
  AxisQuantizer q(4, -1.0, 1.0);
  CHECK(q.edges() == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK(q.centers() == std::vector<double>{-0.75, -0.25, 0.25, 0.75});
  CHECK(q.width() == 0.5);
}

TEST_CASE("quantize endpoints and interior") {
  AxisQuantizer q(4, -1.0, 1.0);
  CHECK(q.quantize(-1.0) == 0);
  CHECK(q.quantize(0.999) == 3);
  CHECK(q.quantize(-0.25) == 1);
  CHECK(q.quantize(0.0) == 2);
  CHECK(q.quantize(0.5) == 3);
  CHECK(q.quantize(1.0) == 3);
  CHECK(q.quantize(-7.0) == 0);
  CHECK(q.quantize(7.0) == 3);
}

TEST_CASE("quantize agrees with a linear scan") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (std::size_t b : {2u, 3u, 4u, 7u, 16u}) {
    AxisQuantizer q(b, -1.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
      const double v = u(rng);
      CHECK(q.quantize(v) == scan_bin(q.edges(), v));
    }
  }
}

TEST_CASE("reconstruct returns centers and rejects bad classes") {
  AxisQuantizer q(4, -1.0, 1.0);
  CHECK(q.reconstruct(0) == -0.75);
  CHECK(q.reconstruct(3) == 0.75);
  CHECK_THROWS_AS(q.reconstruct(4), std::invalid_argument);
}

TEST_CASE("round trips") {
  for (std::size_t b : {2u, 4u, 5u, 9u}) {
    AxisQuantizer q(b, -3.0, 2.0);
    for (std::size_t c = 0; c < b; ++c) {
      CHECK(q.quantize(q.reconstruct(c)) == c);
      CHECK(q.reconstruct(q.quantize(q.centers()[c])) == q.centers()[c]);
    }
  }
}

TEST_CASE("reconstruction error stays within half a bin") {
  AxisQuantizer q(4, -60.0, 60.0);
  const double half = q.width() / 2.0;
  for (int i = 0; i <= 10000; ++i) {
    const double v = -60.0 + 120.0 * i / 10000.0;
    CHECK(std::abs(q.reconstruct(q.quantize(v)) - v) <= half + 1e-12);
  }
}

TEST_CASE("invalid quantizer construction") {
  CHECK_THROWS(AxisQuantizer(0, -1.0, 1.0));
  CHECK_THROWS(AxisQuantizer(4, 1.0, 1.0));
  CHECK_THROWS(AxisQuantizer::from_edges({0.0, 0.0, 1.0}));
  CHECK(AxisQuantizer::from_edges({-1.0, -0.5, 0.0, 0.5, 1.0}) == AxisQuantizer(4, -1.0, 1.0));
}

TEST_CASE("bin_spikes uses half-open windows") {
  CHECK(bin_spikes({{}, {}}, 0.0, 0.004) == SpikeVector{0, 0});
  CHECK(bin_spikes({{1.0}, {1.004}}, 1.0, 0.004) == SpikeVector{1, 0});
  CHECK(bin_spikes({{0.9999}, {1.0039}}, 1.0, 0.004) == SpikeVector{0, 1});
}

TEST_CASE("bin_spikes agrees with counting events per channel") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> ev(12);
    for (auto &ch : ev)
      for (int k = 0; k < 4; ++k) ch.push_back(u(rng));
    const double t0 = u(rng) * 0.9;
    const double w = 0.004 + 0.05 * u(rng);
    const auto bits = bin_spikes(ev, t0, w);
    for (std::size_t c = 0; c < ev.size(); ++c) {
      int n = 0;
      for (double t : ev[c]) n += (t >= t0 && t < t0 + w) ? 1 : 0;
      CHECK(bits[c] == (n > 0 ? 1 : 0));
    }
  }
}

TEST_CASE("percentile interpolates between ranks") {
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 0.0) == 1.0);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 1.0) == 4.0);
  CHECK(percentile({4.0, 1.0, 3.0, 2.0}, 0.5) == doctest::Approx(2.5));
  CHECK(percentile({0.0, 10.0}, 0.25) == doctest::Approx(2.5));
}

TEST_CASE("fit_quantizer") {
  SUBCASE("constant data widens to a tiny symmetric range") {
    const std::vector<double> zeros(100, 0.0);
    const auto fit = fit_quantizer(zeros, 4);
    CHECK(fit.degenerate);
    CHECK(fit.quantizer.v_min() == -1e-6);
    CHECK(fit.quantizer.v_max() == 1e-6);
  }
  SUBCASE("symmetric data") {
    std::vector<double> v;
    for (int i = 0; i <= 1000; ++i) v.push_back(-2.0 + 4.0 * i / 1000.0);
    const auto fit = fit_quantizer(v, 4);
    CHECK_FALSE(fit.degenerate);
    const double p99 = percentile(v, 0.99);
    CHECK(fit.quantizer.v_max() == doctest::Approx(p99));
    CHECK(fit.quantizer.v_min() == doctest::Approx(-p99));
    CHECK(fit.quantizer.v_max() == doctest::Approx(2.0).epsilon(0.03));
  }
  SUBCASE("asymmetric data takes the larger side") {
    std::vector<double> v;
    for (int i = 0; i <= 1000; ++i) v.push_back(-1.0 + 4.0 * i / 1000.0);
    const auto fit = fit_quantizer(v, 4);
    CHECK(fit.quantizer.v_max() == doctest::Approx(percentile(v, 0.99)));
    CHECK(fit.quantizer.v_min() == -fit.quantizer.v_max());
  }
  SUBCASE("robust to a top-percent of outliers") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> clean;
    for (int i = 0; i < 10000; ++i) clean.push_back(n(rng));
    auto dirty = clean;
    for (int i = 0; i < 50; ++i) dirty[i] = 1e6 * (i % 2 ? 1 : -1);
    const double a = fit_quantizer(clean, 4).quantizer.v_max();
    const double b = fit_quantizer(dirty, 4).quantizer.v_max();
    // 50 outliers push the 99th percentile a quarter of a percent further into the tail.
    CHECK(b >= a);
    CHECK(b < 1.1 * a);
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(fit_quantizer(std::vector<double>{}, 4), std::invalid_argument);
  }
}
