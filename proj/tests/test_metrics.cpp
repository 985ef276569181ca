#include <doctest.h>

#include <cmath>
#include <random>

#include "dsnn/metrics.hpp"
#include "dsnn/snn.hpp"
#include "oracles.hpp"

using namespace dsnn;

namespace {

const std::vector<std::size_t> kClosedLoop{46, 65, 40, 8};

} // namespace

TEST_CASE("R squared basics") {
  const std::vector<double> y{1.0, 2.0, 4.0, 3.0};
  CHECK(r_squared(y, y) == 1.0);
  const std::vector<double> mean(4, 2.5);
  CHECK(r_squared(mean, y) == doctest::Approx(0.0));
  CHECK_THROWS_AS(r_squared(y, std::vector<double>(4, 1.0)), std::domain_error);
  CHECK_THROWS_AS(r_squared(y, std::vector<double>(3, 1.0)), std::invalid_argument);
}

TEST_CASE("R squared agrees with a two-pass computation") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t len = 2 + static_cast<std::size_t>(t);
    std::vector<double> p(len), a(len);
    for (std::size_t i = 0; i < len; ++i) {
      a[i] = n(rng) * 3.0 + 1.0;
      p[i] = a[i] + n(rng);
    }
    double mean = 0.0;
    for (double v : a) mean += v;
    mean /= double(len);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      ss_res += (a[i] - p[i]) * (a[i] - p[i]);
      ss_tot += (a[i] - mean) * (a[i] - mean);
    }
    const double r2 = r_squared(p, a);
    CHECK(std::abs(r2 - (1.0 - ss_res / ss_tot)) <= 1e-12);
    CHECK(r2 <= 1.0);
  }
  const std::vector<double> px{1, 2, 3}, ax{1, 2, 4}, py{0, 0, 0}, ay{1, -1, 0};
  CHECK(r_squared_2d(px, ax, py, ay) ==
        doctest::Approx((r_squared(px, ax) + r_squared(py, ay)) / 2.0));
}

TEST_CASE("memory footprint") {
  CHECK(footprint_bits(kClosedLoop) == 6136u * 32u);
  CHECK(bits_to_kB(footprint_bits(kClosedLoop)) == doctest::Approx(24.544));
  CHECK(std::round(bits_to_kB(footprint_bits(kClosedLoop)) * 100.0) / 100.0 == 24.54);
  CHECK(footprint_bits(std::vector<std::size_t>{1, 1}) == 96u);
  const std::vector<std::size_t> single{46, 8};
  CHECK(bits_to_KiB(footprint_bits(single, LayerKind::ann, false)) == 1.4375);
  CHECK(bits_to_KiB(footprint_bits(single, LayerKind::ann, true)) == 1.46875);
}

TEST_CASE("forward cost golden values") {
  const auto oracle = oracle::forward(kClosedLoop, {0.6, 0.6, 0.6}, true);
  CHECK(oracle.mac == doctest::Approx(113.0));
  CHECK(oracle.ac == doctest::Approx(2590.0));
  CHECK(oracle.ma == doctest::Approx(2590.0));
  const auto c = forward_cost_uniform(kClosedLoop, 0.6);
  CHECK(c.macs == doctest::Approx(113.0));
  CHECK(c.acs == doctest::Approx(2590.0));
  CHECK(c.mem_access == doctest::Approx(2590.0));

  const auto silent = forward_cost_uniform(kClosedLoop, 1.0);
  CHECK(silent.mem_access == 2.0 * (65 + 40 + 8));

  const std::vector<std::size_t> single{46, 8};
  const auto ann = forward_cost_uniform(single, 0.6, LayerKind::ann);
  CHECK(ann.macs == doctest::Approx(147.2));
  CHECK(ann.mem_access == doctest::Approx(155.2));
}

TEST_CASE("forward cost matches the oracle on random configurations") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> sz(1, 80);
  std::uniform_real_distribution<double> sp(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::size_t> n(2 + t % 4);
    for (auto &v : n) v = sz(rng);
    std::vector<double> s(n.size() - 1);
    for (auto &v : s) v = sp(rng);
    const bool snn = t % 2 == 0;
    const double ts = snn ? 1.0 + t % 3 : 1.0;
    const auto o = oracle::forward(n, s, snn, ts);
    const auto c = forward_cost(n, s, snn ? LayerKind::snn : LayerKind::ann, ts);
    CHECK(c.macs == doctest::Approx(o.mac).epsilon(1e-12));
    CHECK(c.acs == doctest::Approx(o.ac).epsilon(1e-12));
    CHECK(c.mem_access == doctest::Approx(o.ma).epsilon(1e-12));
  }
}

TEST_CASE("Banditron backward cost") {
  const auto a = banditron_backward_cost(40, 0.6);
  CHECK(a.macs == doctest::Approx(32.0));
  CHECK(a.mem_access == doctest::Approx(32.0));
  CHECK(banditron_backward_cost(46, 0.6).macs == doctest::Approx(36.8));
  CHECK(banditron_backward_cost(46, 1.0).macs == 0.0);
}

TEST_CASE("AGREL backward cost") {
  const std::vector<double> s(4, 0.6), e(4, 0.6);
  const std::vector<double> fb{0.94, 0.94, 0.94, 7.0 / 8.0};
  const auto [mac, ma] = oracle::agrel(kClosedLoop, s, fb, e);
  CHECK(mac == doctest::Approx(346.16));
  CHECK(ma == doctest::Approx(364.24));
  // Term by term: 16 + 62.4 + 40 + 71.76 + 156.
  CHECK(mac == doctest::Approx(16.0 + 62.4 + 40.0 + 71.76 + 156.0));

  const auto ref = agrel_backward_cost(kClosedLoop, SparsityProfile::reference(kClosedLoop));
  CHECK(ref.macs == doctest::Approx(346.16));
  CHECK(ref.mem_access == doctest::Approx(364.24));
  CHECK(std::abs(ref.macs - 317.04) / 317.04 <= 0.15);
  CHECK(std::abs(ref.mem_access - 335.84) / 335.84 <= 0.15);

  const auto silent = agrel_backward_cost(kClosedLoop, SparsityProfile::uniform(3, 1.0, 1.0, 1.0));
  CHECK(silent.macs == 0.0);
  CHECK(silent.mem_access == 0.0);

  // One hidden layer, random profile.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const std::vector<std::size_t> n{std::size_t(5 + t % 7), std::size_t(3 + t % 5), 4};
    SparsityProfile p;
    for (int i = 0; i < 3; ++i) {
      p.activity.push_back(u(rng));
      p.feedback.push_back(u(rng));
      p.error.push_back(u(rng));
    }
    const auto [om, oa] = oracle::agrel(n, p.activity, p.feedback, p.error);
    const auto c = agrel_backward_cost(n, p);
    CHECK(c.macs == doctest::Approx(om).epsilon(1e-12));
    CHECK(c.mem_access == doctest::Approx(oa).epsilon(1e-12));
  }
}

TEST_CASE("cost functions never increase with sparsity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> s{u(rng), u(rng), u(rng)};
    const std::size_t which = static_cast<std::size_t>(t % 3);
    auto s2 = s;
    s2[which] = std::min(1.0, s[which] + 0.1 * u(rng));
    const auto a = forward_cost(kClosedLoop, s);
    const auto b = forward_cost(kClosedLoop, s2);
    CHECK(b.macs <= a.macs);
    CHECK(b.acs <= a.acs);
    CHECK(b.mem_access <= a.mem_access);

    const double x = u(rng), dx = 0.1 * u(rng);
    CHECK(banditron_backward_cost(40, std::min(1.0, x + dx)).macs <= banditron_backward_cost(40, x).macs);

    auto p = SparsityProfile::uniform(3, u(rng) * 0.9, u(rng) * 0.9, u(rng) * 0.9);
    const auto base = agrel_backward_cost(kClosedLoop, p);
    const std::size_t layer = static_cast<std::size_t>(t % 4);
    for (auto *v : {&p.activity, &p.feedback, &p.error}) {
      auto q = p;
      auto &field = v == &p.activity ? q.activity : v == &p.feedback ? q.feedback : q.error;
      field[layer] += 0.1;
      const auto more = agrel_backward_cost(kClosedLoop, q);
      CHECK(more.macs <= base.macs + 1e-12);
      CHECK(more.mem_access <= base.mem_access + 1e-12);
    }
  }
}

TEST_CASE("comparison-method estimates") {
  const auto cl = clsnn_backward_estimate(std::vector<std::size_t>{46, 65, 40, 2});
  CHECK(cl.macs == 2.0 * (46 * 65 + 65 * 40 + 40 * 2));
  CHECK(cl.macs == 2.0 * cl.mem_access);
  CHECK(clsnn_backward_estimate(std::vector<std::size_t>{0, 0}).macs == 0.0);
  const auto changed = changed_parameter_estimate(2510);
  CHECK(changed.macs == 5020.0);
  CHECK(changed.mem_access == 2510.0);

  CHECK(egru_cost_estimate(0, 7, 0).fwd_macs == 0.0);
  for (std::size_t h : {1u, 8u, 13u})
    for (std::size_t in : {2u, 5u}) {
      const auto eg = egru_cost_estimate(h, in, 313);
      CHECK(eg.fwd_macs == 3.0 * (double(h) * double(h + in) + 2.0 * double(h)));
      CHECK(eg.bwd_macs == 4.0 * 313);
      CHECK(eg.bwd_mem_access == 2.0 * 313);
    }
  CHECK(egru_cost_estimate(8, 2, 313).fwd_macs == 288.0);
  CHECK(egru_cost_estimate(8, 2, 313).bwd_macs == 1252.0);
}

TEST_CASE("live forward meter equals the model at observed sparsity") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> sz(1, 50);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::size_t> n(2 + t % 3);
    for (auto &v : n) v = sz(rng);
    NetworkConfig cfg{n, {}, 0.0, 0.01, 0.01};
    Network net(cfg);
    net.init_weights(static_cast<std::uint64_t>(t));
    for (auto &l : net.layers())
      for (auto &w : l.weights().data()) w *= 4.0; // enough drive for hidden spikes
    std::bernoulli_distribution b(p(rng));
    SpikeVector x(n[0]);
    for (auto &v : x) v = b(rng) ? 1 : 0;
    for (int warm = 0; warm < t % 5; ++warm) net.forward(x);
    ResourceLedger led;
    const auto fwd = net.forward(x, &led);
    std::vector<double> s;
    s.push_back(1.0 - double(count_active(x)) / double(n[0]));
    for (const auto &h : fwd.hidden_spikes) s.push_back(1.0 - double(count_active(h)) / double(h.size()));
    const auto model = forward_cost(n, s);
    CHECK(led.forward_calls == 1);
    CHECK(std::abs(led.fwd_mem_access - model.mem_access) <= 1e-9);
    CHECK(std::abs(led.fwd_acs - model.acs) <= 1e-9);
    CHECK(std::abs(led.fwd_macs - model.macs) <= 1e-9);
  }
}

TEST_CASE("time-to-target aggregation") {
  auto rec = [](std::size_t idx, bool ok, double t) {
    TrialRecord r;
    r.index = idx;
    r.success = ok;
    if (ok) r.time_to_target = t;
    return r;
  };
  std::vector<TrialRecord> all_one, all_fail, mixed;
  for (std::size_t i = 0; i < 10; ++i) {
    all_one.push_back(rec(i, true, 1.0));
    all_fail.push_back(rec(i, false, 0.0));
  }
  CHECK(aggregate_time_to_target(all_one, {0, 10}) == 1.0);
  CHECK(aggregate_time_to_target(all_fail, {0, 10}) == 3.0);
  CHECK_THROWS_AS(aggregate_time_to_target(all_one, {20, 30}), std::invalid_argument);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.3, 2.9);
  for (std::size_t seed = 0; seed < 4; ++seed)
    for (std::size_t i = 0; i < 100; ++i) mixed.push_back(rec(i, u(rng) < 2.3, u(rng)));
  double sum = 0.0;
  int n = 0;
  for (const auto &r : mixed)
    if (r.index >= 50 && r.index < 100) {
      sum += r.success ? *r.time_to_target : 3.0;
      ++n;
    }
  CHECK(aggregate_time_to_target(mixed, {50, 100}) == doctest::Approx(sum / n));
}
