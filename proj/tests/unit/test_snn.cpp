#include "spiketurn/common.hpp"
#include "spiketurn/snn.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace spiketurn;

namespace {

std::vector<std::vector<int>> toy_events(std::size_t n, std::uint64_t seed, std::vector<int>& labels) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> jitter(-4, 4);
  std::vector<std::vector<int>> events;
  labels.clear();
  for (std::size_t e = 0; e < n; ++e) {
    const int base = e % 2 ? 10 : 28;
    std::vector<int> lv(40);
    for (auto& v : lv) v = std::clamp(base + jitter(rng), 0, 39);
    events.push_back(lv);
    labels.push_back(static_cast<int>(e % 2));
  }
  return events;
}

}  // namespace

TEST_CASE("izhikevich derivative at rest") {
  const auto rs = NeuronKernel::preset(KernelPreset::RS);
  const auto d = izhikevich_derivatives(rs, {-65.0, -13.0}, 0.0);
  CHECK(d.dv == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(d.du == doctest::Approx(0.0).epsilon(1e-12));
  NeuronState s{-65.0, -13.0};
  CHECK_FALSE(advance_one_ms(rs, s, 0.0));
}

TEST_CASE("preset parameters and classes") {
  CHECK(NeuronKernel::preset(KernelPreset::IB).c == -55.0);
  CHECK(NeuronKernel::preset(KernelPreset::CH).d == 2.0);
  CHECK(NeuronKernel::preset(KernelPreset::FS).a == 0.1);
  CHECK(NeuronKernel::preset(KernelPreset::LTS).b == 0.25);
  CHECK(class_of(KernelPreset::RS) == NeuronClass::Excitatory);
  CHECK(class_of(KernelPreset::LTS) == NeuronClass::Inhibitory);
  CHECK(preset_from_string("CH") == KernelPreset::CH);
  CHECK_THROWS_AS(preset_from_string("XX"), ConfigError);
}

TEST_CASE("network topology invariants") {
  const auto net = SpikingNetwork::build({}, 17);
  CHECK(net.synapses().size() == 6250);
  CHECK_NOTHROW(net.validate());
  for (int i = 0; i < topology::kNeurons; ++i) {
    std::set<int> targets;
    for (int k = 0; k < 25; ++k) {
      const auto& s = net.synapses()[static_cast<std::size_t>(i * 25 + k)];
      CHECK(s.pre == i);
      CHECK(s.post != i);
      CHECK(s.delay >= 1);
      CHECK(s.delay <= 20);
      targets.insert(s.post);
      if (i >= topology::kExcitatory) {
        CHECK(s.post < topology::kExcitatory);
        CHECK(s.weight == -5.0);
      } else {
        CHECK(s.weight == 6.0);
      }
    }
    CHECK(targets.size() == 25);
  }
  CHECK(SpikingNetwork::build({}, 17) == net);
  CHECK_FALSE(SpikingNetwork::build({}, 18) == net);
  CHECK(SpikingNetwork::from_json(net.to_json()) == net);
  const auto ch = SpikingNetwork::build({KernelPreset::CH, KernelPreset::FS}, 1);
  CHECK(ch.kernels().front() == NeuronKernel::preset(KernelPreset::CH));
  CHECK(ch.kernels().back() == NeuronKernel::preset(KernelPreset::FS));
}

TEST_CASE("quantizer boundaries and monotonicity") {
  const Quantizer q{-1.0, 1.0, 40};
  CHECK(q.quantize(0.0) == 20);
  CHECK(q.quantize(-5.0) == 0);
  CHECK(q.quantize(5.0) == 39);
  CHECK(q.quantize(-1.0) == 0);
  CHECK(q.quantize(1.0) == 39);
  CHECK(q.quantize(std::nextafter(1.0, 0.0)) == 39);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 10000; ++k) {
    double a = u(rng), b = u(rng), c = u(rng);
    if (a > b) std::swap(a, b);
    const Quantizer qq{std::min(a, b), std::max(a, b) + 1e-9, 40};
    const double x = c, y = c + std::abs(u(rng));
    CHECK(qq.quantize(x) <= qq.quantize(y));
  }
}

TEST_CASE("quantizer fitting uses interpolated percentiles") {
  std::vector<double> v;
  for (int i = 0; i <= 100; ++i) v.push_back(100.0 - i);  // reversed 0..100
  const auto q = fit_quantizer(v);
  CHECK(q.r1 == doctest::Approx(1.0));
  CHECK(q.r99 == doctest::Approx(99.0));
  CHECK(empirical_quantile(std::vector<double>{0.0, 10.0}, 0.25) == doctest::Approx(2.5));
  CHECK_THROWS_AS(fit_quantizer(std::vector<double>(200, 3.0)), DataError);
  CHECK_THROWS_AS(fit_quantizer(std::vector<double>(50, 1.0)), DataError);
}

TEST_CASE("level map covers the excitatory population") {
  const auto m = map_levels(40, 3);
  std::set<int> all;
  for (const auto& g : m.groups)
    for (int n : g) {
      CHECK(n >= 0);
      CHECK(n < 200);
      all.insert(n);
    }
  CHECK(all.size() == 200);
  CHECK(map_levels(40, 3) == m);
  CHECK_THROWS_AS(map_levels(41, 3), ConfigError);
}

TEST_CASE("stimulus schedule") {
  const auto m = map_levels(40, 3);
  const std::vector<int> one{7};
  const auto s = schedule_stimuli(one, m);
  REQUIRE(s.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(s[k].time_ms == k + 1);
    CHECK(s[k].neuron == m.groups[7][k]);
    CHECK(s[k].current == 20.0);
  }
  const std::vector<int> two{3, 3};
  const auto s2 = schedule_stimuli(two, m);
  for (int k = 0; k < 5; ++k) {
    CHECK(s2[k].neuron == s2[k + 5].neuron);
    CHECK(s2[k + 5].time_ms == 6 + k);
  }
  CHECK_THROWS_AS(schedule_stimuli(std::vector<int>(41, 0), m), ConfigError);
}

TEST_CASE("stdp rule examples") {
  const StdpParams p;
  CHECK(stdp_weight_change(5, p) == doctest::Approx(0.1 * std::exp(-0.25)).epsilon(1e-14));
  CHECK(stdp_weight_change(5, p) == doctest::Approx(0.0779).epsilon(1e-3));
  CHECK(stdp_weight_change(-5, p) == doctest::Approx(-0.12 * std::exp(-0.25)).epsilon(1e-14));
  CHECK(stdp_weight_change(-5, p) == doctest::Approx(-0.0935).epsilon(1e-3));
  CHECK(apply_weight_change(10.0, stdp_weight_change(1, p), 10.0) == 10.0);
  CHECK(apply_weight_change(0.01, stdp_weight_change(-1, p), 10.0) == 0.0);
}

TEST_CASE("simulation shape and determinism") {
  const auto net = SpikingNetwork::build({}, 5);
  const auto map = map_levels(40, 6);
  std::vector<int> lv(40);
  for (int r = 0; r < 40; ++r) lv[r] = r % 40;
  const auto sched = schedule_stimuli(lv, map);
  const auto a = simulate(net, sched);
  const auto b = simulate(net, sched);
  CHECK(a == b);
  CHECK(a.n_neurons == 250);
  CHECK(a.duration_ms == 250);
  CHECK_FALSE(a.firings.empty());
  for (std::size_t i = 1; i < a.firings.size(); ++i) {
    const auto& x = a.firings[i - 1];
    const auto& y = a.firings[i];
    CHECK((x.time_ms < y.time_ms || (x.time_ms == y.time_ms && x.neuron < y.neuron)));
  }
  // No stimulus, no activity.
  CHECK(simulate(net, {}).firings.empty());
}

TEST_CASE("stdp training keeps weights bounded and leaves inhibition alone") {
  auto net = SpikingNetwork::build({}, 9);
  const auto before = net.weights();
  std::vector<int> labels;
  const auto events = toy_events(20, 2, labels);
  WeightTrainingConfig cfg;
  cfg.presentations = 60;
  const auto trace = train_weights(net, events, labels, map_levels(40, 1), cfg, 4);
  CHECK(trace.delta_norms.size() == 60);
  const auto after = net.weights();
  bool changed = false;
  for (std::size_t s = 0; s < after.size(); ++s) {
    if (s < 200 * 25) {
      CHECK(after[s] >= 0.0);
      CHECK(after[s] <= 10.0);
      changed = changed || after[s] != before[s];
    } else {
      CHECK(after[s] == before[s]);
    }
  }
  CHECK(changed);
  CHECK_NOTHROW(net.validate());

  auto again = SpikingNetwork::build({}, 9);
  train_weights(again, events, labels, map_levels(40, 1), cfg, 4);
  CHECK(again == net);

  std::vector<int> keep_only(labels.size(), 0);
  CHECK_THROWS_AS(train_weights(again, events, keep_only, map_levels(40, 1), cfg, 4), DataError);
}

TEST_CASE("per-presentation plasticity mode") {
  auto net = SpikingNetwork::build({}, 9);
  std::vector<int> labels;
  const auto events = toy_events(4, 3, labels);
  WeightTrainingConfig cfg;
  cfg.presentations = 5;
  cfg.stdp.mode = StdpParams::Mode::PerPresentation;
  const auto trace = train_weights(net, events, labels, map_levels(40, 1), cfg, 4);
  CHECK(trace.delta_norms.size() == 5);
  for (double w : net.weights()) CHECK(w <= 10.0);
}

TEST_CASE("weight changes during a presentation are clamped every tick") {
  // Drive one excitatory synapse to the bound and check the invariant after
  // every tick of a plastic run.
  auto net = SpikingNetwork::build({}, 21);
  for (auto& s : net.mutable_synapses())
    if (s.pre < 200) s.weight = 9.99;
  NetworkSimulator sim(net, StdpParams{});
  const auto map = map_levels(40, 2);
  std::vector<int> lv(40, 5);
  const auto sched = schedule_stimuli(lv, map);
  std::size_t next = 0;
  for (int t = 1; t <= 250; ++t) {
    const std::size_t begin = next;
    while (next < sched.size() && sched[next].time_ms == t) ++next;
    sim.step(t, std::span<const Stimulus>(sched.data() + begin, next - begin));
    for (const auto& s : net.synapses()) {
      if (s.pre >= 200) continue;
      REQUIRE(s.weight >= 0.0);
      REQUIRE(s.weight <= 10.0);
    }
  }
}
