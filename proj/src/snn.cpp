#include "spiketurn/snn.hpp"

#include "spiketurn/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace spiketurn {

using nlohmann::json;

std::string to_string(KernelPreset preset) {
  switch (preset) {
    case KernelPreset::RS: return "RS";
    case KernelPreset::IB: return "IB";
    case KernelPreset::CH: return "CH";
    case KernelPreset::FS: return "FS";
    case KernelPreset::LTS: return "LTS";
  }
  return "?";
}

KernelPreset preset_from_string(const std::string& name) {
  for (auto p : {KernelPreset::RS, KernelPreset::IB, KernelPreset::CH, KernelPreset::FS, KernelPreset::LTS})
    if (to_string(p) == name) return p;
  throw ConfigError("unknown neuron kernel '" + name + "'");
}

NeuronClass class_of(KernelPreset preset) {
  return preset == KernelPreset::FS || preset == KernelPreset::LTS ? NeuronClass::Inhibitory
                                                                     : NeuronClass::Excitatory;
}

NeuronKernel NeuronKernel::preset(KernelPreset preset) {
  switch (preset) {
    case KernelPreset::RS: return {0.02, 0.2, -65.0, 8.0, NeuronClass::Excitatory};
    case KernelPreset::IB: return {0.02, 0.2, -55.0, 4.0, NeuronClass::Excitatory};
    case KernelPreset::CH: return {0.02, 0.2, -50.0, 2.0, NeuronClass::Excitatory};
    case KernelPreset::FS: return {0.1, 0.2, -65.0, 2.0, NeuronClass::Inhibitory};
    case KernelPreset::LTS: return {0.02, 0.25, -65.0, 2.0, NeuronClass::Inhibitory};
  }
  throw ConfigError("unknown neuron kernel preset");
}

NeuronState resting_state(const NeuronKernel& kernel) { return {kernel.c, kernel.b * kernel.c}; }

Derivatives izhikevich_derivatives(const NeuronKernel& k, const NeuronState& s, double current) {
  return {0.04 * s.v * s.v + 5.0 * s.v + 140.0 - s.u + current, k.a * (k.b * s.v - s.u)};
}

bool advance_one_ms(const NeuronKernel& k, NeuronState& s, double current) {
  s.v += 0.5 * (0.04 * s.v * s.v + 5.0 * s.v + 140.0 - s.u + current);
  s.v += 0.5 * (0.04 * s.v * s.v + 5.0 * s.v + 140.0 - s.u + current);
  s.u += k.a * (k.b * s.v - s.u);
  if (s.v >= 30.0) {
    s.v = k.c;
    s.u += k.d;
    return true;
  }
  return false;
}

std::vector<double> single_neuron_spike_times(const NeuronKernel& kernel, double current, double duration_ms,
                                              double dt_ms) {
  if (!(dt_ms > 0.0)) throw ConfigError("dt must be positive");
  NeuronState s = resting_state(kernel);
  std::vector<double> spikes;
  const auto steps = static_cast<long>(std::llround(duration_ms / dt_ms));
  for (long i = 1; i <= steps; ++i) {
    const Derivatives d = izhikevich_derivatives(kernel, s, current);
    s.v += dt_ms * d.dv;
    s.u += dt_ms * d.du;
    if (s.v >= 30.0) {
      spikes.push_back(static_cast<double>(i) * dt_ms);
      s.v = kernel.c;
      s.u += kernel.d;
    }
    if (!std::isfinite(s.v) || !std::isfinite(s.u)) throw NumericalError("single neuron state became non-finite");
  }
  return spikes;
}

SpikingNetwork SpikingNetwork::build(KernelPair pair, std::uint64_t seed) {
  using namespace topology;
  if (class_of(pair.excitatory) != NeuronClass::Excitatory || class_of(pair.inhibitory) != NeuronClass::Inhibitory)
    throw ConfigError("kernel pair must be (excitatory preset, inhibitory preset)");

  SpikingNetwork net;
  net.pair_ = pair;
  net.seed_ = seed;
  net.kernels_.resize(kNeurons);
  for (int i = 0; i < kNeurons; ++i)
    net.kernels_[i] = NeuronKernel::preset(i < kExcitatory ? pair.excitatory : pair.inhibitory);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> any_target(0, kNeurons - 1);
  std::uniform_int_distribution<int> excitatory_target(0, kExcitatory - 1);
  std::uniform_int_distribution<int> delay_dist(1, kMaxDelayMs);
  net.synapses_.reserve(static_cast<std::size_t>(kNeurons) * kSynapsesPerNeuron);
  std::vector<char> taken(kNeurons);
  for (int pre = 0; pre < kNeurons; ++pre) {
    const bool excitatory = pre < kExcitatory;
    std::fill(taken.begin(), taken.end(), 0);
    taken[pre] = 1;
    for (int k = 0; k < kSynapsesPerNeuron; ++k) {
      int post;
      do {
        post = excitatory ? any_target(rng) : excitatory_target(rng);
      } while (taken[post]);
      taken[post] = 1;
      net.synapses_.push_back(
          {pre, post, delay_dist(rng), excitatory ? kInitialExcitatoryWeight : kInhibitoryWeight});
    }
  }
  net.index_incoming();
  return net;
}

void SpikingNetwork::index_incoming() {
  incoming_excitatory_.assign(topology::kNeurons, {});
  for (int s = 0; s < static_cast<int>(synapses_.size()); ++s)
    if (is_excitatory(synapses_[s].pre)) incoming_excitatory_[synapses_[s].post].push_back(s);
}

std::vector<double> SpikingNetwork::weights() const {
  std::vector<double> w(synapses_.size());
  std::transform(synapses_.begin(), synapses_.end(), w.begin(), [](const Synapse& s) { return s.weight; });
  return w;
}

void SpikingNetwork::validate() const {
  using namespace topology;
  if (kernels_.size() != static_cast<std::size_t>(kNeurons)) throw DataError("network must have 250 neurons");
  if (synapses_.size() != static_cast<std::size_t>(kNeurons) * kSynapsesPerNeuron)
    throw DataError("network must have 25 synapses per neuron");
  for (int i = 0; i < kNeurons; ++i) {
    const bool excitatory = i < kExcitatory;
    if ((kernels_[i].neuron_class == NeuronClass::Excitatory) != excitatory)
      throw DataError("neuron " + std::to_string(i) + " has the wrong kernel class");
  }
  for (std::size_t s = 0; s < synapses_.size(); ++s) {
    const Synapse& syn = synapses_[s];
    if (syn.pre != static_cast<int>(s) / kSynapsesPerNeuron) throw DataError("synapses are not grouped by pre neuron");
    if (syn.post < 0 || syn.post >= kNeurons) throw DataError("synapse target out of range");
    if (syn.delay < 1 || syn.delay > kMaxDelayMs) throw DataError("synapse delay outside [1, 20] ms");
    if (is_excitatory(syn.pre)) {
      if (!(syn.weight >= 0.0 && syn.weight <= kMaxWeight)) throw DataError("excitatory weight outside [0, 10]");
    } else {
      if (!is_excitatory(syn.post)) throw DataError("inhibitory synapse targets an inhibitory neuron");
      if (syn.weight != kInhibitoryWeight) throw DataError("inhibitory weight must stay at -5");
    }
  }
}

json SpikingNetwork::to_json() const {
  json neurons = json::array();
  for (const auto& k : kernels_)
    neurons.push_back({{"a", k.a}, {"b", k.b}, {"c", k.c}, {"d", k.d},
                       {"class", k.neuron_class == NeuronClass::Excitatory ? "excitatory" : "inhibitory"}});
  json synapses = json::array();
  for (const auto& s : synapses_)
    synapses.push_back({{"pre", s.pre}, {"post", s.post}, {"delay", s.delay}, {"weight", s.weight}});
  return {{"version", 1},
          {"seed", seed_},
          {"kernel_pair", {to_string(pair_.excitatory), to_string(pair_.inhibitory)}},
          {"neurons", std::move(neurons)},
          {"synapses", std::move(synapses)}};
}

SpikingNetwork SpikingNetwork::from_json(const json& j) {
  SpikingNetwork net;
  try {
    if (j.at("version").get<int>() != 1) throw DataError("unsupported network version");
    net.seed_ = j.at("seed").get<std::uint64_t>();
    const auto& pair = j.at("kernel_pair");
    net.pair_ = {preset_from_string(pair.at(0).get<std::string>()), preset_from_string(pair.at(1).get<std::string>())};
    for (const auto& n : j.at("neurons")) {
      const auto cls = n.at("class").get<std::string>();
      if (cls != "excitatory" && cls != "inhibitory") throw DataError("unknown neuron class " + cls);
      net.kernels_.push_back({n.at("a").get<double>(), n.at("b").get<double>(), n.at("c").get<double>(),
                              n.at("d").get<double>(),
                              cls == "excitatory" ? NeuronClass::Excitatory : NeuronClass::Inhibitory});
    }
    for (const auto& s : j.at("synapses"))
      net.synapses_.push_back(
          {s.at("pre").get<int>(), s.at("post").get<int>(), s.at("delay").get<int>(), s.at("weight").get<double>()});
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed network JSON: ") + e.what());
  }
  net.validate();
  net.index_incoming();
  return net;
}

int Quantizer::quantize(double x) const {
  if (x <= r1) return 0;
  if (x >= r99) return levels - 1;
  const auto q = static_cast<int>(std::floor((x - r1) / (r99 - r1) * levels));
  return std::clamp(q, 0, levels - 1);
}

std::vector<int> Quantizer::quantize(std::span<const double> xs) const {
  std::vector<int> out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return quantize(x); });
  return out;
}

double empirical_quantile(std::span<const double> values, double p) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Quantizer fit_quantizer(std::span<const double> values, int levels) {
  if (values.size() < 100) throw DataError("quantizer needs at least 100 values");
  if (levels < 2) throw ConfigError("quantizer needs at least 2 levels");
  Quantizer q{empirical_quantile(values, 0.01), empirical_quantile(values, 0.99), levels};
  if (!(q.r1 < q.r99)) throw DataError("quantizer input is constant between the 1st and 99th percentiles");
  return q;
}

LevelMap map_levels(int levels, std::uint64_t seed) {
  using namespace topology;
  if (levels * kNeuronsPerLevel != kExcitatory)
    throw ConfigError("levels * 5 must equal the 200 excitatory neurons, got levels = " + std::to_string(levels));
  std::vector<int> perm(kExcitatory);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  LevelMap map;
  map.seed = seed;
  map.groups.resize(levels);
  for (int q = 0; q < levels; ++q)
    for (int k = 0; k < kNeuronsPerLevel; ++k) map.groups[q][k] = perm[q * kNeuronsPerLevel + k];
  return map;
}

StimulusSchedule schedule_stimuli(std::span<const int> levels, const LevelMap& map) {
  using namespace topology;
  if (levels.size() > static_cast<std::size_t>(kMaxStimulusRows))
    throw ConfigError("at most 40 input rows fit the stimulation window, got " + std::to_string(levels.size()));
  StimulusSchedule schedule;
  schedule.reserve(levels.size() * kNeuronsPerLevel);
  for (std::size_t r = 0; r < levels.size(); ++r) {
    const int q = levels[r];
    if (q < 0 || q >= map.levels()) throw ConfigError("level out of range for the level map");
    for (int k = 0; k < kNeuronsPerLevel; ++k)
      schedule.push_back({static_cast<int>(r) * kNeuronsPerLevel + k + 1, map.groups[q][k], kStimulusCurrent});
  }
  return schedule;
}

void write_raster_csv(const FiringMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write raster file " + path.string());
  out << "neuron,time_ms\n";
  for (const auto& f : map.firings) out << f.neuron << ',' << f.time_ms << '\n';
}

double stdp_weight_change(int dt_ms, const StdpParams& p) {
  if (dt_ms >= 0) return p.a_plus * std::exp(-static_cast<double>(dt_ms) / p.tau_plus_ms);
  return -p.a_minus * std::exp(static_cast<double>(dt_ms) / p.tau_minus_ms);
}

double apply_weight_change(double weight, double delta, double w_max) {
  return std::clamp(weight + delta, 0.0, w_max);
}

NetworkSimulator::NetworkSimulator(const SpikingNetwork& network) : network_(&network) { init(); }

NetworkSimulator::NetworkSimulator(SpikingNetwork& network, const StdpParams& params)
    : network_(&network), plastic_(&network), stdp_(params) {
  init();
}

void NetworkSimulator::init() {
  const auto& kernels = network_->kernels();
  states_.resize(kernels.size());
  for (std::size_t i = 0; i < kernels.size(); ++i) states_[i] = resting_state(kernels[i]);
  current_.assign(kernels.size(), 0.0);
  last_fire_.assign(kernels.size(), -1);
  if (stdp_) {
    last_arrival_.assign(network_->synapses().size(), -1);
    if (stdp_->mode == StdpParams::Mode::PerPresentation) pending_.assign(network_->synapses().size(), 0.0);
  }
  for (auto& slot : arrivals_) slot.clear();
  t_ = 0;
}

const std::vector<int>& NetworkSimulator::step(int t, std::span<const Stimulus> stimuli) {
  if (t != t_ + 1) throw ConfigError("simulation ticks must advance by exactly 1 ms");
  t_ = t;
  const auto& kernels = network_->kernels();
  const auto& synapses = network_->synapses();
  const int n = static_cast<int>(kernels.size());
  std::fill(current_.begin(), current_.end(), 0.0);
  for (const auto& s : stimuli) current_[s.neuron] += s.current;

  auto update_weight = [&](int syn, double delta) {
    if (stdp_->mode == StdpParams::Mode::PerTick) {
      auto& w = plastic_->mutable_synapses()[syn].weight;
      w = apply_weight_change(w, delta, stdp_->w_max);
    } else {
      pending_[syn] += delta;
    }
  };

  auto& slot = arrivals_[t % arrivals_.size()];
  for (int syn : slot) {
    const Synapse& s = synapses[syn];
    current_[s.post] += s.weight;
    if (stdp_ && network_->is_excitatory(s.pre)) {
      last_arrival_[syn] = t;
      if (last_fire_[s.post] >= 0) update_weight(syn, stdp_weight_change(last_fire_[s.post] - t, *stdp_));
    }
  }
  slot.clear();

  fired_.clear();
  for (int i = 0; i < n; ++i) {
    NeuronState& st = states_[i];
    const bool spiked = advance_one_ms(kernels[i], st, current_[i]);
    if (!std::isfinite(st.v) || !std::isfinite(st.u))
      throw NumericalError("neuron " + std::to_string(i) + " reached a non-finite state at t = " + std::to_string(t) +
                           " ms");
    if (!spiked) continue;
    fired_.push_back(i);
    last_fire_[i] = t;
    const int first = i * topology::kSynapsesPerNeuron;
    for (int k = 0; k < topology::kSynapsesPerNeuron; ++k) {
      const int syn = first + k;
      arrivals_[(t + synapses[syn].delay) % arrivals_.size()].push_back(syn);
    }
    if (stdp_)
      for (int syn : network_->incoming_excitatory(i))
        if (last_arrival_[syn] >= 0) update_weight(syn, stdp_weight_change(t - last_arrival_[syn], *stdp_));
  }
  return fired_;
}

void NetworkSimulator::flush_plasticity() {
  if (!stdp_ || stdp_->mode != StdpParams::Mode::PerPresentation) return;
  auto& synapses = plastic_->mutable_synapses();
  for (std::size_t s = 0; s < synapses.size(); ++s) {
    if (pending_[s] != 0.0) synapses[s].weight = apply_weight_change(synapses[s].weight, pending_[s], stdp_->w_max);
    pending_[s] = 0.0;
  }
}

namespace {

FiringMap run(NetworkSimulator& sim, const StimulusSchedule& schedule, int duration_ms) {
  if (duration_ms < 1) throw ConfigError("simulation duration must be at least 1 ms");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].time_ms < 1 || schedule[i].time_ms > duration_ms)
      throw ConfigError("stimulus time outside the simulation window");
    if (i > 0 && schedule[i].time_ms < schedule[i - 1].time_ms) throw ConfigError("stimulus schedule is not sorted");
    if (schedule[i].neuron < 0 || schedule[i].neuron >= topology::kNeurons)
      throw ConfigError("stimulus neuron out of range");
  }
  FiringMap map;
  map.duration_ms = duration_ms;
  std::size_t next = 0;
  for (int t = 1; t <= duration_ms; ++t) {
    const std::size_t begin = next;
    while (next < schedule.size() && schedule[next].time_ms == t) ++next;
    const auto& fired = sim.step(t, std::span<const Stimulus>(schedule.data() + begin, next - begin));
    for (int neuron : fired) map.firings.push_back({neuron, t});
  }
  sim.flush_plasticity();
  return map;
}

}  // namespace

FiringMap simulate(const SpikingNetwork& network, const StimulusSchedule& schedule, int duration_ms) {
  NetworkSimulator sim(network);
  return run(sim, schedule, duration_ms);
}

FiringMap simulate_plastic(SpikingNetwork& network, const StimulusSchedule& schedule, const StdpParams& params,
                           int duration_ms) {
  NetworkSimulator sim(network, params);
  return run(sim, schedule, duration_ms);
}

TrainingTrace train_weights(SpikingNetwork& network, const std::vector<std::vector<int>>& events,
                            std::span<const int> labels, const LevelMap& map, const WeightTrainingConfig& config,
                            std::uint64_t seed) {
  if (events.size() != labels.size()) throw ConfigError("train_weights: events and labels differ in length");
  if (std::count(labels.begin(), labels.end(), 0) == 0 || std::count(labels.begin(), labels.end(), 1) == 0)
    throw DataError("train_weights needs at least one training event of each class");
  if (config.presentations < 1) throw ConfigError("train_weights: presentations must be positive");

  std::vector<StimulusSchedule> schedules;
  schedules.reserve(events.size());
  for (const auto& e : events) schedules.push_back(schedule_stimuli(e, map));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, events.size() - 1);
  TrainingTrace trace;
  trace.delta_norms.reserve(config.presentations);
  std::vector<double> before = network.weights();
  for (int p = 0; p < config.presentations; ++p) {
    simulate_plastic(network, schedules[pick(rng)], config.stdp, config.duration_ms);
    double sq = 0.0;
    const auto& synapses = network.synapses();
    for (std::size_t s = 0; s < synapses.size(); ++s) {
      const double d = synapses[s].weight - before[s];
      sq += d * d;
      before[s] = synapses[s].weight;
    }
    trace.delta_norms.push_back(std::sqrt(sq));
  }
  return trace;
}

}  // namespace spiketurn
