#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace spiketurn {

enum class NeuronClass { Excitatory, Inhibitory };
enum class KernelPreset { RS, IB, CH, FS, LTS };

std::string to_string(KernelPreset preset);
KernelPreset preset_from_string(const std::string& name);
NeuronClass class_of(KernelPreset preset);

// Izhikevich parameters: a recovery time scale, b recovery sensitivity,
// c after-spike reset of v (mV), d after-spike increment of u.
struct NeuronKernel {
  double a{0.02};
  double b{0.2};
  double c{-65.0};
  double d{8.0};
  NeuronClass neuron_class{NeuronClass::Excitatory};

  static NeuronKernel preset(KernelPreset preset);
  bool operator==(const NeuronKernel&) const = default;
};

struct NeuronState {
  double v{-65.0};
  double u{-13.0};
};

// v = c, u = b * v.
NeuronState resting_state(const NeuronKernel& kernel);

struct Derivatives {
  double dv{0.0};
  double du{0.0};
};

// v' = 0.04 v^2 + 5 v + 140 - u + I,  u' = a (b v - u).
Derivatives izhikevich_derivatives(const NeuronKernel& kernel, const NeuronState& state, double current);

// Advances one 1 ms network tick: v by two 0.5 ms Euler half-steps, u by one
// 1 ms step, then reset (v <- c, u <- u + d) if v >= 30 mV. Returns true on a spike.
bool advance_one_ms(const NeuronKernel& kernel, NeuronState& state, double current);

// Spike times (ms) of an isolated neuron under a constant current, forward
// Euler at step dt_ms, starting from resting_state().
std::vector<double> single_neuron_spike_times(const NeuronKernel& kernel, double current, double duration_ms,
                                              double dt_ms);

namespace topology {
inline constexpr int kNeurons = 250;
inline constexpr int kExcitatory = 200;
inline constexpr int kInhibitory = 50;
inline constexpr int kSynapsesPerNeuron = 25;
inline constexpr int kMaxDelayMs = 20;
inline constexpr double kMaxWeight = 10.0;
inline constexpr double kInitialExcitatoryWeight = 6.0;
inline constexpr double kInhibitoryWeight = -5.0;
inline constexpr double kStimulusCurrent = 20.0;
inline constexpr int kNeuronsPerLevel = 5;
inline constexpr int kLevels = kExcitatory / kNeuronsPerLevel;  // 40
inline constexpr int kMaxStimulusRows = 40;
inline constexpr int kSimulationMs = 250;
}  // namespace topology

struct KernelPair {
  KernelPreset excitatory{KernelPreset::RS};
  KernelPreset inhibitory{KernelPreset::LTS};

  bool operator==(const KernelPair&) const = default;
};

struct Synapse {
  int pre{0};
  int post{0};
  int delay{1};  // ms, 1..20
  double weight{0.0};

  bool operator==(const Synapse&) const = default;
};

// 250 Izhikevich neurons (200 excitatory, 50 inhibitory). Every neuron owns
// exactly 25 outgoing synapses stored contiguously: neuron i's synapses are
// synapses()[25 i .. 25 i + 24]. Inhibitory neurons only target excitatory ones.
class SpikingNetwork {
public:
  SpikingNetwork() = default;

  static SpikingNetwork build(KernelPair pair, std::uint64_t seed);

  KernelPair kernel_pair() const { return pair_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<NeuronKernel>& kernels() const { return kernels_; }
  const std::vector<Synapse>& synapses() const { return synapses_; }
  std::vector<Synapse>& mutable_synapses() { return synapses_; }
  std::span<const int> incoming_excitatory(int neuron) const { return incoming_excitatory_[neuron]; }
  bool is_excitatory(int neuron) const { return neuron < topology::kExcitatory; }

  std::vector<double> weights() const;

  // Throws DataError if any topology or weight invariant is violated.
  void validate() const;

  nlohmann::json to_json() const;
  static SpikingNetwork from_json(const nlohmann::json& j);

  bool operator==(const SpikingNetwork& other) const {
    return pair_ == other.pair_ && seed_ == other.seed_ && kernels_ == other.kernels_ &&
           synapses_ == other.synapses_;
  }

private:
  void index_incoming();

  KernelPair pair_;
  std::uint64_t seed_{0};
  std::vector<NeuronKernel> kernels_;
  std::vector<Synapse> synapses_;
  std::vector<std::vector<int>> incoming_excitatory_;
};

// Percentile-clipped uniform quantizer onto `levels` integer levels.
struct Quantizer {
  double r1{0.0};
  double r99{1.0};
  int levels{40};

  int quantize(double x) const;
  std::vector<int> quantize(std::span<const double> xs) const;
  bool operator==(const Quantizer&) const = default;
};

// Linear-interpolated empirical quantile (p in [0, 1]).
double empirical_quantile(std::span<const double> values, double p);

// r1 / r99 are the 1st and 99th percentiles. Needs >= 100 values and r1 < r99.
Quantizer fit_quantizer(std::span<const double> values, int levels = 40);

// Each quantization level owns 5 distinct excitatory neurons; together the
// groups cover every excitatory neuron exactly once.
struct LevelMap {
  std::vector<std::array<int, topology::kNeuronsPerLevel>> groups;
  std::uint64_t seed{0};

  int levels() const { return static_cast<int>(groups.size()); }
  bool operator==(const LevelMap&) const = default;
};

LevelMap map_levels(int levels, std::uint64_t seed);

struct Stimulus {
  int time_ms{1};
  int neuron{0};
  double current{topology::kStimulusCurrent};

  bool operator==(const Stimulus&) const = default;
};

using StimulusSchedule = std::vector<Stimulus>;

// Row r (1-based) at level q stimulates the 5 neurons of q one per ms at
// 5(r-1)+1 .. 5(r-1)+5. At most 40 rows.
StimulusSchedule schedule_stimuli(std::span<const int> levels, const LevelMap& map);

struct Firing {
  int neuron{0};
  int time_ms{1};

  bool operator==(const Firing&) const = default;
};

// Sparse N x T raster; firings sorted by (time_ms, neuron).
struct FiringMap {
  int n_neurons{topology::kNeurons};
  int duration_ms{topology::kSimulationMs};
  std::vector<Firing> firings;

  bool operator==(const FiringMap&) const = default;
};

void write_raster_csv(const FiringMap& map, const std::filesystem::path& path);

struct StdpParams {
  enum class Mode { PerTick, PerPresentation };

  double a_plus{0.1};
  double a_minus{0.12};
  double tau_plus_ms{20.0};
  double tau_minus_ms{20.0};
  double w_max{topology::kMaxWeight};
  Mode mode{Mode::PerTick};
};

// Weight change for a post-synaptic firing at t_post paired with a spike
// arrival at t_arrival, dt = t_post - t_arrival. dt >= 0 potentiates by
// a_plus exp(-dt / tau_plus), dt < 0 depresses by a_minus exp(dt / tau_minus).
double stdp_weight_change(int dt_ms, const StdpParams& params);

// Adds delta to an excitatory weight and clamps to [0, w_max].
double apply_weight_change(double weight, double delta, double w_max);

// Millisecond-step network simulation. Spikes travel to their target after the
// synapse delay. With plasticity, excitatory weights are updated by nearest-
// spike STDP keyed on spike arrival times.
class NetworkSimulator {
public:
  // Plasticity off; the network is only read.
  explicit NetworkSimulator(const SpikingNetwork& network);
  // Plasticity on; excitatory weights of `network` are modified.
  NetworkSimulator(SpikingNetwork& network, const StdpParams& params);

  // Advances to tick t (must be previous t + 1, starting at 1), injecting the
  // given (neuron, current) stimuli. Returns the neurons that fired at t in
  // ascending order.
  const std::vector<int>& step(int t, std::span<const Stimulus> stimuli);

  // Applies weight changes accumulated in PerPresentation mode.
  void flush_plasticity();

  const std::vector<NeuronState>& states() const { return states_; }
  std::vector<NeuronState>& mutable_states() { return states_; }

private:
  void init();

  const SpikingNetwork* network_;
  SpikingNetwork* plastic_{nullptr};
  std::optional<StdpParams> stdp_;
  std::vector<NeuronState> states_;
  std::vector<double> current_;
  std::array<std::vector<int>, topology::kMaxDelayMs + 1> arrivals_;
  std::vector<int> last_fire_;
  std::vector<int> last_arrival_;
  std::vector<double> pending_;
  std::vector<int> fired_;
  int t_{0};
};

// Runs ticks 1..duration_ms from the resting state. The schedule must lie in
// [1, duration_ms]. Plasticity off: a pure function of (network, schedule).
FiringMap simulate(const SpikingNetwork& network, const StimulusSchedule& schedule,
                   int duration_ms = topology::kSimulationMs);
FiringMap simulate_plastic(SpikingNetwork& network, const StimulusSchedule& schedule, const StdpParams& params,
                           int duration_ms = topology::kSimulationMs);

struct WeightTrainingConfig {
  int presentations{3600};
  int duration_ms{topology::kSimulationMs};
  StdpParams stdp;
};

struct TrainingTrace {
  // 2-norm of the weight vector change across each presentation.
  std::vector<double> delta_norms;
};

// Unsupervised STDP training: presentations drawn uniformly with replacement
// from `events` (level sequences; both labels must occur), each simulated for
// duration_ms with plasticity on.
TrainingTrace train_weights(SpikingNetwork& network, const std::vector<std::vector<int>>& events,
                            std::span<const int> labels, const LevelMap& map, const WeightTrainingConfig& config,
                            std::uint64_t seed);

}  // namespace spiketurn
