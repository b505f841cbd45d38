#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

namespace spiketurn {

// Posteriors of one sequence from the scaled forward-backward recursion.
struct Posteriors {
  double log_likelihood{0.0};
  std::vector<double> gamma;   // T x S state occupancy
  std::vector<double> xi_sum;  // S x S expected transitions summed over t
};

// log_emission is T x S (row-major). An all-impossible step gives -inf.
double forward_log_likelihood(std::span<const double> pi, std::span<const double> a,
                              std::span<const double> log_emission, std::size_t n_states);
Posteriors forward_backward(std::span<const double> pi, std::span<const double> a,
                            std::span<const double> log_emission, std::size_t n_states);

struct EmConfig {
  int n_states{5};
  int restarts{10};
  int max_iterations{200};
  double tolerance{1e-6};           // stop when the log-likelihood gain falls below this
  double validation_fraction{0.2};  // held out to pick the best restart
};

// Discrete-emission HMM over symbols 0..n_symbols-1.
struct DiscreteHmm {
  std::size_t n_states{1};
  std::size_t n_symbols{1};
  std::vector<double> pi;  // S
  std::vector<double> a;   // S x S
  std::vector<double> b;   // S x K

  static DiscreteHmm uniform(std::size_t n_states, std::size_t n_symbols);
  static DiscreteHmm random(std::size_t n_states, std::size_t n_symbols, std::mt19937_64& rng);

  // log P(obs | model); 0 for an empty sequence, -inf if impossible.
  double log_likelihood(std::span<const int> obs) const;
  Posteriors posteriors(std::span<const int> obs) const;

  // Rows of pi, a and b are distributions within 1e-9.
  void validate() const;
  nlohmann::json to_json() const;
  static DiscreteHmm from_json(const nlohmann::json& j);
  bool operator==(const DiscreteHmm&) const = default;
};

// EM from `init`; trace[k] is the training log-likelihood of the model after
// k re-estimations (trace[0] is the initial model).
struct DiscreteFit {
  DiscreteHmm model;
  std::vector<double> trace;
};
DiscreteFit baum_welch_run(const std::vector<std::vector<int>>& sequences, DiscreteHmm init, int max_iterations,
                           double tolerance);

// Seeded restarts; the restart with the best held-out log-likelihood wins.
DiscreteHmm baum_welch(const std::vector<std::vector<int>>& sequences, std::size_t n_symbols,
                       const EmConfig& config, std::uint64_t seed);

// Sequence of D-dimensional frames, row-major T x D.
struct FrameSequence {
  std::size_t length{0};
  std::size_t dim{0};
  std::vector<double> values;

  std::span<const double> frame(std::size_t t) const { return {values.data() + t * dim, dim}; }
};

// Diagonal-covariance Gaussian-emission HMM.
struct GaussianHmm {
  std::size_t n_states{1};
  std::size_t dim{1};
  std::vector<double> pi;
  std::vector<double> a;
  std::vector<double> mean;      // S x D
  std::vector<double> variance;  // S x D
  double variance_floor{1e-4};

  std::vector<double> log_emission(const FrameSequence& seq) const;
  double log_likelihood(const FrameSequence& seq) const;

  void validate() const;
  nlohmann::json to_json() const;
  static GaussianHmm from_json(const nlohmann::json& j);
  bool operator==(const GaussianHmm&) const = default;
};

struct GaussianFit {
  GaussianHmm model;
  std::vector<double> trace;
};

// Random initial model: uniform-random pi and a, means at randomly chosen
// frames, variances equal to the pooled frame variance (floored).
GaussianHmm random_gaussian_hmm(const std::vector<FrameSequence>& sequences, std::size_t n_states,
                                double variance_floor, std::mt19937_64& rng);
GaussianFit gaussian_baum_welch_run(const std::vector<FrameSequence>& sequences, GaussianHmm init,
                                    int max_iterations, double tolerance);
GaussianHmm gaussian_baum_welch(const std::vector<FrameSequence>& sequences, const EmConfig& config,
                                double variance_floor, std::uint64_t seed);

}  // namespace spiketurn
