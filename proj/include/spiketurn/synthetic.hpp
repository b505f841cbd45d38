#pragma once

#include "spiketurn/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

namespace spiketurn {

// Parameters of the synthetic turn-event corpus. Keep events are AR(1) noise
// around per-subject channel offsets. Give events add a motif (amplitude ramp
// plus oscillation burst) over the final 40% of the window on motif_channels,
// and a weak level shift over the whole window on onset_channels.
struct SyntheticConfig {
  int n_subjects{12};
  int events_per_subject{180};
  int n_channels{8};
  double give_prior{0.4};
  double sample_hz{20.0};
  int min_len{20};
  int max_len{40};
  double ar_coeff{0.7};
  double noise_std{1.0};
  double subject_offset_std{0.5};
  double motif_amplitude{2.0};
  double motif_freq_hz{3.0};
  std::vector<int> motif_channels{0, 1, 2};
  double onset_amplitude{1.0};
  std::vector<int> onset_channels{0, 3};

  // Object request sequences: a fixed procedure script over n_objects
  // instruments; each request is replaced by a uniformly random object with
  // probability object_noise.
  int trials_per_subject{5};
  int n_objects{6};
  double object_noise{0.1};
  std::vector<int> object_script{1, 2, 3, 4, 2, 5, 4, 2, 6, 2, 4, 6, 2, 4};

  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticConfig& c);
// Missing fields keep their defaults; unknown fields and bad values throw
// ConfigError naming the field path under `where`.
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j, const std::string& where = "synthetic");

Corpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace spiketurn
