#pragma once

#include "spiketurn/model.hpp"
#include "spiketurn/synthetic.hpp"

#include <filesystem>
#include <string>

namespace spiketurn::testing {

// Small synthetic corpus shared by the model, baseline and experiment tests.
inline Corpus small_corpus(int subjects = 3, int events = 24, std::uint64_t seed = 5) {
  SyntheticConfig cfg;
  cfg.n_subjects = subjects;
  cfg.events_per_subject = events;
  cfg.trials_per_subject = 3;
  return generate_synthetic(cfg, seed);
}

// TTSNet settings cut down for unit-test runtimes.
inline TtsnetConfig small_ttsnet() {
  TtsnetConfig cfg;
  cfg.preprocess.num_features = 3;
  cfg.presentations = 60;
  cfg.svm_c_grid = {0.1, 1.0};
  cfg.cv_folds = 3;
  return cfg;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "spiketurn_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace spiketurn::testing
