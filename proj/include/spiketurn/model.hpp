#pragma once

#include "spiketurn/classifier.hpp"
#include "spiketurn/dataset.hpp"
#include "spiketurn/descriptors.hpp"
#include "spiketurn/pipeline.hpp"
#include "spiketurn/snn.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace spiketurn {

struct TtsnetConfig {
  PreprocessConfig preprocess;
  std::size_t bins{25};
  KernelPair kernels;
  int presentations{3600};
  StdpParams::Mode stdp_mode{StdpParams::Mode::PerTick};
  // Partial observations are simulated for 5 ms per row plus settle_ms and
  // normalized by that elapsed time; otherwise every run lasts 250 ms.
  bool elapsed_normalization{true};
  int settle_ms{50};
  std::string classifier{"svm"};  // "svm" or "centroid"
  std::vector<double> svm_c_grid{0.001, 0.01, 0.1, 1.0, 10.0};
  int cv_folds{5};

  void validate() const;
};

nlohmann::json to_json(const TtsnetConfig& c);
TtsnetConfig ttsnet_config_from_json(const nlohmann::json& j, const std::string& where = "ttsnet");

struct Prediction {
  int label{0};
  double score{0.0};
};

// One SNN per selected feature.
struct ChannelNetwork {
  Quantizer quantizer;
  LevelMap level_map;
  SpikingNetwork network;

  bool operator==(const ChannelNetwork&) const = default;
};

struct TtsnetTrainReport {
  std::vector<TrainingTrace> traces;  // stage-1 weight change per network
  std::vector<int> train_labels;
  std::vector<int> train_decisions;   // classifier output on the stage-2 descriptors
  double train_f1{0.0};
  double chosen_c{0.0};
};

class TtsnetModel {
public:
  TtsnetModel() = default;

  // Preprocessing fit -> quantizers -> STDP training per network -> NHNF
  // descriptors of all training events -> classifier.
  static TtsnetModel train(const Corpus& train, const TtsnetConfig& config, std::uint64_t seed, int threads = 1,
                           TtsnetTrainReport* report = nullptr);

  // Quantized level sequence per network for the first tau of x.
  std::vector<std::vector<int>> encode(const ObservationMatrix& x, double tau) const;
  // Simulation length used for an observation with `rows` stimulus rows.
  int simulation_ms(std::size_t rows) const;

  std::vector<FiringMap> firing_maps(const ObservationMatrix& x, double tau) const;
  // Flattened m x B NHNF descriptor before standardization.
  std::vector<double> descriptor(const ObservationMatrix& x, double tau) const;
  Prediction predict(const ObservationMatrix& x, double tau) const;

  const TtsnetConfig& config() const { return config_; }
  const FeaturePipeline& pipeline() const { return pipeline_; }
  const std::vector<ChannelNetwork>& channels() const { return channels_; }
  const Standardizer& descriptor_stats() const { return descriptor_stats_; }
  const AnyClassifier& classifier() const { return classifier_; }
  std::uint64_t seed() const { return seed_; }

  nlohmann::json to_json() const;
  static TtsnetModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TtsnetModel load(const std::filesystem::path& path);

private:
  TtsnetConfig config_;
  std::uint64_t seed_{0};
  FeaturePipeline pipeline_;
  std::vector<ChannelNetwork> channels_;
  Standardizer descriptor_stats_;
  AnyClassifier classifier_;
};

inline constexpr int kModelFormatVersion = 1;

}  // namespace spiketurn
