#pragma once

#include "spiketurn/classifier.hpp"
#include "spiketurn/dataset.hpp"
#include "spiketurn/descriptors.hpp"
#include "spiketurn/hmm.hpp"
#include "spiketurn/model.hpp"
#include "spiketurn/pipeline.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace spiketurn {

// ------------------------------------------------------------ Gaussian HMM

struct HmmBaselineConfig {
  PreprocessConfig preprocess;
  EmConfig em{5, 5, 30, 1e-6, 0.2};
  double variance_floor{1e-4};

  void validate() const;
};

nlohmann::json to_json(const HmmBaselineConfig& c);
HmmBaselineConfig hmm_baseline_config_from_json(const nlohmann::json& j, const std::string& where = "hmm");

// One Gaussian HMM per turn class over the selected feature series; the
// class whose model explains the partial observation better wins, ties -> 0.
class HmmBaseline {
public:
  static HmmBaseline train(const Corpus& train, const HmmBaselineConfig& config, std::uint64_t seed);

  FrameSequence frames(const ObservationMatrix& x, double tau) const;
  // score = log L(give) - log L(keep); label 1 iff score > 0.
  Prediction predict(const ObservationMatrix& x, double tau) const;

  const GaussianHmm& model(int label) const { return label == 1 ? give_ : keep_; }
  const FeaturePipeline& pipeline() const { return pipeline_; }

  nlohmann::json to_json() const;
  static HmmBaseline from_json(const nlohmann::json& j);

  // For tests: assemble from explicit parts.
  HmmBaseline(FeaturePipeline pipeline, GaussianHmm keep, GaussianHmm give)
      : pipeline_(std::move(pipeline)), keep_(std::move(keep)), give_(std::move(give)) {}
  HmmBaseline() = default;

private:
  FeaturePipeline pipeline_;
  GaussianHmm keep_;
  GaussianHmm give_;
};

// ------------------------------------------------------------------ Ishii

struct IshiiConfig {
  double movement_threshold{0.1};
  int rff_dim{500};
  std::vector<double> c_grid{1.0, 10.0, 100.0};
  std::vector<double> gamma_grid{0.1, 0.01, 0.001};
  int cv_folds{5};

  void validate() const;
};

nlohmann::json to_json(const IshiiConfig& c);
IshiiConfig ishii_config_from_json(const nlohmann::json& j, const std::string& where = "ishii");

inline constexpr std::size_t kIshiiStatsPerChannel = 11;

// Statistics of one scaled channel. A movement is a maximal run of samples
// deviating from the anchor by more than the threshold; the anchor follows
// the signal while it is still and is reset to the current sample when a run
// ends. A run still open at the end counts.
struct IshiiChannelStats {
  double min{0.0};
  double max{0.0};
  double amp{0.0};   // max - min
  double dur{0.0};   // seconds
  double slo{0.0};   // amp / dur
  double mo{0.0};    // movements per second
  double am{0.0};    // mean movement amplitude
  double fq{0.0};    // zero crossings of the mean-removed signal per second
  double movement_count{0.0};
  double amplitude_sum{0.0};
  double zero_crossings{0.0};

  std::array<double, kIshiiStatsPerChannel> values() const;
};

IshiiChannelStats ishii_channel_stats(std::span<const double> scaled, double sample_hz, double movement_threshold);

// Affine map with mean - std -> 0 and mean + std -> 1, clamped to [0, 1].
double ishii_scale(double value, double mean, double stddev);

// Grand mean and population std of each raw channel over a training corpus.
struct IshiiScaling {
  std::vector<double> mean;
  std::vector<double> stddev;

  static IshiiScaling fit(const Corpus& train);  // throws DataError on a zero-variance channel
};

// 11 statistics per channel, channels concatenated.
std::vector<double> ishii_features(const ObservationMatrix& x, const IshiiScaling& scaling,
                                   double movement_threshold = 0.1);

// z -> sqrt(2 / D) cos(W z + b) with W ~ N(0, 2 gamma), b ~ U[0, 2 pi):
// inner products approximate the RBF kernel exp(-gamma |x - y|^2).
class RandomFourierFeatures {
public:
  RandomFourierFeatures() = default;
  RandomFourierFeatures(std::size_t input_dim, std::size_t output_dim, double gamma, std::uint64_t seed);

  std::vector<double> transform(std::span<const double> x) const;
  FeatureMatrix transform(const FeatureMatrix& x) const;

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  double gamma() const { return gamma_; }
  std::uint64_t seed() const { return seed_; }

private:
  std::size_t input_dim_{0};
  std::size_t output_dim_{0};
  double gamma_{1.0};
  std::uint64_t seed_{0};
  std::vector<double> w_;  // output_dim x input_dim
  std::vector<double> b_;
};

class IshiiBaseline {
public:
  static IshiiBaseline train(const Corpus& train, const IshiiConfig& config, std::uint64_t seed, int threads = 1);

  Prediction predict(const ObservationMatrix& x, double tau) const;

  double chosen_c() const { return svm_.config().c; }
  double chosen_gamma() const { return rff_.gamma(); }

  nlohmann::json to_json() const;
  static IshiiBaseline from_json(const nlohmann::json& j);

private:
  IshiiConfig config_;
  std::vector<std::string> channel_names_;
  IshiiScaling scaling_;
  Standardizer feature_stats_;
  RandomFourierFeatures rff_;
  LinearSvm svm_;
};

// -------------------------------------------------------------- SNN-PNG

struct PngConfig {
  int templates_per_class{20};
  double j_eps{0.9};

  void validate() const;
};

nlohmann::json to_json(const PngConfig& c);
PngConfig png_config_from_json(const nlohmann::json& j, const std::string& where = "png");

// Templates: per class, K training events, each as one PNG group per network.
class PngBaseline {
public:
  static PngBaseline train(const Corpus& train, const TtsnetModel& snn, const PngConfig& config, std::uint64_t seed,
                           int threads = 1);

  // score = mean similarity to Give templates - mean similarity to Keep
  // templates over all networks; label 1 iff score > 0.
  Prediction predict(const TtsnetModel& snn, const ObservationMatrix& x, double tau) const;
  Prediction predict_groups(const std::vector<PngGroup>& groups) const;

  const std::vector<std::string>& template_ids(int label) const { return ids_[label]; }
  std::size_t bank_size(int label) const { return groups_[label].size(); }

  nlohmann::json to_json() const;
  static PngBaseline from_json(const nlohmann::json& j);

private:
  void pack();

  PngConfig config_;
  std::array<std::vector<std::string>, 2> ids_;
  std::array<std::vector<std::vector<PngGroup>>, 2> groups_;  // [label][template][network]
  std::array<std::vector<std::vector<PackedPng>>, 2> packed_;
};

inline constexpr int kBaselineFormatVersion = 1;

}  // namespace spiketurn
