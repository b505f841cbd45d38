#pragma once

#include "spiketurn/dataset.hpp"
#include "spiketurn/features.hpp"

#include <cstddef>
#include <vector>

#include <json.hpp>

namespace spiketurn {

struct PreprocessConfig {
  double ewma_alpha{0.2};
  std::size_t num_features{10};
  std::size_t chi2_bins{10};
  std::size_t resample_len{40};

  void validate() const;
  bool operator==(const PreprocessConfig&) const = default;
};

// EWMA smoothing -> z-normalization -> filter bank -> chi-squared selection.
// Statistics and the selected features are fitted on a training corpus once
// and replayed unchanged on any later observation.
class FeaturePipeline {
public:
  FeaturePipeline() = default;

  static FeaturePipeline fit(const Corpus& train, const PreprocessConfig& config);

  // One encoded series per selected feature, at the observation's own length.
  // Throws DataError if the channels differ from the training channels.
  std::vector<std::vector<double>> transform(const ObservationMatrix& x) const;

  // Features of the first tau fraction of x, resampled on the grid of the full
  // event: tau = 1 gives exactly resample_len points per feature, a shorter
  // prefix gives the leading grid points that fall inside it.
  std::vector<std::vector<double>> partial_features(const ObservationMatrix& x, double tau) const;

  const PreprocessConfig& config() const { return config_; }
  const ChannelStats& stats() const { return stats_; }
  const FeatureSpec& spec() const { return spec_; }
  const std::vector<std::string>& channel_names() const { return channel_names_; }
  std::size_t size() const { return spec_.size(); }

  nlohmann::json to_json() const;
  static FeaturePipeline from_json(const nlohmann::json& j);
  bool operator==(const FeaturePipeline&) const = default;

private:
  PreprocessConfig config_;
  ChannelStats stats_;
  FeatureSpec spec_;
  std::vector<std::string> channel_names_;
};

// Both labels present and at least two events; throws DataError otherwise.
void require_two_classes(const Corpus& corpus, const char* what);

}  // namespace spiketurn
