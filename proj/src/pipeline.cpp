#include "spiketurn/pipeline.hpp"

#include "spiketurn/common.hpp"

namespace spiketurn {

using nlohmann::json;

void PreprocessConfig::validate() const {
  if (!(ewma_alpha > 0.0 && ewma_alpha <= 1.0)) throw ConfigError("preprocess.ewma_alpha must lie in (0, 1]");
  if (num_features < 1) throw ConfigError("preprocess.num_features must be >= 1");
  if (chi2_bins < 2) throw ConfigError("preprocess.chi2_bins must be >= 2");
  if (resample_len < 2 || resample_len > 40) throw ConfigError("preprocess.resample_len must lie in [2, 40]");
}

void require_two_classes(const Corpus& corpus, const char* what) {
  if (corpus.count_label(0) == 0 || corpus.count_label(1) == 0)
    throw DataError(std::string(what) + ": training data must contain both Give and Keep events");
}

FeaturePipeline FeaturePipeline::fit(const Corpus& train, const PreprocessConfig& config) {
  config.validate();
  if (train.events.empty()) throw DataError("feature pipeline: no training events");
  require_two_classes(train, "feature pipeline");
  FeaturePipeline p;
  p.config_ = config;
  p.channel_names_ = train.channel_names();

  Corpus smoothed = train;
  for (auto& ev : smoothed.events) ev.observation = ewma_smooth(ev.observation, config.ewma_alpha);
  auto normalized = znormalize(smoothed);
  p.stats_ = std::move(normalized.stats);
  p.spec_ = chi2_rank(normalized.corpus, config.num_features, config.chi2_bins);
  return p;
}

std::vector<std::vector<double>> FeaturePipeline::transform(const ObservationMatrix& x) const {
  if (x.cols != channel_names_.size() || x.channel_names != channel_names_)
    throw DataError("observation channels do not match the training channels");
  x.validate();
  const auto z = stats_.apply(ewma_smooth(x, config_.ewma_alpha));
  std::vector<std::vector<double>> out;
  out.reserve(spec_.size());
  for (const auto& ref : spec_.selected) out.push_back(feature_series(z, ref));
  return out;
}

std::vector<std::vector<double>> FeaturePipeline::partial_features(const ObservationMatrix& x, double tau) const {
  if (x.rows < 2) throw DataError("events need at least 2 samples");
  auto series = transform(slice_partial(x, tau));
  for (auto& s : series) s = resample_prefix(s, x.rows, config_.resample_len);
  return series;
}

json FeaturePipeline::to_json() const {
  json selected = json::array();
  for (std::size_t i = 0; i < spec_.size(); ++i)
    selected.push_back({{"channel", spec_.selected[i].channel},
                        {"filter", to_string(spec_.selected[i].filter)},
                        {"chi2", spec_.chi2_scores[i]}});
  std::vector<int> constant(stats_.constant.begin(), stats_.constant.end());
  return {{"ewma_alpha", config_.ewma_alpha},
          {"num_features", config_.num_features},
          {"chi2_bins", config_.chi2_bins},
          {"resample_len", config_.resample_len},
          {"channels", channel_names_},
          {"mean", stats_.mean},
          {"stddev", stats_.stddev},
          {"constant", constant},
          {"selected", selected}};
}

FeaturePipeline FeaturePipeline::from_json(const json& j) {
  FeaturePipeline p;
  p.config_.ewma_alpha = j.at("ewma_alpha").get<double>();
  p.config_.num_features = j.at("num_features").get<std::size_t>();
  p.config_.chi2_bins = j.at("chi2_bins").get<std::size_t>();
  p.config_.resample_len = j.at("resample_len").get<std::size_t>();
  p.config_.validate();
  p.channel_names_ = j.at("channels").get<std::vector<std::string>>();
  p.stats_.mean = j.at("mean").get<std::vector<double>>();
  p.stats_.stddev = j.at("stddev").get<std::vector<double>>();
  for (int c : j.at("constant").get<std::vector<int>>()) p.stats_.constant.push_back(c != 0);
  const auto m = p.channel_names_.size();
  if (p.stats_.mean.size() != m || p.stats_.stddev.size() != m || p.stats_.constant.size() != m)
    throw DataError("pipeline: statistics do not match the channel list");
  for (const auto& s : j.at("selected")) {
    p.spec_.selected.push_back({s.at("channel").get<std::size_t>(), filter_from_string(s.at("filter").get<std::string>())});
    p.spec_.chi2_scores.push_back(s.at("chi2").get<double>());
    if (p.spec_.selected.back().channel >= m) throw DataError("pipeline: selected channel out of range");
  }
  p.spec_.validate();
  return p;
}

}  // namespace spiketurn
