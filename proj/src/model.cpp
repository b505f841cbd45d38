#include "spiketurn/model.hpp"

#include "spiketurn/common.hpp"
#include "spiketurn/config_json.hpp"
#include "spiketurn/metrics.hpp"

#include <algorithm>
#include <fstream>

namespace spiketurn {

using nlohmann::json;

void TtsnetConfig::validate() const {
  preprocess.validate();
  if (bins < 1 || bins > static_cast<std::size_t>(topology::kNeurons))
    throw ConfigError("ttsnet.bins must lie in [1, 250]");
  if (presentations < 1) throw ConfigError("ttsnet.presentations must be positive");
  if (settle_ms < 0) throw ConfigError("ttsnet.settle_ms must be non-negative");
  if (classifier != "svm" && classifier != "centroid")
    throw ConfigError("ttsnet.classifier must be \"svm\" or \"centroid\"");
  if (svm_c_grid.empty()) throw ConfigError("ttsnet.svm_c_grid must not be empty");
  for (double c : svm_c_grid)
    if (!(c > 0.0)) throw ConfigError("ttsnet.svm_c_grid values must be positive");
  if (cv_folds < 2) throw ConfigError("ttsnet.cv_folds must be >= 2");
}

json to_json(const TtsnetConfig& c) {
  return {{"ewma_alpha", c.preprocess.ewma_alpha},
          {"num_features", c.preprocess.num_features},
          {"chi2_bins", c.preprocess.chi2_bins},
          {"resample_len", c.preprocess.resample_len},
          {"bins", c.bins},
          {"kernel_pair", {to_string(c.kernels.excitatory), to_string(c.kernels.inhibitory)}},
          {"presentations", c.presentations},
          {"stdp_mode", c.stdp_mode == StdpParams::Mode::PerTick ? "per_tick" : "per_presentation"},
          {"elapsed_normalization", c.elapsed_normalization},
          {"settle_ms", c.settle_ms},
          {"classifier", c.classifier},
          {"svm_c_grid", c.svm_c_grid},
          {"cv_folds", c.cv_folds}};
}

TtsnetConfig ttsnet_config_from_json(const json& j, const std::string& where) {
  TtsnetConfig c;
  ConfigReader r(j, where);
  r.get("ewma_alpha", c.preprocess.ewma_alpha);
  r.get("num_features", c.preprocess.num_features);
  r.get("chi2_bins", c.preprocess.chi2_bins);
  r.get("resample_len", c.preprocess.resample_len);
  r.get("bins", c.bins);
  std::vector<std::string> pair{to_string(c.kernels.excitatory), to_string(c.kernels.inhibitory)};
  r.get("kernel_pair", pair);
  if (pair.size() != 2) throw ConfigError(r.path("kernel_pair") + ": expected [excitatory, inhibitory]");
  try {
    c.kernels = {preset_from_string(pair[0]), preset_from_string(pair[1])};
  } catch (const ConfigError& e) {
    throw ConfigError(r.path("kernel_pair") + ": " + e.what());
  }
  if (class_of(c.kernels.excitatory) != NeuronClass::Excitatory ||
      class_of(c.kernels.inhibitory) != NeuronClass::Inhibitory)
    throw ConfigError(r.path("kernel_pair") + ": expected an excitatory then an inhibitory preset");
  r.get("presentations", c.presentations);
  std::string mode = "per_tick";
  r.get("stdp_mode", mode);
  if (mode == "per_tick") c.stdp_mode = StdpParams::Mode::PerTick;
  else if (mode == "per_presentation") c.stdp_mode = StdpParams::Mode::PerPresentation;
  else throw ConfigError(r.path("stdp_mode") + ": must be \"per_tick\" or \"per_presentation\"");
  r.get("elapsed_normalization", c.elapsed_normalization);
  r.get("settle_ms", c.settle_ms);
  r.get("classifier", c.classifier);
  r.get("svm_c_grid", c.svm_c_grid);
  r.get("cv_folds", c.cv_folds);
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    // validate() names fields under "ttsnet."; rebase onto the caller's path.
    std::string msg = e.what();
    if (msg.rfind("ttsnet.", 0) == 0) msg = where + msg.substr(6);
    else if (msg.rfind("preprocess.", 0) == 0) msg = where + msg.substr(10);
    throw ConfigError(msg);
  }
  return c;
}

namespace {

json quantizer_json(const Quantizer& q) { return {{"r1", q.r1}, {"r99", q.r99}, {"levels", q.levels}}; }

Quantizer quantizer_from(const json& j) {
  Quantizer q{j.at("r1").get<double>(), j.at("r99").get<double>(), j.at("levels").get<int>()};
  if (!(q.r1 < q.r99) || q.levels != topology::kLevels) throw DataError("model: invalid quantizer");
  return q;
}

json level_map_json(const LevelMap& m) { return {{"seed", m.seed}, {"groups", m.groups}}; }

LevelMap level_map_from(const json& j) {
  LevelMap m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.groups = j.at("groups").get<std::vector<std::array<int, topology::kNeuronsPerLevel>>>();
  if (m.groups.size() != static_cast<std::size_t>(topology::kLevels)) throw DataError("model: invalid level map");
  std::vector<int> seen(topology::kExcitatory, 0);
  for (const auto& g : m.groups)
    for (int n : g) {
      if (n < 0 || n >= topology::kExcitatory || seen[n]++) throw DataError("model: invalid level map");
    }
  return m;
}

}  // namespace

int TtsnetModel::simulation_ms(std::size_t rows) const {
  if (!config_.elapsed_normalization) return topology::kSimulationMs;
  return std::min<int>(topology::kSimulationMs, 5 * static_cast<int>(rows) + config_.settle_ms);
}

std::vector<std::vector<int>> TtsnetModel::encode(const ObservationMatrix& x, double tau) const {
  const auto series = pipeline_.partial_features(x, tau);
  std::vector<std::vector<int>> levels;
  levels.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) levels.push_back(channels_[i].quantizer.quantize(series[i]));
  return levels;
}

std::vector<FiringMap> TtsnetModel::firing_maps(const ObservationMatrix& x, double tau) const {
  const auto levels = encode(x, tau);
  std::vector<FiringMap> maps;
  maps.reserve(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i)
    maps.push_back(simulate(channels_[i].network, schedule_stimuli(levels[i], channels_[i].level_map),
                            simulation_ms(levels[i].size())));
  return maps;
}

std::vector<double> TtsnetModel::descriptor(const ObservationMatrix& x, double tau) const {
  const auto maps = firing_maps(x, tau);
  const int t = maps.empty() ? topology::kSimulationMs : maps.front().duration_ms;
  return nhnf(maps, config_.bins, static_cast<double>(t)).values;
}

Prediction TtsnetModel::predict(const ObservationMatrix& x, double tau) const {
  const auto z = descriptor_stats_.apply(descriptor(x, tau));
  const double s = classifier_score(classifier_, z);
  return {s >= 0.0 ? 1 : 0, s};
}

TtsnetModel TtsnetModel::train(const Corpus& train, const TtsnetConfig& config, std::uint64_t seed, int threads,
                               TtsnetTrainReport* report) {
  config.validate();
  if (train.events.empty()) throw DataError("ttsnet: no training events");
  require_two_classes(train, "ttsnet");

  TtsnetModel model;
  model.config_ = config;
  model.seed_ = seed;
  model.pipeline_ = FeaturePipeline::fit(train, config.preprocess);
  const std::size_t m = model.pipeline_.size();
  const std::size_t n = train.events.size();

  // Full-length resampled feature series of every training event.
  std::vector<std::vector<std::vector<double>>> series(n);
  parallel_for(n, threads, [&](std::size_t e) { series[e] = model.pipeline_.partial_features(train.events[e].observation, 1.0); });
  std::vector<int> labels(n);
  for (std::size_t e = 0; e < n; ++e) labels[e] = train.events[e].label();

  // Stage 1: quantize and train one network per feature.
  model.channels_.resize(m);
  std::vector<TrainingTrace> traces(m);
  parallel_for(m, threads, [&](std::size_t i) {
    std::vector<double> pooled;
    for (const auto& s : series) pooled.insert(pooled.end(), s[i].begin(), s[i].end());
    auto& ch = model.channels_[i];
    ch.quantizer = fit_quantizer(pooled, topology::kLevels);
    ch.level_map = map_levels(topology::kLevels, derive_seed(seed, kStreamLevelMap, i));
    ch.network = SpikingNetwork::build(config.kernels, derive_seed(seed, kStreamNetwork, i));
    std::vector<std::vector<int>> events;
    events.reserve(n);
    for (const auto& s : series) events.push_back(ch.quantizer.quantize(s[i]));
    WeightTrainingConfig wc;
    wc.presentations = config.presentations;
    wc.stdp.mode = config.stdp_mode;
    traces[i] = train_weights(ch.network, events, labels, ch.level_map, wc, derive_seed(seed, kStreamTraining, i));
  });

  // Stage 2: frozen networks produce one descriptor per training event.
  const std::size_t width = m * config.bins;
  FeatureMatrix raw(n, width);
  parallel_for(n, threads, [&](std::size_t e) {
    const auto d = model.descriptor(train.events[e].observation, 1.0);
    std::copy(d.begin(), d.end(), raw.row(e).begin());
  });
  model.descriptor_stats_ = Standardizer::fit(raw);
  const auto z = model.descriptor_stats_.apply(raw);

  double chosen_c = 0.0;
  if (config.classifier == "svm") {
    const auto grid = select_svm_c(z, labels, config.svm_c_grid, config.cv_folds,
                                   derive_seed(seed, kStreamGridSearch), threads);
    SvmConfig sc;
    sc.c = grid.best_c;
    sc.seed = derive_seed(seed, kStreamClassifier);
    LinearSvm svm(sc);
    svm.fit(z, labels);
    model.classifier_ = std::move(svm);
    chosen_c = grid.best_c;
  } else {
    NearestCentroid nc;
    nc.fit(z, labels);
    model.classifier_ = std::move(nc);
  }

  if (report) {
    report->traces = std::move(traces);
    report->train_labels = labels;
    report->train_decisions.resize(n);
    for (std::size_t e = 0; e < n; ++e) report->train_decisions[e] = classifier_decide(model.classifier_, z.row(e));
    report->train_f1 = f1(confusion(labels, report->train_decisions));
    report->chosen_c = chosen_c;
  }
  return model;
}

json TtsnetModel::to_json() const {
  json channels = json::array();
  for (const auto& ch : channels_)
    channels.push_back({{"quantizer", quantizer_json(ch.quantizer)},
                        {"level_map", level_map_json(ch.level_map)},
                        {"network", ch.network.to_json()}});
  return {{"format", "spiketurn-ttsnet"},
          {"version", kModelFormatVersion},
          {"seed", seed_},
          {"config", spiketurn::to_json(config_)},
          {"pipeline", pipeline_.to_json()},
          {"channels", channels},
          {"descriptor_stats", descriptor_stats_.to_json()},
          {"classifier", classifier_to_json(classifier_)}};
}

TtsnetModel TtsnetModel::from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "spiketurn-ttsnet") throw DataError("not a ttsnet model bundle");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw DataError("unsupported ttsnet model version " + std::to_string(j.at("version").get<int>()));
    TtsnetModel m;
    m.seed_ = j.at("seed").get<std::uint64_t>();
    m.config_ = ttsnet_config_from_json(j.at("config"), "model.config");
    m.pipeline_ = FeaturePipeline::from_json(j.at("pipeline"));
    for (const auto& c : j.at("channels")) {
      ChannelNetwork ch{quantizer_from(c.at("quantizer")), level_map_from(c.at("level_map")),
                        SpikingNetwork::from_json(c.at("network"))};
      m.channels_.push_back(std::move(ch));
    }
    m.descriptor_stats_ = Standardizer::from_json(j.at("descriptor_stats"));
    m.classifier_ = classifier_from_json(j.at("classifier"));
    if (m.channels_.size() != m.pipeline_.size()) throw DataError("model: network count differs from feature count");
    if (m.descriptor_stats_.mean.size() != m.channels_.size() * m.config_.bins)
      throw DataError("model: descriptor width differs from features x bins");
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model bundle: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed model bundle: ") + e.what());
  }
}

void TtsnetModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path.string());
  out << to_json().dump() << '\n';
}

TtsnetModel TtsnetModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

}  // namespace spiketurn
