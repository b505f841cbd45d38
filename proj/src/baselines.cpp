#include "spiketurn/baselines.hpp"

#include "spiketurn/common.hpp"
#include "spiketurn/config_json.hpp"
#include "spiketurn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace spiketurn {

using nlohmann::json;

namespace {

void check_format(const json& j, const char* format) {
  if (j.at("format").get<std::string>() != format) throw DataError(std::string("not a ") + format + " bundle");
  if (j.at("version").get<int>() != kBaselineFormatVersion)
    throw DataError(std::string("unsupported ") + format + " version");
}

template <class F>
auto parse_bundle(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed ") + what + " bundle: " + e.what());
  }
}

}  // namespace

// ------------------------------------------------------------ Gaussian HMM

void HmmBaselineConfig::validate() const {
  preprocess.validate();
  if (em.n_states < 1) throw ConfigError("hmm.n_states must be >= 1");
  if (em.restarts < 1) throw ConfigError("hmm.restarts must be >= 1");
  if (em.max_iterations < 1) throw ConfigError("hmm.max_iterations must be >= 1");
  if (!(em.tolerance >= 0.0)) throw ConfigError("hmm.tolerance must be non-negative");
  if (!(em.validation_fraction >= 0.0 && em.validation_fraction < 1.0))
    throw ConfigError("hmm.validation_fraction must lie in [0, 1)");
  if (!(variance_floor > 0.0)) throw ConfigError("hmm.variance_floor must be positive");
}

json to_json(const HmmBaselineConfig& c) {
  return {{"n_states", c.em.n_states},         {"restarts", c.em.restarts},
          {"max_iterations", c.em.max_iterations}, {"tolerance", c.em.tolerance},
          {"validation_fraction", c.em.validation_fraction}, {"variance_floor", c.variance_floor}};
}

HmmBaselineConfig hmm_baseline_config_from_json(const json& j, const std::string& where) {
  HmmBaselineConfig c;
  ConfigReader r(j, where);
  r.get("n_states", c.em.n_states);
  r.get("restarts", c.em.restarts);
  r.get("max_iterations", c.em.max_iterations);
  r.get("tolerance", c.em.tolerance);
  r.get("validation_fraction", c.em.validation_fraction);
  r.get("variance_floor", c.variance_floor);
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + std::string(e.what()).substr(3));
  }
  return c;
}

FrameSequence HmmBaseline::frames(const ObservationMatrix& x, double tau) const {
  const auto series = pipeline_.transform(slice_partial(x, tau));
  FrameSequence f;
  f.length = series.empty() ? 0 : series.front().size();
  f.dim = series.size();
  f.values.resize(f.length * f.dim);
  for (std::size_t t = 0; t < f.length; ++t)
    for (std::size_t d = 0; d < f.dim; ++d) f.values[t * f.dim + d] = series[d][t];
  return f;
}

HmmBaseline HmmBaseline::train(const Corpus& train, const HmmBaselineConfig& config, std::uint64_t seed) {
  config.validate();
  require_two_classes(train, "hmm baseline");
  HmmBaseline b;
  b.pipeline_ = FeaturePipeline::fit(train, config.preprocess);
  std::array<std::vector<FrameSequence>, 2> by_class;
  for (const auto& ev : train.events) by_class[ev.label()].push_back(b.frames(ev.observation, 1.0));
  b.keep_ = gaussian_baum_welch(by_class[0], config.em, config.variance_floor, derive_seed(seed, kStreamHmmBaseline, 0));
  b.give_ = gaussian_baum_welch(by_class[1], config.em, config.variance_floor, derive_seed(seed, kStreamHmmBaseline, 1));
  return b;
}

Prediction HmmBaseline::predict(const ObservationMatrix& x, double tau) const {
  const auto f = frames(x, tau);
  const double l0 = keep_.log_likelihood(f);
  const double l1 = give_.log_likelihood(f);
  if (l0 == l1) return {0, 0.0};  // includes both -inf
  const double s = l1 - l0;
  return {s > 0.0 ? 1 : 0, s};
}

json HmmBaseline::to_json() const {
  return {{"format", "spiketurn-hmm-baseline"}, {"version", kBaselineFormatVersion}, {"pipeline", pipeline_.to_json()},
          {"keep", keep_.to_json()},            {"give", give_.to_json()}};
}

HmmBaseline HmmBaseline::from_json(const json& j) {
  return parse_bundle("hmm baseline", [&] {
    check_format(j, "spiketurn-hmm-baseline");
    return HmmBaseline(FeaturePipeline::from_json(j.at("pipeline")), GaussianHmm::from_json(j.at("keep")),
                       GaussianHmm::from_json(j.at("give")));
  });
}

// ------------------------------------------------------------------ Ishii

void IshiiConfig::validate() const {
  if (!(movement_threshold > 0.0)) throw ConfigError("ishii.movement_threshold must be positive");
  if (rff_dim < 1) throw ConfigError("ishii.rff_dim must be >= 1");
  if (c_grid.empty() || gamma_grid.empty()) throw ConfigError("ishii grids must not be empty");
  for (double c : c_grid)
    if (!(c > 0.0)) throw ConfigError("ishii.c_grid values must be positive");
  for (double g : gamma_grid)
    if (!(g > 0.0)) throw ConfigError("ishii.gamma_grid values must be positive");
  if (cv_folds < 2) throw ConfigError("ishii.cv_folds must be >= 2");
}

json to_json(const IshiiConfig& c) {
  return {{"movement_threshold", c.movement_threshold}, {"rff_dim", c.rff_dim}, {"c_grid", c.c_grid},
          {"gamma_grid", c.gamma_grid}, {"cv_folds", c.cv_folds}};
}

IshiiConfig ishii_config_from_json(const json& j, const std::string& where) {
  IshiiConfig c;
  ConfigReader r(j, where);
  r.get("movement_threshold", c.movement_threshold);
  r.get("rff_dim", c.rff_dim);
  r.get("c_grid", c.c_grid);
  r.get("gamma_grid", c.gamma_grid);
  r.get("cv_folds", c.cv_folds);
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    throw ConfigError(msg.rfind("ishii", 0) == 0 ? where + msg.substr(5) : msg);
  }
  return c;
}

std::array<double, kIshiiStatsPerChannel> IshiiChannelStats::values() const {
  return {min, max, amp, dur, slo, mo, am, fq, movement_count, amplitude_sum, zero_crossings};
}

double ishii_scale(double value, double mean, double stddev) {
  if (!(stddev > 0.0)) throw DataError("ishii scaling needs a positive standard deviation");
  return std::clamp((value - (mean - stddev)) / (2.0 * stddev), 0.0, 1.0);
}

IshiiChannelStats ishii_channel_stats(std::span<const double> s, double sample_hz, double threshold) {
  if (s.empty()) throw DataError("ishii statistics need at least one sample");
  IshiiChannelStats st;
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  st.min = *lo;
  st.max = *hi;
  st.amp = st.max - st.min;
  st.dur = static_cast<double>(s.size()) / sample_hz;
  st.slo = st.amp / st.dur;

  double anchor = s[0];
  bool moving = false;
  double run_amp = 0.0;
  for (std::size_t t = 1; t < s.size(); ++t) {
    const double dev = std::abs(s[t] - anchor);
    if (dev > threshold) {
      moving = true;
      run_amp = std::max(run_amp, dev);
    } else if (moving) {
      st.movement_count += 1.0;
      st.amplitude_sum += run_amp;
      moving = false;
      run_amp = 0.0;
      anchor = s[t];
    } else {
      anchor = s[t];
    }
  }
  if (moving) {
    st.movement_count += 1.0;
    st.amplitude_sum += run_amp;
  }
  st.mo = st.movement_count / st.dur;
  st.am = st.movement_count > 0.0 ? st.amplitude_sum / st.movement_count : 0.0;

  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());
  int prev_sign = 0;
  for (double v : s) {
    const double d = v - mean;
    const int sign = d > 1e-12 ? 1 : (d < -1e-12 ? -1 : 0);
    if (sign == 0) continue;
    if (prev_sign != 0 && sign != prev_sign) st.zero_crossings += 1.0;
    prev_sign = sign;
  }
  st.fq = st.zero_crossings / st.dur;
  return st;
}

IshiiScaling IshiiScaling::fit(const Corpus& train) {
  const auto stats = fit_channel_stats(train);
  for (std::size_t c = 0; c < stats.constant.size(); ++c)
    if (stats.constant[c])
      throw DataError("ishii scaling: channel " + train.channel_names()[c] + " has zero variance");
  return {stats.mean, stats.stddev};
}

std::vector<double> ishii_features(const ObservationMatrix& x, const IshiiScaling& scaling, double threshold) {
  if (x.cols != scaling.mean.size()) throw DataError("ishii features: channel count mismatch");
  std::vector<double> out;
  out.reserve(x.cols * kIshiiStatsPerChannel);
  std::vector<double> scaled(x.rows);
  for (std::size_t c = 0; c < x.cols; ++c) {
    for (std::size_t r = 0; r < x.rows; ++r) scaled[r] = ishii_scale(x.at(r, c), scaling.mean[c], scaling.stddev[c]);
    const auto v = ishii_channel_stats(scaled, x.sample_hz, threshold).values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

RandomFourierFeatures::RandomFourierFeatures(std::size_t input_dim, std::size_t output_dim, double gamma,
                                             std::uint64_t seed)
    : input_dim_(input_dim), output_dim_(output_dim), gamma_(gamma), seed_(seed) {
  if (input_dim == 0 || output_dim == 0) throw ConfigError("random features need positive dimensions");
  if (!(gamma > 0.0)) throw ConfigError("random features need gamma > 0");
  // Draw standard normals first so every gamma shares the same directions.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  w_.resize(output_dim * input_dim);
  for (auto& w : w_) w = normal(rng);
  b_.resize(output_dim);
  for (auto& b : b_) b = phase(rng);
  const double scale = std::sqrt(2.0 * gamma);
  for (auto& w : w_) w *= scale;
}

std::vector<double> RandomFourierFeatures::transform(std::span<const double> x) const {
  if (x.size() != input_dim_) throw DataError("random features: input width mismatch");
  std::vector<double> out(output_dim_);
  const double norm = std::sqrt(2.0 / static_cast<double>(output_dim_));
  for (std::size_t k = 0; k < output_dim_; ++k) {
    double s = b_[k];
    for (std::size_t d = 0; d < input_dim_; ++d) s += w_[k * input_dim_ + d] * x[d];
    out[k] = norm * std::cos(s);
  }
  return out;
}

FeatureMatrix RandomFourierFeatures::transform(const FeatureMatrix& x) const {
  FeatureMatrix out(x.rows, output_dim_);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto z = transform(x.row(r));
    std::copy(z.begin(), z.end(), out.row(r).begin());
  }
  return out;
}

IshiiBaseline IshiiBaseline::train(const Corpus& train, const IshiiConfig& config, std::uint64_t seed, int threads) {
  config.validate();
  require_two_classes(train, "ishii baseline");
  IshiiBaseline b;
  b.config_ = config;
  b.channel_names_ = train.channel_names();
  b.scaling_ = IshiiScaling::fit(train);
  FeatureMatrix raw;
  std::vector<int> labels;
  for (const auto& ev : train.events) {
    raw.push_back(ishii_features(ev.observation, b.scaling_, config.movement_threshold));
    labels.push_back(ev.label());
  }
  b.feature_stats_ = Standardizer::fit(raw);
  const auto z = b.feature_stats_.apply(raw);
  const std::uint64_t rff_seed = derive_seed(seed, kStreamIshii, 0);
  const auto dim = static_cast<std::size_t>(config.rff_dim);

  // Grid over (gamma, C): per gamma, one feature map shared by all C values.
  const auto folds = stratified_folds(labels, config.cv_folds, derive_seed(seed, kStreamIshii, 1));
  const std::size_t nc = config.c_grid.size(), ng = config.gamma_grid.size();
  const auto nf = static_cast<std::size_t>(config.cv_folds);
  std::vector<FeatureMatrix> mapped(ng);
  parallel_for(ng, threads, [&](std::size_t g) { mapped[g] = RandomFourierFeatures(z.cols, dim, config.gamma_grid[g], rff_seed).transform(z); });
  std::vector<double> f1s(ng * nc * nf, 0.0);
  parallel_for(f1s.size(), threads, [&](std::size_t job) {
    const std::size_t g = job / (nc * nf), c = (job / nf) % nc;
    const int f = static_cast<int>(job % nf);
    std::vector<std::size_t> tr;
    std::vector<int> ytr;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (folds[i] != f) {
        tr.push_back(i);
        ytr.push_back(labels[i]);
      }
    if (std::count(ytr.begin(), ytr.end(), 1) == 0 || std::count(ytr.begin(), ytr.end(), 0) == 0) return;
    SvmConfig sc;
    sc.c = config.c_grid[c];
    sc.seed = derive_seed(seed, kStreamIshii, 2 + job);
    LinearSvm svm(sc);
    svm.fit(mapped[g].select(tr), ytr);
    Confusion conf;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (folds[i] == f) conf.add(labels[i], svm.decide(mapped[g].row(i)));
    f1s[job] = f1(conf);
  });
  double best = -1.0;
  std::size_t best_g = 0, best_c = 0;
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t c = 0; c < nc; ++c) {
      double s = 0.0;
      for (std::size_t f = 0; f < nf; ++f) s += f1s[(g * nc + c) * nf + f];
      if (s > best) {
        best = s;
        best_g = g;
        best_c = c;
      }
    }
  b.rff_ = RandomFourierFeatures(z.cols, dim, config.gamma_grid[best_g], rff_seed);
  SvmConfig sc;
  sc.c = config.c_grid[best_c];
  sc.seed = derive_seed(seed, kStreamIshii, 0xffff);
  b.svm_ = LinearSvm(sc);
  b.svm_.fit(mapped[best_g], labels);
  return b;
}

Prediction IshiiBaseline::predict(const ObservationMatrix& x, double tau) const {
  if (x.channel_names != channel_names_) throw DataError("observation channels do not match the training channels");
  const auto f = ishii_features(slice_partial(x, tau), scaling_, config_.movement_threshold);
  const double s = svm_.score(rff_.transform(feature_stats_.apply(f)));
  return {s >= 0.0 ? 1 : 0, s};
}

json IshiiBaseline::to_json() const {
  return {{"format", "spiketurn-ishii-baseline"},
          {"version", kBaselineFormatVersion},
          {"config", spiketurn::to_json(config_)},
          {"channels", channel_names_},
          {"scaling_mean", scaling_.mean},
          {"scaling_stddev", scaling_.stddev},
          {"feature_stats", feature_stats_.to_json()},
          {"rff", {{"input_dim", rff_.input_dim()}, {"output_dim", rff_.output_dim()}, {"gamma", rff_.gamma()},
                   {"seed", rff_.seed()}}},
          {"svm", svm_.to_json()}};
}

IshiiBaseline IshiiBaseline::from_json(const json& j) {
  return parse_bundle("ishii baseline", [&] {
    check_format(j, "spiketurn-ishii-baseline");
    IshiiBaseline b;
    b.config_ = ishii_config_from_json(j.at("config"));
    b.channel_names_ = j.at("channels").get<std::vector<std::string>>();
    b.scaling_.mean = j.at("scaling_mean").get<std::vector<double>>();
    b.scaling_.stddev = j.at("scaling_stddev").get<std::vector<double>>();
    b.feature_stats_ = Standardizer::from_json(j.at("feature_stats"));
    const auto& r = j.at("rff");
    b.rff_ = RandomFourierFeatures(r.at("input_dim").get<std::size_t>(), r.at("output_dim").get<std::size_t>(),
                                   r.at("gamma").get<double>(), r.at("seed").get<std::uint64_t>());
    b.svm_ = LinearSvm::from_json(j.at("svm"));
    return b;
  });
}

// -------------------------------------------------------------- SNN-PNG

void PngConfig::validate() const {
  if (templates_per_class < 1) throw ConfigError("png.templates_per_class must be >= 1");
  if (!(j_eps > 0.0 && j_eps <= 1.0)) throw ConfigError("png.j_eps must lie in (0, 1]");
}

json to_json(const PngConfig& c) { return {{"templates_per_class", c.templates_per_class}, {"j_eps", c.j_eps}}; }

PngConfig png_config_from_json(const json& j, const std::string& where) {
  PngConfig c;
  ConfigReader r(j, where);
  r.get("templates_per_class", c.templates_per_class);
  r.get("j_eps", c.j_eps);
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + std::string(e.what()).substr(3));
  }
  return c;
}

void PngBaseline::pack() {
  for (int q = 0; q < 2; ++q) {
    packed_[q].clear();
    for (const auto& tmpl : groups_[q]) {
      std::vector<PackedPng> p;
      for (const auto& g : tmpl) p.emplace_back(g);
      packed_[q].push_back(std::move(p));
    }
  }
}

PngBaseline PngBaseline::train(const Corpus& train, const TtsnetModel& snn, const PngConfig& config,
                               std::uint64_t seed, int threads) {
  config.validate();
  PngBaseline b;
  b.config_ = config;
  const auto k = static_cast<std::size_t>(config.templates_per_class);
  for (int q = 0; q < 2; ++q) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < train.events.size(); ++i)
      if (train.events[i].label() == q) idx.push_back(i);
    if (idx.size() < k)
      throw DataError("png baseline: class " + std::to_string(q) + " has " + std::to_string(idx.size()) +
                      " training events, fewer than " + std::to_string(k) + " templates");
    std::mt19937_64 rng(derive_seed(seed, kStreamPng, static_cast<std::uint64_t>(q)));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    b.groups_[q].resize(k);
    parallel_for(k, threads, [&](std::size_t t) {
      for (const auto& map : snn.firing_maps(train.events[idx[t]].observation, 1.0))
        b.groups_[q][t].push_back(extract_png(map));
    });
    for (std::size_t i : idx) b.ids_[q].push_back(train.events[i].event_id);
  }
  b.pack();
  return b;
}

Prediction PngBaseline::predict_groups(const std::vector<PngGroup>& groups) const {
  std::vector<PackedPng> packed;
  packed.reserve(groups.size());
  for (const auto& g : groups) packed.emplace_back(g);
  std::array<double, 2> mean{0.0, 0.0};
  for (int q = 0; q < 2; ++q) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& tmpl : packed_[q]) {
      if (tmpl.size() != packed.size()) throw DataError("png baseline: network count mismatch");
      for (std::size_t i = 0; i < packed.size(); ++i, ++count)
        if (packed[i].size() > 0 && tmpl[i].size() > 0) sum += lcs_similarity(packed[i], tmpl[i], config_.j_eps);
    }
    mean[q] = count ? sum / static_cast<double>(count) : 0.0;
  }
  const double s = mean[1] - mean[0];
  return {s > 0.0 ? 1 : 0, s};
}

Prediction PngBaseline::predict(const TtsnetModel& snn, const ObservationMatrix& x, double tau) const {
  std::vector<PngGroup> groups;
  for (const auto& map : snn.firing_maps(x, tau)) groups.push_back(extract_png(map));
  return predict_groups(groups);
}

json PngBaseline::to_json() const {
  json j = {{"format", "spiketurn-png-baseline"}, {"version", kBaselineFormatVersion},
            {"config", spiketurn::to_json(config_)}};
  for (int q = 0; q < 2; ++q) {
    json bank = json::array();
    for (std::size_t t = 0; t < groups_[q].size(); ++t) bank.push_back({{"event_id", ids_[q][t]}, {"groups", groups_[q][t]}});
    j[q == 1 ? "give" : "keep"] = bank;
  }
  return j;
}

PngBaseline PngBaseline::from_json(const json& j) {
  return parse_bundle("png baseline", [&] {
    check_format(j, "spiketurn-png-baseline");
    PngBaseline b;
    b.config_ = png_config_from_json(j.at("config"));
    for (int q = 0; q < 2; ++q)
      for (const auto& t : j.at(q == 1 ? "give" : "keep")) {
        b.ids_[q].push_back(t.at("event_id").get<std::string>());
        b.groups_[q].push_back(t.at("groups").get<std::vector<PngGroup>>());
      }
    b.pack();
    return b;
  });
}

}  // namespace spiketurn
