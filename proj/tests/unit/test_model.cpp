#include "spiketurn/common.hpp"
#include "spiketurn/metrics.hpp"
#include "spiketurn/model.hpp"
#include "spiketurn/pipeline.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace spiketurn;

namespace {

struct Trained {
  std::vector<Fold> folds;
  TtsnetModel model;
  TtsnetTrainReport report;
};

const Trained& trained() {
  static const Trained t = [] {
    Trained out;
    out.folds = loso_split(testing::small_corpus());
    out.model = TtsnetModel::train(out.folds[0].train, testing::small_ttsnet(), 3, 1, &out.report);
    return out;
  }();
  return t;
}

}  // namespace

TEST_CASE("feature pipeline") {
  const auto corpus = testing::small_corpus();
  PreprocessConfig cfg;
  cfg.num_features = 4;
  const auto p = FeaturePipeline::fit(corpus, cfg);
  CHECK(p.size() == 4);
  CHECK(FeaturePipeline::from_json(p.to_json()) == p);
  const auto& x = corpus.events[0].observation;
  const auto full = p.partial_features(x, 1.0);
  REQUIRE(full.size() == 4);
  for (const auto& f : full) CHECK(f.size() == cfg.resample_len);
  // A prefix keeps the full-event grid points that fall inside it, and
  // nothing after the prefix influences them.
  for (double tau : {0.1, 0.35, 0.7}) {
    const std::size_t kept = partial_rows(x.rows, tau);
    std::size_t inside = 0;
    for (std::size_t k = 0; k < cfg.resample_len; ++k)
      if (static_cast<double>(k) * static_cast<double>(x.rows - 1) / static_cast<double>(cfg.resample_len - 1) <=
          static_cast<double>(kept - 1) + 1e-9)
        ++inside;
    ObservationMatrix tampered = x;
    for (std::size_t r = kept; r < x.rows; ++r)
      for (std::size_t c = 0; c < x.cols; ++c) tampered.at(r, c) = -50.0;
    const auto part = p.partial_features(x, tau);
    CHECK(p.partial_features(tampered, tau) == part);
    for (const auto& f : part) CHECK(f.size() == inside);
  }
  CHECK(p.partial_features(x, 1.0) == p.partial_features(slice_partial(x, 1.0), 1.0));
  ObservationMatrix renamed = x;
  renamed.channel_names[0] = "other";
  CHECK_THROWS_AS(p.transform(renamed), DataError);
}

TEST_CASE("ttsnet training is deterministic and thread-invariant") {
  const auto& t = trained();
  const auto again = TtsnetModel::train(t.folds[0].train, testing::small_ttsnet(), 3, 3);
  CHECK(again.to_json() == t.model.to_json());
  CHECK(t.model.channels().size() == 3);
  CHECK(t.report.traces.size() == 3);
  CHECK(t.report.train_labels.size() == t.folds[0].train.events.size());
  CHECK(t.report.train_f1 >= 0.0);
  const auto other = TtsnetModel::train(t.folds[0].train, testing::small_ttsnet(), 4);
  CHECK(other.to_json() != t.model.to_json());
}

TEST_CASE("ttsnet predictions") {
  const auto& t = trained();
  const auto& m = t.model;
  CHECK(m.simulation_ms(10) == 100);
  CHECK(m.simulation_ms(40) == 250);
  CHECK(m.simulation_ms(1) == 55);
  for (const auto& ev : t.folds[0].test.events) {
    const auto& x = ev.observation;
    CHECK(m.descriptor(x, 0.5).size() == 3 * m.config().bins);
    const auto full = m.predict(x, 1.0);
    CHECK(std::isfinite(full.score));
    CHECK(full.label == (full.score >= 0.0 ? 1 : 0));
    CHECK(m.predict(slice_partial(x, 1.0), 1.0).score == full.score);
    // Nothing past the observed prefix influences a partial prediction.
    for (double tau : {0.1, 0.5}) {
      ObservationMatrix tampered = x;
      for (std::size_t r = partial_rows(x.rows, tau); r < x.rows; ++r)
        for (std::size_t c = 0; c < x.cols; ++c) tampered.at(r, c) += 100.0;
      CHECK(m.predict(tampered, tau).score == m.predict(x, tau).score);
      CHECK(m.encode(tampered, tau) == m.encode(x, tau));
    }
  }
  ObservationMatrix zero = t.folds[0].test.events[0].observation;
  std::fill(zero.data.begin(), zero.data.end(), 0.0);
  for (double tau : {0.1, 1.0}) CHECK(std::isfinite(m.predict(zero, tau).score));
  CHECK_THROWS_AS(m.predict(zero, 0.0), ConfigError);
}

TEST_CASE("ttsnet model persistence") {
  const auto& t = trained();
  const auto dir = testing::scratch_dir("model");
  t.model.save(dir / "m.json");
  const auto loaded = TtsnetModel::load(dir / "m.json");
  CHECK(loaded.to_json() == t.model.to_json());
  for (const auto& ev : t.folds[0].test.events)
    CHECK(loaded.predict(ev.observation, 0.3).score == t.model.predict(ev.observation, 0.3).score);

  auto j = t.model.to_json();
  j["version"] = 99;
  CHECK_THROWS_AS(TtsnetModel::from_json(j), DataError);
  j = t.model.to_json();
  j["channels"][0]["quantizer"]["levels"] = 12;
  CHECK_THROWS_AS(TtsnetModel::from_json(j), DataError);
  CHECK_THROWS_AS(TtsnetModel::load(dir / "missing.json"), DataError);
}

TEST_CASE("ttsnet rejects unusable training data") {
  auto corpus = testing::small_corpus(2, 12);
  for (auto& ev : corpus.events) ev.kind = TurnKind::Keep;
  CHECK_THROWS_AS(TtsnetModel::train(corpus, testing::small_ttsnet(), 1), DataError);
  auto cfg = testing::small_ttsnet();
  cfg.classifier = "forest";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("ttsnet config json") {
  auto cfg = testing::small_ttsnet();
  cfg.classifier = "centroid";
  const auto j = to_json(cfg);
  CHECK(to_json(ttsnet_config_from_json(j)) == j);
  auto bad = j;
  bad["presentation"] = 3;
  CHECK_THROWS_WITH_AS(ttsnet_config_from_json(bad), doctest::Contains("ttsnet.presentation"), ConfigError);
  bad = j;
  bad["bins"] = "many";
  CHECK_THROWS_WITH_AS(ttsnet_config_from_json(bad), doctest::Contains("ttsnet.bins"), ConfigError);
}

TEST_CASE("nearest-centroid ttsnet variant") {
  const auto& t = trained();
  auto cfg = testing::small_ttsnet();
  cfg.classifier = "centroid";
  const auto m = TtsnetModel::train(t.folds[0].train, cfg, 3);
  CHECK(std::holds_alternative<NearestCentroid>(m.classifier()));
  CHECK(TtsnetModel::from_json(m.to_json()).to_json() == m.to_json());
}
