#include "spiketurn/baselines.hpp"
#include "spiketurn/common.hpp"
#include "spiketurn/metrics.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace spiketurn;

TEST_CASE("ishii channel statistics") {
  const std::vector<double> s{0.0, 0.0, 0.5, 0.6, 0.0, 0.0, 0.3};
  const auto st = ishii_channel_stats(s, 10.0, 0.1);
  CHECK(st.min == 0.0);
  CHECK(st.max == 0.6);
  CHECK(st.amp == 0.6);
  CHECK(st.dur == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(st.slo == doctest::Approx(0.6 / 0.7).epsilon(1e-12));
  CHECK(st.movement_count == 2.0);  // one closed run, one still open at the end
  CHECK(st.amplitude_sum == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(st.am == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(st.mo == doctest::Approx(2.0 / 0.7).epsilon(1e-12));
  CHECK(st.zero_crossings == 3.0);
  CHECK(st.fq == doctest::Approx(3.0 / 0.7).epsilon(1e-12));
  CHECK(st.values().size() == kIshiiStatsPerChannel);

  // A slow drift below the threshold per step never counts as movement.
  std::vector<double> drift(50);
  for (std::size_t i = 0; i < drift.size(); ++i) drift[i] = 0.05 * static_cast<double>(i);
  CHECK(ishii_channel_stats(drift, 20.0, 0.1).movement_count == 0.0);
  std::vector<double> wide(80, 0.0);
  wide[40] = 2.0;
  CHECK(ishii_channel_stats(wide, 20.0, 0.1).slo == 0.5);  // AMP 2 over 4 s

  const auto flat = ishii_channel_stats(std::vector<double>(10, 0.4), 20.0, 0.1);
  CHECK(flat.min == flat.max);
  CHECK(flat.amp == 0.0);
  CHECK(flat.slo == 0.0);
  CHECK(flat.mo == 0.0);
  CHECK(flat.am == 0.0);
  CHECK(flat.fq == 0.0);
}

TEST_CASE("ishii scaling") {
  CHECK(ishii_scale(1.0, 2.0, 1.0) == 0.0);
  CHECK(ishii_scale(3.0, 2.0, 1.0) == 1.0);
  CHECK(ishii_scale(2.0, 2.0, 1.0) == 0.5);
  CHECK(ishii_scale(-7.0, 2.0, 1.0) == 0.0);
  CHECK(ishii_scale(9.0, 2.0, 1.0) == 1.0);
  CHECK_THROWS_AS(ishii_scale(1.0, 0.0, 0.0), DataError);
}

TEST_CASE("random fourier features approximate the rbf kernel") {
  const double gamma = 0.3;
  RandomFourierFeatures rff(3, 20000, gamma, 17);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(3), y(3);
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      x[k] = normal(rng);
      y[k] = normal(rng);
      d2 += (x[k] - y[k]) * (x[k] - y[k]);
    }
    const auto zx = rff.transform(x), zy = rff.transform(y);
    double dot = 0.0;
    for (std::size_t i = 0; i < zx.size(); ++i) dot += zx[i] * zy[i];
    CHECK(std::abs(dot - std::exp(-gamma * d2)) < 0.05);
  }
  RandomFourierFeatures again(3, 20000, gamma, 17);
  CHECK(again.transform(std::vector<double>{1.0, 2.0, 3.0}) == rff.transform(std::vector<double>{1.0, 2.0, 3.0}));
}

TEST_CASE("gaussian hmm baseline") {
  const auto corpus = testing::small_corpus();
  const auto folds = loso_split(corpus);
  HmmBaselineConfig cfg;
  cfg.preprocess.num_features = 3;
  cfg.em.restarts = 2;
  const auto a = HmmBaseline::train(folds[0].train, cfg, 3);
  const auto b = HmmBaseline::train(folds[0].train, cfg, 3);
  const auto loaded = HmmBaseline::from_json(a.to_json());
  CHECK_NOTHROW(a.model(0).validate());
  CHECK_NOTHROW(a.model(1).validate());
  Confusion conf;
  for (const auto& ev : folds[0].test.events)
    for (double tau : {0.1, 0.5, 1.0}) {
      const auto p = a.predict(ev.observation, tau);
      CHECK(std::isfinite(p.score));
      CHECK(p.label == (p.score > 0.0 ? 1 : 0));
      CHECK(b.predict(ev.observation, tau).score == p.score);
      CHECK(loaded.predict(ev.observation, tau).score == p.score);
      if (tau == 1.0) conf.add(ev.label(), p.label);
    }
  CHECK(f1(conf) > 0.5);
  CHECK(a.frames(folds[0].test.events[0].observation, 1.0).dim == 3);

  // Identical class models always tie, and ties go to Keep.
  const HmmBaseline tied(a.pipeline(), a.model(0), a.model(0));
  for (const auto& ev : folds[0].test.events) {
    const auto p = tied.predict(ev.observation, 0.6);
    CHECK(p.score == 0.0);
    CHECK(p.label == 0);
  }
}

TEST_CASE("ishii baseline") {
  const auto corpus = testing::small_corpus();
  const auto folds = loso_split(corpus);
  IshiiConfig cfg;
  cfg.rff_dim = 100;
  cfg.c_grid = {1.0, 10.0};
  cfg.gamma_grid = {0.01};
  cfg.cv_folds = 3;
  const auto a = IshiiBaseline::train(folds[1].train, cfg, 4, 1);
  const auto b = IshiiBaseline::train(folds[1].train, cfg, 4, 3);
  const auto loaded = IshiiBaseline::from_json(a.to_json());
  CHECK(a.chosen_gamma() == 0.01);
  for (const auto& ev : folds[1].test.events)
    for (double tau : {0.2, 1.0}) {
      const auto p = a.predict(ev.observation, tau);
      CHECK(b.predict(ev.observation, tau).score == p.score);
      CHECK(loaded.predict(ev.observation, tau).score == p.score);
    }
  IshiiConfig bad = cfg;
  bad.rff_dim = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("png baseline scoring") {
  const auto corpus = testing::small_corpus();
  const auto folds = loso_split(corpus);
  const auto snn = TtsnetModel::train(folds[0].train, testing::small_ttsnet(), 2);
  PngConfig cfg;
  cfg.templates_per_class = 4;
  const auto png = PngBaseline::train(folds[0].train, snn, cfg, 6);
  CHECK(png.bank_size(0) == 4);
  CHECK(png.bank_size(1) == 4);
  const auto loaded = PngBaseline::from_json(png.to_json());
  CHECK(loaded.template_ids(1) == png.template_ids(1));

  // Similarities lie in [0, 1], so the class difference lies in [-1, 1].
  for (const auto& ev : folds[0].test.events) {
    const auto p = png.predict(snn, ev.observation, 0.5);
    CHECK(p.score >= -1.0);
    CHECK(p.score <= 1.0);
    CHECK(p.label == (p.score > 0.0 ? 1 : 0));
    CHECK(loaded.predict(snn, ev.observation, 0.5).score == p.score);
  }

  // A Give template replayed in full matches itself exactly.
  for (const auto& id : png.template_ids(1)) {
    const auto it = std::find_if(folds[0].train.events.begin(), folds[0].train.events.end(),
                                 [&](const TurnEvent& e) { return e.event_id == id; });
    REQUIRE(it != folds[0].train.events.end());
    const auto p = png.predict(snn, it->observation, 1.0);
    CHECK(p.label == 1);
  }

  // Empty groups contribute similarity 0 to both classes.
  const std::vector<PngGroup> empty(snn.channels().size());
  const auto e = png.predict_groups(empty);
  CHECK(e.score == 0.0);
  CHECK(e.label == 0);
  CHECK_THROWS_AS(png.predict_groups(std::vector<PngGroup>(1)), DataError);

  PngConfig too_many = cfg;
  too_many.templates_per_class = 1000;
  CHECK_THROWS_AS(PngBaseline::train(folds[0].train, snn, too_many, 6), DataError);
}
