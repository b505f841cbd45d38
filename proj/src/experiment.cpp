#include "spiketurn/experiment.hpp"

#include "spiketurn/common.hpp"
#include "spiketurn/config_json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace spiketurn {

using nlohmann::json;
namespace fs = std::filesystem;

// ----------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("experiment.methods must not be empty");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    if (std::find(kMethodNames.begin(), kMethodNames.end(), m) == kMethodNames.end())
      throw ConfigError("experiment.methods: unknown method '" + m + "'");
    if (!seen.insert(m).second) throw ConfigError("experiment.methods: duplicate method '" + m + "'");
  }
  if (!corpus) synthetic.validate();
  ttsnet.validate();
  hmm.validate();
  ishii.validate();
  png.validate();
  objects.validate();
  if (!(rasters.tau > 0.0 && rasters.tau <= 1.0)) throw ConfigError("experiment.rasters.tau must lie in (0, 1]");
}

json to_json(const ExperimentConfig& c) {
  json j = {{"seed", c.seed},
            {"methods", c.methods},
            {"ttsnet", to_json(c.ttsnet)},
            {"hmm", to_json(c.hmm)},
            {"ishii", to_json(c.ishii)},
            {"png", to_json(c.png)},
            {"evaluate_objects", c.evaluate_objects},
            {"objects", to_json(c.objects)},
            {"rasters", {{"event_ids", c.rasters.event_ids}, {"tau", c.rasters.tau}}}};
  if (c.corpus) j["corpus"] = c.corpus->string();
  if (c.objects_csv) j["objects_csv"] = c.objects_csv->string();
  if (!c.corpus) j["synthetic"] = c.synthetic;
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  ConfigReader r(j, "experiment");
  r.get("seed", c.seed);
  if (r.has("corpus")) {
    std::string p;
    r.get("corpus", p);
    c.corpus = p;
  }
  if (r.has("objects_csv")) {
    std::string p;
    r.get("objects_csv", p);
    c.objects_csv = p;
  }
  if (const auto* s = r.child("synthetic")) c.synthetic = synthetic_config_from_json(*s, "experiment.synthetic");
  r.get("methods", c.methods);
  if (const auto* s = r.child("ttsnet")) c.ttsnet = ttsnet_config_from_json(*s, "experiment.ttsnet");
  if (const auto* s = r.child("hmm")) c.hmm = hmm_baseline_config_from_json(*s, "experiment.hmm");
  if (const auto* s = r.child("ishii")) c.ishii = ishii_config_from_json(*s, "experiment.ishii");
  if (const auto* s = r.child("png")) c.png = png_config_from_json(*s, "experiment.png");
  r.get("evaluate_objects", c.evaluate_objects);
  if (const auto* s = r.child("objects")) c.objects = object_config_from_json(*s, "experiment.objects");
  if (const auto* s = r.child("rasters")) {
    ConfigReader rr(*s, "experiment.rasters");
    rr.get("event_ids", c.rasters.event_ids);
    rr.get("tau", c.rasters.tau);
    rr.finish();
  }
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  auto c = experiment_config_from_json(j);
  const auto base = path.parent_path();
  if (c.corpus && c.corpus->is_relative()) c.corpus = base / *c.corpus;
  if (c.objects_csv && c.objects_csv->is_relative()) c.objects_csv = base / *c.objects_csv;
  return c;
}

Corpus load_experiment_corpus(const ExperimentConfig& config) {
  if (!config.corpus) return generate_synthetic(config.synthetic, config.seed);
  Corpus corpus = load_corpus(*config.corpus);
  if (config.objects_csv) {
    corpus.trials = load_object_sequences(*config.objects_csv, config.objects.n_objects);
    corpus.index_subjects();
  }
  return corpus;
}

// ------------------------------------------------------------- evaluation

void write_predictions_csv(const std::vector<PredictionRecord>& rows, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "event_id,tau,label,pred,score\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.1f,%d,%d,%.9g\n", r.tau, r.label, r.pred, r.score);
    out << r.event_id << buf;
  }
}

FoldReport evaluate_fold(const Predictor& predict, const std::vector<TurnEvent>& test,
                         const std::vector<double>& taus) {
  if (test.empty()) throw DataError("evaluation needs at least one test event");
  FoldReport rep;
  rep.confusion.resize(taus.size());
  for (const auto& ev : test)
    for (std::size_t k = 0; k < taus.size(); ++k) {
      const auto p = predict(ev.observation, taus[k]);
      rep.confusion[k].add(ev.label(), p.label);
      rep.predictions.push_back({ev.event_id, taus[k], ev.label(), p.label, p.score});
    }
  for (const auto& c : rep.confusion) rep.f1.push_back(f1(c));
  return rep;
}

EarlyCurve f1_curve(const Predictor& predict, const std::vector<TurnEvent>& test, const std::vector<double>& taus) {
  EarlyCurve c;
  c.taus = taus;
  c.f1_values = evaluate_fold(predict, test, taus).f1;
  c.auc = auc(c);
  return c;
}

const MethodReport* ExperimentReport::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.method == name) return &m;
  return nullptr;
}

void write_curve_csv(const MethodReport& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "tau,f1_mean,f1_std\n";
  const auto taus = default_taus();
  char buf[96];
  for (std::size_t k = 0; k < taus.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.1f,%.6f,%.6f\n", taus[k], report.f1_mean[k], report.f1_std[k]);
    out << buf;
  }
}

void dump_rasters(const TtsnetModel& model, const TurnEvent& event, double tau, const fs::path& dir) {
  fs::create_directories(dir);
  const auto maps = model.firing_maps(event.observation, tau);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "_net%02zu.csv", i);
    write_raster_csv(maps[i], dir / (event.event_id + name));
  }
}

namespace {

struct FoldOutput {
  std::map<std::string, FoldReport> reports;
  double ttsnet_train_f1{0.0};
  std::vector<std::pair<std::string, std::vector<FiringMap>>> rasters;
};

bool wants(const ExperimentConfig& c, const char* m) {
  return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end();
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const Corpus& corpus, const fs::path& out_dir,
                                int threads) {
  config.validate();
  corpus.validate();
  const auto folds = loso_split(corpus);
  const auto taus = default_taus();
  const std::set<std::string> raster_ids(config.rasters.event_ids.begin(), config.rasters.event_ids.end());
  for (const auto& id : raster_ids)
    if (std::none_of(corpus.events.begin(), corpus.events.end(), [&](const TurnEvent& e) { return e.event_id == id; }))
      throw ConfigError("experiment.rasters.event_ids: unknown event '" + id + "'");

  const bool need_ttsnet = wants(config, "ttsnet") || wants(config, "png") || !raster_ids.empty();
  std::vector<FoldOutput> out(folds.size());
  parallel_for(folds.size(), threads, [&](std::size_t f) {
    const auto& fold = folds[f];
    const auto& test = fold.test.events;
    if (test.empty()) return;
    const std::uint64_t seed = derive_seed(config.seed, 0x100 + f);
    auto& o = out[f];
    std::optional<TtsnetModel> ttsnet;
    if (need_ttsnet) {
      TtsnetTrainReport rep;
      ttsnet = TtsnetModel::train(fold.train, config.ttsnet, seed, 1, &rep);
      o.ttsnet_train_f1 = rep.train_f1;
      for (const auto& ev : test)
        if (raster_ids.count(ev.event_id)) o.rasters.emplace_back(ev.event_id, ttsnet->firing_maps(ev.observation, config.rasters.tau));
    }
    for (const auto& m : config.methods) {
      Predictor predict;
      std::optional<HmmBaseline> hmm;
      std::optional<IshiiBaseline> ishii;
      std::optional<PngBaseline> png;
      if (m == "ttsnet") {
        predict = [&](const ObservationMatrix& x, double tau) { return ttsnet->predict(x, tau); };
      } else if (m == "always_give") {
        predict = [](const ObservationMatrix&, double) { return Prediction{1, 1.0}; };
      } else if (m == "hmm") {
        hmm = HmmBaseline::train(fold.train, config.hmm, seed);
        predict = [&](const ObservationMatrix& x, double tau) { return hmm->predict(x, tau); };
      } else if (m == "ishii") {
        ishii = IshiiBaseline::train(fold.train, config.ishii, seed);
        predict = [&](const ObservationMatrix& x, double tau) { return ishii->predict(x, tau); };
      } else if (m == "png") {
        png = PngBaseline::train(fold.train, *ttsnet, config.png, seed);
        predict = [&](const ObservationMatrix& x, double tau) { return png->predict(*ttsnet, x, tau); };
      }
      auto rep = evaluate_fold(predict, test, taus);
      rep.held_out_subject = fold.held_out_subject;
      o.reports.emplace(m, std::move(rep));
    }
  });

  ExperimentReport report;
  for (const auto& m : config.methods) {
    MethodReport mr;
    mr.method = m;
    for (std::size_t f = 0; f < folds.size(); ++f)
      if (out[f].reports.count(m)) mr.folds.push_back(out[f].reports.at(m));
    mr.f1_mean.assign(taus.size(), 0.0);
    mr.f1_std.assign(taus.size(), 0.0);
    const double n = static_cast<double>(mr.folds.size());
    for (std::size_t k = 0; k < taus.size(); ++k) {
      for (const auto& fr : mr.folds) mr.f1_mean[k] += fr.f1[k];
      mr.f1_mean[k] /= n;
      for (const auto& fr : mr.folds) mr.f1_std[k] += (fr.f1[k] - mr.f1_mean[k]) * (fr.f1[k] - mr.f1_mean[k]);
      mr.f1_std[k] = std::sqrt(mr.f1_std[k] / n);
    }
    mr.auc = auc(mr.f1_mean);
    report.methods.push_back(std::move(mr));
  }
  if (need_ttsnet)
    for (const auto& o : out) report.ttsnet_train_f1.push_back(o.ttsnet_train_f1);
  if (config.evaluate_objects && !corpus.trials.empty())
    report.objects = evaluate_objects(corpus, config.objects, derive_seed(config.seed, kStreamObjects), threads);

  // Summary: numbers rounded to 6 decimals so the file is stable and readable.
  json methods = json::object();
  for (const auto& mr : report.methods) {
    json fold_f1 = json::array();
    for (const auto& fr : mr.folds) {
      json row = json::array();
      for (double v : fr.f1) row.push_back(round6(v));
      fold_f1.push_back({{"subject", fr.held_out_subject}, {"f1", row}});
    }
    json mean = json::array(), sd = json::array();
    for (std::size_t k = 0; k < taus.size(); ++k) {
      mean.push_back(round6(mr.f1_mean[k]));
      sd.push_back(round6(mr.f1_std[k]));
    }
    methods[mr.method] = {{"auc", round6(mr.auc)}, {"f1_mean", mean}, {"f1_std", sd}, {"folds", fold_f1}};
  }
  json summary = {{"format", "spiketurn-summary"},
                  {"version", 1},
                  {"seed", config.seed},
                  {"n_events", corpus.events.size()},
                  {"n_subjects", corpus.subjects.size()},
                  {"taus", taus},
                  {"methods", methods}};
  if (!report.ttsnet_train_f1.empty()) {
    json tf = json::array();
    for (double v : report.ttsnet_train_f1) tf.push_back(round6(v));
    summary["ttsnet_train_f1"] = tf;
  }
  if (!report.objects.empty()) {
    std::vector<double> h, b, r;
    json per_fold = json::array();
    for (const auto& fr : report.objects) {
      h.push_back(fr.hmm_f1);
      b.push_back(fr.bigram_f1);
      r.push_back(fr.random_f1);
      per_fold.push_back({{"subject", fr.held_out_subject},
                          {"hmm", round6(fr.hmm_f1)},
                          {"bigram", round6(fr.bigram_f1)},
                          {"random", round6(fr.random_f1)}});
    }
    auto entry = [](const std::vector<double>& v) {
      return json{{"median", round6(median(v))}, {"mad", round6(mad(v))}, {"table", format_median_mad(v)}};
    };
    summary["objects"] = {{"weighted_f1", {{"hmm", entry(h)}, {"bigram", entry(b)}, {"random", entry(r)}}},
                          {"chance", round6(1.0 / config.objects.n_objects)},
                          {"folds", per_fold}};
  }
  report.summary = summary;

  if (out_dir.empty()) return report;
  fs::create_directories(out_dir / "predictions");
  fs::create_directories(out_dir / "curves");
  for (const auto& mr : report.methods) {
    write_curve_csv(mr, out_dir / "curves" / (mr.method + ".csv"));
    for (const auto& fr : mr.folds)
      write_predictions_csv(fr.predictions, out_dir / "predictions" / (mr.method + "_" + fr.held_out_subject + ".csv"));
  }
  if (!report.objects.empty()) {
    std::vector<ObjectStepPrediction> all;
    for (const auto& fr : report.objects) all.insert(all.end(), fr.predictions.begin(), fr.predictions.end());
    write_object_predictions(all, config.objects.n_objects, out_dir / "objects_predictions.csv");
    std::ofstream table(out_dir / "objects_table.txt");
    table << "method\tweighted F1 (median ± MAD over folds)\n";
    for (const char* name : {"hmm", "bigram", "random"})
      table << name << '\t' << summary["objects"]["weighted_f1"][name]["table"].get<std::string>() << '\n';
  }
  for (const auto& o : out)
    for (const auto& [id, maps] : o.rasters) {
      fs::create_directories(out_dir / "rasters");
      for (std::size_t i = 0; i < maps.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "_net%02zu.csv", i);
        write_raster_csv(maps[i], out_dir / "rasters" / (id + name));
      }
    }
  std::ofstream(out_dir / "summary.json") << summary.dump(2) << '\n';
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const fs::path& out_dir, int threads) {
  return run_experiment(config, load_experiment_corpus(config), out_dir, threads);
}

}  // namespace spiketurn
