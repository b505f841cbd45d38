// spiketurn: data generation, training, prediction and evaluation from the shell.
#include "spiketurn/common.hpp"
#include "spiketurn/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spiketurn;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out_dir = ".";
  int threads = 1;
};

ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_experiment_config(g.config);
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

Corpus resolve_corpus(ExperimentConfig c, const std::string& corpus, const std::string& objects) {
  if (!corpus.empty()) c.corpus = corpus;
  if (!objects.empty()) c.objects_csv = objects;
  return load_experiment_corpus(c);
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// --------------------------------------------------------- predictor bundle

const std::vector<std::string> kTrainable{"ttsnet", "hmm", "ishii", "png"};

struct Bundle {
  std::string method;
  std::optional<TtsnetModel> ttsnet;
  std::optional<HmmBaseline> hmm;
  std::optional<IshiiBaseline> ishii;
  std::optional<PngBaseline> png;

  Prediction predict(const ObservationMatrix& x, double tau) const {
    if (method == "ttsnet") return ttsnet->predict(x, tau);
    if (method == "hmm") return hmm->predict(x, tau);
    if (method == "ishii") return ishii->predict(x, tau);
    return png->predict(*ttsnet, x, tau);
  }

  json to_json() const {
    json j = {{"format", "spiketurn-predictor"}, {"version", 1}, {"method", method}};
    if (ttsnet) j["ttsnet"] = ttsnet->to_json();
    if (hmm) j["hmm"] = hmm->to_json();
    if (ishii) j["ishii"] = ishii->to_json();
    if (png) j["png"] = png->to_json();
    return j;
  }

  static Bundle from_json(const json& j) {
    // A bare TTSNet model file is accepted as well.
    if (!j.contains("format") || j.at("format") != "spiketurn-predictor")
      return Bundle{"ttsnet", TtsnetModel::from_json(j), {}, {}, {}};
    Bundle b;
    try {
      b.method = j.at("method").get<std::string>();
      if (j.contains("ttsnet")) b.ttsnet = TtsnetModel::from_json(j.at("ttsnet"));
      if (j.contains("hmm")) b.hmm = HmmBaseline::from_json(j.at("hmm"));
      if (j.contains("ishii")) b.ishii = IshiiBaseline::from_json(j.at("ishii"));
      if (j.contains("png")) b.png = PngBaseline::from_json(j.at("png"));
    } catch (const json::exception& e) {
      throw DataError(std::string("predictor file: ") + e.what());
    }
    const bool ok = (b.method == "ttsnet" && b.ttsnet) || (b.method == "hmm" && b.hmm) ||
                    (b.method == "ishii" && b.ishii) || (b.method == "png" && b.png && b.ttsnet);
    if (!ok) throw DataError("predictor file: missing model for method '" + b.method + "'");
    return b;
  }
};

Bundle train_bundle(const std::string& method, const ExperimentConfig& c, const Corpus& corpus, int threads) {
  Bundle b{method, {}, {}, {}, {}};
  if (method == "ttsnet" || method == "png") b.ttsnet = TtsnetModel::train(corpus, c.ttsnet, c.seed, threads);
  if (method == "hmm") b.hmm = HmmBaseline::train(corpus, c.hmm, c.seed);
  if (method == "ishii") b.ishii = IshiiBaseline::train(corpus, c.ishii, c.seed, threads);
  if (method == "png") b.png = PngBaseline::train(corpus, *b.ttsnet, c.png, c.seed, threads);
  return b;
}

// ------------------------------------------------------------ CSV helpers

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": not a number: '" + s + "'");
  }
}

std::vector<PredictionRecord> read_predictions_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "event_id,tau,label,pred,score")
    throw DataError(path.string() + ": expected header event_id,tau,label,pred,score");
  std::vector<PredictionRecord> rows;
  for (int n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    const auto where = path.string() + ":" + std::to_string(n);
    if (cells.size() != 5) throw DataError(where + ": expected 5 columns");
    rows.push_back({cells[0], parse_number(cells[1], where), static_cast<int>(parse_number(cells[2], where)),
                    static_cast<int>(parse_number(cells[3], where)), parse_number(cells[4], where)});
  }
  return rows;
}

// One integer label per line; a non-numeric first line is a header.
std::vector<int> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<int> labels;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(line, &used);
      if (used != line.size()) throw std::invalid_argument(line);
      labels.push_back(v);
    } catch (const std::exception&) {
      if (n == 1) continue;
      throw DataError(path.string() + ":" + std::to_string(n) + ": not an integer label");
    }
  }
  return labels;
}

const TurnEvent& find_event(const Corpus& corpus, const std::string& id) {
  for (const auto& e : corpus.events)
    if (e.event_id == id) return e;
  throw DataError("unknown event '" + id + "'");
}

std::vector<double> parse_taus(const std::vector<double>& given) {
  if (given.empty()) return default_taus();
  for (double t : given)
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("--tau: values must lie in (0, 1]");
  return given;
}

void print_table(const ExperimentReport& report) {
  std::printf("%-12s %8s %10s %10s\n", "method", "AUC", "F1(0.1)", "F1(1.0)");
  for (const auto& m : report.methods)
    std::printf("%-12s %8.4f %10.4f %10.4f\n", m.method.c_str(), m.auc, m.f1_mean.front(), m.f1_mean.back());
  if (!report.objects.empty()) {
    const auto& o = report.summary["objects"]["weighted_f1"];
    std::printf("objects      hmm %s  bigram %s  random %s\n", o["hmm"]["table"].get<std::string>().c_str(),
                o["bigram"]["table"].get<std::string>().c_str(), o["random"]["table"].get<std::string>().c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early turn-taking prediction with spiking networks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--config", g.config, "Experiment config JSON (defaults when absent)")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  std::string corpus_path, objects_path, model_path, method = "ttsnet";
  std::vector<double> taus;

  auto* gen = app.add_subcommand("gen-data", "Write the synthetic corpus and object trials");

  auto* train = app.add_subcommand("train", "Train one predictor on a whole corpus");
  train->add_option("--corpus", corpus_path, "Corpus JSONL (synthetic when absent)");
  train->add_option("--method", method, "Predictor")->check(CLI::IsMember(kTrainable))->capture_default_str();

  auto* predict = app.add_subcommand("predict", "Predict every event of a corpus at each tau");
  predict->add_option("--model", model_path, "Predictor file written by train")->required()->check(CLI::ExistingFile);
  predict->add_option("--corpus", corpus_path, "Corpus JSONL (synthetic when absent)");
  predict->add_option("--tau", taus, "Observed fractions (default 0.1..1.0)");

  auto* eval = app.add_subcommand("eval", "Leave-one-subject-out evaluation of all configured methods");

  std::vector<std::string> prediction_files;
  auto* curve = app.add_subcommand("curve", "F1(tau) curve and AUC from prediction CSVs, one per fold");
  curve->add_option("predictions", prediction_files, "Prediction CSV files")->required()->check(CLI::ExistingFile);

  auto* objects = app.add_subcommand("objects", "Leave-one-subject-out next-object evaluation");
  objects->add_option("--corpus", corpus_path, "Corpus JSONL (synthetic when absent)");
  objects->add_option("--objects", objects_path, "Object trials CSV");

  std::vector<std::string> event_ids;
  double raster_tau = 1.0;
  auto* raster = app.add_subcommand("dump-raster", "Firing rasters of events, one CSV per network");
  raster->add_option("--model", model_path, "TTSNet model or predictor file")->required()->check(CLI::ExistingFile);
  raster->add_option("--corpus", corpus_path, "Corpus JSONL (synthetic when absent)");
  raster->add_option("--event", event_ids, "Event ids")->required();
  raster->add_option("--tau", raster_tau, "Observed fraction")->capture_default_str();

  std::string labels_a, labels_b;
  auto* kappa = app.add_subcommand("kappa", "Cohen's kappa between two label files");
  kappa->add_option("a", labels_a, "Labels, one per line")->required()->check(CLI::ExistingFile);
  kappa->add_option("b", labels_b, "Labels, one per line")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      const auto c = resolve_config(g);
      const auto corpus = generate_synthetic(c.synthetic, c.seed);
      save_corpus(corpus, out_path(g, "corpus.jsonl"));
      save_object_sequences(corpus.trials, out_path(g, "objects.csv"));
      std::printf("%zu events, %zu subjects, %zu object trials -> %s\n", corpus.events.size(),
                  corpus.subjects.size(), corpus.trials.size(), g.out_dir.c_str());
    } else if (train->parsed()) {
      const auto c = resolve_config(g);
      const auto corpus = resolve_corpus(c, corpus_path, "");
      const auto bundle = train_bundle(method, c, corpus, g.threads);
      const auto path = out_path(g, "model.json");
      std::ofstream(path) << bundle.to_json().dump() << '\n';
      std::printf("trained %s on %zu events -> %s\n", method.c_str(), corpus.events.size(), path.c_str());
    } else if (predict->parsed()) {
      const auto c = resolve_config(g);
      const auto bundle = Bundle::from_json(read_json(model_path));
      const auto corpus = resolve_corpus(c, corpus_path, "");
      const auto ts = parse_taus(taus);
      std::vector<PredictionRecord> rows(corpus.events.size() * ts.size());
      parallel_for(corpus.events.size(), g.threads, [&](std::size_t i) {
        const auto& ev = corpus.events[i];
        for (std::size_t k = 0; k < ts.size(); ++k) {
          const auto p = bundle.predict(ev.observation, ts[k]);
          rows[i * ts.size() + k] = {ev.event_id, ts[k], ev.label(), p.label, p.score};
        }
      });
      const auto path = out_path(g, "predictions.csv");
      write_predictions_csv(rows, path);
      std::printf("%zu predictions -> %s\n", rows.size(), path.c_str());
    } else if (eval->parsed()) {
      const auto c = resolve_config(g);
      const auto report = run_experiment(c, g.out_dir, g.threads);
      print_table(report);
    } else if (curve->parsed()) {
      // Per-file F1 at each tau, then mean and population std across files.
      std::map<double, std::vector<double>> per_tau;
      for (const auto& file : prediction_files) {
        std::map<double, Confusion> conf;
        for (const auto& r : read_predictions_csv(file)) conf[r.tau].add(r.label, r.pred);
        for (const auto& [tau, cm] : conf) per_tau[tau].push_back(f1(cm));
      }
      MethodReport mr;
      const auto ts = default_taus();
      for (double t : ts) {
        auto it = std::find_if(per_tau.begin(), per_tau.end(), [&](const auto& kv) { return std::abs(kv.first - t) < 1e-9; });
        if (it == per_tau.end() || it->second.size() != prediction_files.size())
          throw DataError("prediction files must cover every tau in 0.1..1.0");
        double mean = 0.0, var = 0.0;
        for (double v : it->second) mean += v;
        mean /= it->second.size();
        for (double v : it->second) var += (v - mean) * (v - mean);
        mr.f1_mean.push_back(mean);
        mr.f1_std.push_back(std::sqrt(var / it->second.size()));
      }
      mr.auc = auc(mr.f1_mean);
      const auto path = out_path(g, "curve.csv");
      write_curve_csv(mr, path);
      std::printf("AUC %.6f -> %s\n", mr.auc, path.c_str());
    } else if (objects->parsed()) {
      const auto c = resolve_config(g);
      const auto corpus = resolve_corpus(c, corpus_path, objects_path);
      const auto folds = evaluate_objects(corpus, c.objects, c.seed, g.threads);
      if (folds.empty()) throw DataError("corpus has no object trials");
      std::vector<double> h, b, r;
      std::vector<ObjectStepPrediction> all;
      for (const auto& f : folds) {
        h.push_back(f.hmm_f1);
        b.push_back(f.bigram_f1);
        r.push_back(f.random_f1);
        all.insert(all.end(), f.predictions.begin(), f.predictions.end());
      }
      write_object_predictions(all, c.objects.n_objects, out_path(g, "objects_predictions.csv"));
      std::ofstream table(out_path(g, "objects_table.txt"));
      table << "method\tweighted F1 (median ± MAD over folds)\n"
            << "hmm\t" << format_median_mad(h) << '\n'
            << "bigram\t" << format_median_mad(b) << '\n'
            << "random\t" << format_median_mad(r) << '\n';
      std::printf("hmm %s  bigram %s  random %s (%zu folds)\n", format_median_mad(h).c_str(),
                  format_median_mad(b).c_str(), format_median_mad(r).c_str(), folds.size());
    } else if (raster->parsed()) {
      const auto c = resolve_config(g);
      const auto bundle = Bundle::from_json(read_json(model_path));
      if (!bundle.ttsnet) throw DataError("dump-raster needs a TTSNet or SNN-PNG model");
      if (!(raster_tau > 0.0 && raster_tau <= 1.0)) throw ConfigError("--tau: must lie in (0, 1]");
      const auto corpus = resolve_corpus(c, corpus_path, "");
      for (const auto& id : event_ids) dump_rasters(*bundle.ttsnet, find_event(corpus, id), raster_tau, g.out_dir);
      std::printf("%zu events x %zu networks -> %s\n", event_ids.size(), bundle.ttsnet->channels().size(),
                  g.out_dir.c_str());
    } else if (kappa->parsed()) {
      const auto a = read_labels(labels_a);
      const auto b = read_labels(labels_b);
      if (a.size() != b.size()) throw DataError("label files differ in length");
      std::printf("%.6f\n", cohen_kappa(a, b));
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  }
  return 0;
}
