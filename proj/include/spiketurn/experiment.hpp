#pragma once

#include "spiketurn/baselines.hpp"
#include "spiketurn/metrics.hpp"
#include "spiketurn/model.hpp"
#include "spiketurn/objects.hpp"
#include "spiketurn/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace spiketurn {

// Early-prediction method names accepted in an experiment config.
inline const std::vector<std::string> kMethodNames{"ttsnet", "always_give", "hmm", "ishii", "png"};

struct RasterRequest {
  std::vector<std::string> event_ids;
  double tau{1.0};
};

struct ExperimentConfig {
  std::uint64_t seed{7};
  std::optional<std::filesystem::path> corpus;       // JSONL; synthetic data when absent
  std::optional<std::filesystem::path> objects_csv;  // object trials for a JSONL corpus
  SyntheticConfig synthetic;
  std::vector<std::string> methods{"ttsnet", "always_give", "hmm", "ishii", "png"};
  TtsnetConfig ttsnet;
  HmmBaselineConfig hmm;
  IshiiConfig ishii;
  PngConfig png;
  bool evaluate_objects{true};
  ObjectModelConfig objects;
  RasterRequest rasters;

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
// Unknown fields and invalid values raise ConfigError naming the field path.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Relative corpus paths in a config file resolve against its directory.
Corpus load_experiment_corpus(const ExperimentConfig& config);

struct PredictionRecord {
  std::string event_id;
  double tau{1.0};
  int label{0};
  int pred{0};
  double score{0.0};
};

void write_predictions_csv(const std::vector<PredictionRecord>& rows, const std::filesystem::path& path);

using Predictor = std::function<Prediction(const ObservationMatrix&, double)>;

struct FoldReport {
  std::string held_out_subject;
  std::vector<Confusion> confusion;  // per tau
  std::vector<double> f1;            // per tau
  std::vector<PredictionRecord> predictions;
};

// Predicts every test event at every tau; F1 on the Give class per tau.
FoldReport evaluate_fold(const Predictor& predict, const std::vector<TurnEvent>& test,
                         const std::vector<double>& taus = default_taus());
EarlyCurve f1_curve(const Predictor& predict, const std::vector<TurnEvent>& test,
                    const std::vector<double>& taus = default_taus());

struct MethodReport {
  std::string method;
  std::vector<FoldReport> folds;
  std::vector<double> f1_mean;  // per tau, mean over folds
  std::vector<double> f1_std;   // per tau, population std over folds
  double auc{0.0};              // of the mean curve
};

struct ExperimentReport {
  std::vector<MethodReport> methods;
  std::vector<ObjectFoldResult> objects;
  std::vector<double> ttsnet_train_f1;  // per fold
  nlohmann::json summary;

  const MethodReport* method(const std::string& name) const;
};

// Leave-one-subject-out evaluation of every configured method. Writes
//   predictions/<method>_<subject>.csv, curves/<method>.csv, summary.json,
//   objects_predictions.csv and objects_table.txt, rasters/*.csv
// under out_dir (nothing is written when out_dir is empty). Output depends
// only on (config, corpus), never on `threads`.
ExperimentReport run_experiment(const ExperimentConfig& config, const Corpus& corpus,
                                const std::filesystem::path& out_dir, int threads = 1);
ExperimentReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                int threads = 1);

// Firing rasters of one event, one per network.
void dump_rasters(const TtsnetModel& model, const TurnEvent& event, double tau, const std::filesystem::path& dir);

void write_curve_csv(const MethodReport& report, const std::filesystem::path& path);

}  // namespace spiketurn
