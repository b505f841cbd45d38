#pragma once

#include "spiketurn/dataset.hpp"
#include "spiketurn/hmm.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace spiketurn {

inline constexpr int kPaddingSymbol = 0;

// The `order` object ids preceding a request, left-padded with 0, and the
// requested object.
struct ObjectHistory {
  std::vector<int> window;
  int next{1};

  bool operator==(const ObjectHistory&) const = default;
};

// One history per request that has a predecessor: targets p = 2..len.
std::vector<ObjectHistory> trigram_windows(std::span<const int> sequence, int n_objects = 6, int order = 3);

// Window for predicting the request that follows `sequence`.
std::vector<int> query_window(std::span<const int> sequence, int n_objects = 6, int order = 3);

struct ObjectModelConfig {
  int n_objects{6};
  int order{3};
  EmConfig em{5, 10, 200, 1e-6, 0.2};

  void validate() const;
};

nlohmann::json to_json(const ObjectModelConfig& c);
ObjectModelConfig object_config_from_json(const nlohmann::json& j, const std::string& where = "objects");

// Random oversampling: every non-empty class is topped up to the size of the
// largest by duplicating its own members, drawn uniformly with replacement.
std::vector<std::vector<ObjectHistory>> oversample(std::vector<std::vector<ObjectHistory>> by_class,
                                                   std::uint64_t seed);

struct NextObject {
  std::vector<double> probs;  // probs[j - 1] for object j
  int object{1};
};

// Softmax of per-object log-likelihoods, argmax with ties to the smallest id.
// All -inf gives uniform probabilities and object 1.
NextObject softmax_argmax(std::span<const double> log_likelihoods);

struct ObjectModels {
  ObjectModelConfig config;
  std::vector<DiscreteHmm> models;  // models[j - 1] for object j
  std::vector<bool> trained;        // false: no training history, uniform model

  NextObject predict(std::span<const int> window) const;

  nlohmann::json to_json() const;
  static ObjectModels from_json(const nlohmann::json& j);
};

// Histories grouped by requested object, oversampled, one HMM per object.
ObjectModels train_object_models(const std::vector<ObjectHistory>& histories, const ObjectModelConfig& config,
                                 std::uint64_t seed, int threads = 1);

// Most frequent successor of the previous request (ties to the smallest id);
// unseen predecessors fall back to the most frequent request overall.
class BigramPredictor {
public:
  static BigramPredictor fit(const std::vector<ObjectHistory>& histories, int n_objects);
  int predict(std::span<const int> window) const;

private:
  int n_objects_{6};
  std::vector<std::vector<std::size_t>> counts_;  // [previous symbol][next object]
  int fallback_{1};
};

struct ObjectStepPrediction {
  std::string trial_id;
  int step{0};  // 1-based position of the predicted request
  int true_object{0};
  int pred_object{0};
  std::vector<double> probs;
};

std::vector<ObjectStepPrediction> predict_trials(const ObjectModels& models, const std::vector<ObjectTrial>& trials);
void write_object_predictions(const std::vector<ObjectStepPrediction>& rows, int n_objects,
                              const std::filesystem::path& path);

struct ObjectFoldResult {
  std::string held_out_subject;
  double hmm_f1{0.0};
  double bigram_f1{0.0};
  double random_f1{0.0};
  std::vector<ObjectStepPrediction> predictions;
};

// Leave-one-subject-out evaluation over the corpus object trials. Subjects
// without object trials are skipped.
std::vector<ObjectFoldResult> evaluate_objects(const Corpus& corpus, const ObjectModelConfig& config,
                                               std::uint64_t seed, int threads = 1);

}  // namespace spiketurn
