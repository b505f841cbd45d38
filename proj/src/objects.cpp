#include "spiketurn/objects.hpp"

#include "spiketurn/common.hpp"
#include "spiketurn/config_json.hpp"
#include "spiketurn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace spiketurn {

using nlohmann::json;

namespace {

void check_ids(std::span<const int> sequence, int n_objects) {
  for (int id : sequence)
    if (id < 1 || id > n_objects)
      throw DataError("object id " + std::to_string(id) + " outside 1.." + std::to_string(n_objects));
}

void check_order(int order) {
  if (order < 1 || order > 5) throw ConfigError("n-gram order must lie in [1, 5]");
}

}  // namespace

std::vector<ObjectHistory> trigram_windows(std::span<const int> sequence, int n_objects, int order) {
  check_order(order);
  check_ids(sequence, n_objects);
  std::vector<ObjectHistory> out;
  for (std::size_t p = 1; p < sequence.size(); ++p)
    out.push_back({query_window(sequence.first(p), n_objects, order), sequence[p]});
  return out;
}

std::vector<int> query_window(std::span<const int> sequence, int n_objects, int order) {
  check_order(order);
  check_ids(sequence, n_objects);
  const auto n = static_cast<std::size_t>(order);
  std::vector<int> w(n, kPaddingSymbol);
  const std::size_t take = std::min(n, sequence.size());
  std::copy(sequence.end() - static_cast<std::ptrdiff_t>(take), sequence.end(), w.end() - static_cast<std::ptrdiff_t>(take));
  return w;
}

void ObjectModelConfig::validate() const {
  if (n_objects < 2) throw ConfigError("objects.n_objects must be >= 2");
  if (order < 1 || order > 5) throw ConfigError("objects.order must lie in [1, 5]");
  if (em.n_states < 1) throw ConfigError("objects.n_states must be >= 1");
  if (em.restarts < 1) throw ConfigError("objects.restarts must be >= 1");
  if (em.max_iterations < 1) throw ConfigError("objects.max_iterations must be >= 1");
  if (!(em.tolerance >= 0.0)) throw ConfigError("objects.tolerance must be non-negative");
  if (!(em.validation_fraction >= 0.0 && em.validation_fraction < 1.0))
    throw ConfigError("objects.validation_fraction must lie in [0, 1)");
}

json to_json(const ObjectModelConfig& c) {
  return {{"n_objects", c.n_objects},        {"order", c.order},
          {"n_states", c.em.n_states},       {"restarts", c.em.restarts},
          {"max_iterations", c.em.max_iterations}, {"tolerance", c.em.tolerance},
          {"validation_fraction", c.em.validation_fraction}};
}

ObjectModelConfig object_config_from_json(const json& j, const std::string& where) {
  ObjectModelConfig c;
  ConfigReader r(j, where);
  r.get("n_objects", c.n_objects);
  r.get("order", c.order);
  r.get("n_states", c.em.n_states);
  r.get("restarts", c.em.restarts);
  r.get("max_iterations", c.em.max_iterations);
  r.get("tolerance", c.em.tolerance);
  r.get("validation_fraction", c.em.validation_fraction);
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + std::string(e.what()).substr(7));
  }
  return c;
}

std::vector<std::vector<ObjectHistory>> oversample(std::vector<std::vector<ObjectHistory>> by_class,
                                                   std::uint64_t seed) {
  std::size_t target = 0;
  for (const auto& c : by_class) target = std::max(target, c.size());
  std::mt19937_64 rng(seed);
  for (auto& c : by_class) {
    if (c.empty()) continue;
    const std::size_t original = c.size();
    std::uniform_int_distribution<std::size_t> pick(0, original - 1);
    while (c.size() < target) c.push_back(c[pick(rng)]);
  }
  return by_class;
}

NextObject softmax_argmax(std::span<const double> ll) {
  if (ll.empty()) throw DataError("softmax over no objects");
  NextObject out;
  out.probs.assign(ll.size(), 0.0);
  const double m = *std::max_element(ll.begin(), ll.end());
  if (m == -std::numeric_limits<double>::infinity()) {
    std::fill(out.probs.begin(), out.probs.end(), 1.0 / static_cast<double>(ll.size()));
    out.object = 1;
    return out;
  }
  if (!std::isfinite(m)) throw NumericalError("object log-likelihood is not finite");
  double sum = 0.0;
  for (std::size_t j = 0; j < ll.size(); ++j) {
    out.probs[j] = std::exp(ll[j] - m);
    sum += out.probs[j];
  }
  for (auto& p : out.probs) p /= sum;
  out.object = static_cast<int>(std::max_element(out.probs.begin(), out.probs.end()) - out.probs.begin()) + 1;
  return out;
}

NextObject ObjectModels::predict(std::span<const int> window) const {
  std::vector<double> ll;
  ll.reserve(models.size());
  for (const auto& m : models) ll.push_back(m.log_likelihood(window));
  return softmax_argmax(ll);
}

json ObjectModels::to_json() const {
  json ms = json::array();
  for (std::size_t j = 0; j < models.size(); ++j) {
    auto mj = models[j].to_json();
    mj["trained"] = static_cast<bool>(trained[j]);
    ms.push_back(mj);
  }
  return {{"format", "spiketurn-objects"}, {"version", 1}, {"config", spiketurn::to_json(config)}, {"models", ms}};
}

ObjectModels ObjectModels::from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "spiketurn-objects" || j.at("version").get<int>() != 1)
      throw DataError("not a version 1 object model bundle");
    ObjectModels m;
    m.config = object_config_from_json(j.at("config"));
    for (const auto& mj : j.at("models")) {
      m.trained.push_back(mj.at("trained").get<bool>());
      m.models.push_back(DiscreteHmm::from_json(mj));
    }
    if (m.models.size() != static_cast<std::size_t>(m.config.n_objects))
      throw DataError("object model count differs from n_objects");
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed object model bundle: ") + e.what());
  }
}

ObjectModels train_object_models(const std::vector<ObjectHistory>& histories, const ObjectModelConfig& config,
                                 std::uint64_t seed, int threads) {
  config.validate();
  if (histories.empty()) throw DataError("object models: no training histories");
  const auto n = static_cast<std::size_t>(config.n_objects);
  std::vector<std::vector<ObjectHistory>> by_class(n);
  for (const auto& h : histories) {
    if (h.next < 1 || h.next > config.n_objects) throw DataError("object history target out of range");
    if (h.window.size() != static_cast<std::size_t>(config.order)) throw DataError("object history has wrong order");
    by_class[static_cast<std::size_t>(h.next - 1)].push_back(h);
  }
  by_class = oversample(std::move(by_class), derive_seed(seed, kStreamObjects, 0));

  ObjectModels out;
  out.config = config;
  out.models.resize(n);
  out.trained.assign(n, false);
  const std::size_t symbols = n + 1;
  std::vector<char> trained(n, 0);
  parallel_for(n, threads, [&](std::size_t j) {
    if (by_class[j].empty()) {
      out.models[j] = DiscreteHmm::uniform(static_cast<std::size_t>(config.em.n_states), symbols);
      return;
    }
    std::vector<std::vector<int>> seqs;
    seqs.reserve(by_class[j].size());
    for (const auto& h : by_class[j]) seqs.push_back(h.window);
    out.models[j] = baum_welch(seqs, symbols, config.em, derive_seed(seed, kStreamObjects, j + 1));
    trained[j] = 1;
  });
  for (std::size_t j = 0; j < n; ++j) out.trained[j] = trained[j] != 0;
  return out;
}

BigramPredictor BigramPredictor::fit(const std::vector<ObjectHistory>& histories, int n_objects) {
  BigramPredictor b;
  b.n_objects_ = n_objects;
  b.counts_.assign(static_cast<std::size_t>(n_objects) + 1, std::vector<std::size_t>(static_cast<std::size_t>(n_objects), 0));
  std::vector<std::size_t> overall(static_cast<std::size_t>(n_objects), 0);
  for (const auto& h : histories) {
    if (h.window.empty()) throw DataError("bigram predictor needs a non-empty window");
    b.counts_[static_cast<std::size_t>(h.window.back())][static_cast<std::size_t>(h.next - 1)]++;
    overall[static_cast<std::size_t>(h.next - 1)]++;
  }
  b.fallback_ = static_cast<int>(std::max_element(overall.begin(), overall.end()) - overall.begin()) + 1;
  return b;
}

int BigramPredictor::predict(std::span<const int> window) const {
  const auto& row = counts_.at(static_cast<std::size_t>(window.back()));
  const auto best = std::max_element(row.begin(), row.end());
  if (*best == 0) return fallback_;
  return static_cast<int>(best - row.begin()) + 1;
}

std::vector<ObjectStepPrediction> predict_trials(const ObjectModels& models, const std::vector<ObjectTrial>& trials) {
  std::vector<ObjectStepPrediction> rows;
  for (const auto& t : trials) {
    const auto hist = trigram_windows(t.objects, models.config.n_objects, models.config.order);
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const auto p = models.predict(hist[k].window);
      rows.push_back({t.trial_id, static_cast<int>(k) + 2, hist[k].next, p.object, p.probs});
    }
  }
  return rows;
}

void write_object_predictions(const std::vector<ObjectStepPrediction>& rows, int n_objects,
                              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "trial_id,step,true_object,pred_object";
  for (int j = 1; j <= n_objects; ++j) out << ",p" << j;
  out << '\n';
  char buf[32];
  for (const auto& r : rows) {
    out << r.trial_id << ',' << r.step << ',' << r.true_object << ',' << r.pred_object;
    for (double p : r.probs) {
      std::snprintf(buf, sizeof buf, "%.6f", p);
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::vector<ObjectFoldResult> evaluate_objects(const Corpus& corpus, const ObjectModelConfig& config,
                                               std::uint64_t seed, int threads) {
  config.validate();
  std::vector<std::string> subjects;
  for (const auto& s : corpus.subjects)
    if (std::any_of(corpus.trials.begin(), corpus.trials.end(), [&](const ObjectTrial& t) { return t.subject_id == s; }))
      subjects.push_back(s);
  if (subjects.size() < 2) throw DataError("object evaluation needs object trials from at least 2 subjects");

  std::vector<ObjectFoldResult> results(subjects.size());
  parallel_for(subjects.size(), threads, [&](std::size_t f) {
    std::vector<ObjectTrial> train, test;
    for (const auto& t : corpus.trials) (t.subject_id == subjects[f] ? test : train).push_back(t);
    std::vector<ObjectHistory> hist;
    for (const auto& t : train) {
      auto h = trigram_windows(t.objects, config.n_objects, config.order);
      hist.insert(hist.end(), h.begin(), h.end());
    }
    auto& res = results[f];
    res.held_out_subject = subjects[f];
    const auto models = train_object_models(hist, config, derive_seed(seed, kStreamObjects, 1000 + f), 1);
    const auto bigram = BigramPredictor::fit(hist, config.n_objects);
    res.predictions = predict_trials(models, test);
    std::mt19937_64 rng(derive_seed(seed, kStreamObjects, 2000 + f));
    std::uniform_int_distribution<int> uniform(1, config.n_objects);
    std::vector<int> truth, hmm_pred, bigram_pred, random_pred;
    for (const auto& t : test) {
      for (const auto& h : trigram_windows(t.objects, config.n_objects, config.order)) {
        truth.push_back(h.next);
        bigram_pred.push_back(bigram.predict(h.window));
        random_pred.push_back(uniform(rng));
      }
    }
    for (const auto& r : res.predictions) hmm_pred.push_back(r.pred_object);
    if (truth.empty()) throw DataError("subject " + subjects[f] + " has no object requests to predict");
    res.hmm_f1 = weighted_f1(truth, hmm_pred, config.n_objects);
    res.bigram_f1 = weighted_f1(truth, bigram_pred, config.n_objects);
    res.random_f1 = weighted_f1(truth, random_pred, config.n_objects);
  });
  return results;
}

}  // namespace spiketurn
