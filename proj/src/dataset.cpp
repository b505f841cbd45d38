#include "spiketurn/dataset.hpp"

#include "spiketurn/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace spiketurn {

using nlohmann::json;

void Subtask::validate() const {
  double sum = 0.0;
  for (double p : object_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("subtask object probability outside [0,1]");
    sum += p;
  }
  if (object_probs.empty() || std::abs(sum - 1.0) > 1e-9)
    throw DataError("subtask object probabilities must sum to 1");
  if (finish_time < begin_time) throw DataError("subtask finishes before it begins");
}

ObservationMatrix::ObservationMatrix(std::size_t rows_, std::size_t cols_, double sample_hz_,
                                     std::vector<std::string> channel_names_)
    : rows(rows_), cols(cols_), data(rows_ * cols_, 0.0), sample_hz(sample_hz_),
      channel_names(std::move(channel_names_)) {
  if (channel_names.empty())
    for (std::size_t c = 0; c < cols; ++c) channel_names.push_back("ch" + std::to_string(c));
}

std::vector<double> ObservationMatrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = data[r * cols + c];
  return out;
}

void ObservationMatrix::set_column(std::size_t c, std::span<const double> values) {
  for (std::size_t r = 0; r < rows; ++r) data[r * cols + c] = values[r];
}

void ObservationMatrix::validate() const {
  if (rows < 1 || cols < 1) throw DataError("observation matrix must have at least one row and one column");
  if (data.size() != rows * cols) throw DataError("observation matrix data size does not match its shape");
  if (channel_names.size() != cols) throw DataError("observation matrix channel name count does not match columns");
  for (double v : data)
    if (!std::isfinite(v)) throw DataError("observation matrix contains a non-finite value");
}

const std::vector<std::string>& Corpus::channel_names() const {
  static const std::vector<std::string> empty;
  return events.empty() ? empty : events.front().observation.channel_names;
}

std::size_t Corpus::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [&](const TurnEvent& e) { return e.label() == label; }));
}

void Corpus::index_subjects() {
  subjects.clear();
  std::set<std::string> seen;
  auto add = [&](const std::string& s) {
    if (seen.insert(s).second) subjects.push_back(s);
  };
  for (const auto& e : events) add(e.subject_id);
  for (const auto& t : trials) add(t.subject_id);
}

void Corpus::validate() const {
  std::set<std::string> known(subjects.begin(), subjects.end());
  for (const auto& e : events) {
    if (!known.count(e.subject_id)) throw DataError("event " + e.event_id + " has unknown subject " + e.subject_id);
    try {
      e.observation.validate();
    } catch (const DataError& err) {
      throw DataError("event " + e.event_id + ": " + err.what());
    }
    if (e.observation.channel_names != channel_names())
      throw DataError("event " + e.event_id + ": channel set differs from the first event");
    if (!(e.end_time > e.start_time)) throw DataError("event " + e.event_id + ": end_time must exceed start_time");
  }
}

std::string subject_of_trial(const std::string& trial_id) {
  const auto slash = trial_id.find('/');
  return slash == std::string::npos ? trial_id : trial_id.substr(0, slash);
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());

  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& err) {
      throw DataError("parse error at " + where + ": " + err.what());
    }
    TurnEvent ev;
    try {
      ev.event_id = j.at("event_id").get<std::string>();
      ev.subject_id = j.at("subject").get<std::string>();
      const int label = j.at("label").get<int>();
      if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
      ev.kind = label == 1 ? TurnKind::Give : TurnKind::Keep;
      auto& x = ev.observation;
      x.sample_hz = j.at("sample_hz").get<double>();
      x.channel_names = j.at("channels").get<std::vector<std::string>>();
      x.cols = x.channel_names.size();
      const auto& rows = j.at("data");
      x.rows = rows.size();
      x.data.reserve(x.rows * x.cols);
      for (const auto& r : rows) {
        if (r.size() != x.cols) throw DataError("row width differs from channel count");
        for (const auto& v : r) {
          // JSON has no NaN literal; null is accepted as a missing (NaN) value so
          // that validation can report it.
          x.data.push_back(v.is_null() ? std::nan("") : v.get<double>());
        }
      }
    } catch (const json::exception& err) {
      throw DataError("parse error at " + where + ": " + err.what());
    } catch (const DataError& err) {
      throw DataError("parse error at " + where + ": " + err.what());
    }
    if (!(ev.observation.sample_hz > 0.0)) throw DataError("event " + ev.event_id + ": sample_hz must be positive");
    ev.start_time = 0.0;
    ev.end_time = static_cast<double>(ev.observation.rows) / ev.observation.sample_hz;
    if (!corpus.events.empty() && ev.observation.cols != corpus.n_channels())
      throw DataError("event " + ev.event_id + ": inconsistent channel count at " + where);
    corpus.events.push_back(std::move(ev));
  }
  if (corpus.events.empty()) throw DataError("no events in " + path.string());
  corpus.index_subjects();
  corpus.validate();
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  for (const auto& ev : corpus.events) {
    const auto& x = ev.observation;
    json rows = json::array();
    for (std::size_t r = 0; r < x.rows; ++r) {
      auto row = x.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    json j = {{"event_id", ev.event_id}, {"subject", ev.subject_id}, {"label", ev.label()},
              {"sample_hz", x.sample_hz}, {"channels", x.channel_names}, {"data", std::move(rows)}};
    out << j.dump() << '\n';
  }
}

std::vector<ObjectTrial> load_object_sequences(const std::filesystem::path& path, int n_objects) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open object sequence file " + path.string());
  std::map<std::string, std::map<int, int>> steps;
  std::vector<std::string> order;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("trial_id", 0) == 0) continue;
    std::stringstream ss(line);
    std::string trial, step_s, obj_s;
    if (!std::getline(ss, trial, ',') || !std::getline(ss, step_s, ',') || !std::getline(ss, obj_s))
      throw DataError("malformed object row at " + path.string() + ":" + std::to_string(line_no));
    int step = 0, obj = 0;
    try {
      step = std::stoi(step_s);
      obj = std::stoi(obj_s);
    } catch (const std::exception&) {
      throw DataError("non-integer field at " + path.string() + ":" + std::to_string(line_no));
    }
    if (obj < 1 || obj > n_objects)
      throw DataError("object id " + std::to_string(obj) + " out of range at " + path.string() + ":" +
                      std::to_string(line_no));
    if (!steps.count(trial)) order.push_back(trial);
    if (!steps[trial].emplace(step, obj).second)
      throw DataError("duplicate step at " + path.string() + ":" + std::to_string(line_no));
  }
  std::vector<ObjectTrial> trials;
  for (const auto& id : order) {
    ObjectTrial t{id, subject_of_trial(id), {}};
    for (const auto& [step, obj] : steps[id]) t.objects.push_back(obj);
    trials.push_back(std::move(t));
  }
  return trials;
}

void save_object_sequences(const std::vector<ObjectTrial>& trials, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write object sequence file " + path.string());
  out << "trial_id,step,object_id\n";
  for (const auto& t : trials)
    for (std::size_t i = 0; i < t.objects.size(); ++i) out << t.trial_id << ',' << i + 1 << ',' << t.objects[i] << '\n';
}

std::size_t partial_rows(std::size_t rows, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1], got " + std::to_string(tau));
  // Guard against 0.3 * 10 = 3.0000000000000004 rounding up to 4.
  const double scaled = tau * static_cast<double>(rows);
  const double nearest = std::round(scaled);
  const double exact = std::abs(scaled - nearest) < 1e-9 ? nearest : std::ceil(scaled);
  return std::clamp<std::size_t>(static_cast<std::size_t>(exact), 1, rows);
}

ObservationMatrix slice_partial(const ObservationMatrix& x, double tau) {
  const std::size_t keep = partial_rows(x.rows, tau);
  ObservationMatrix out = x;
  out.rows = keep;
  out.data.resize(keep * x.cols);
  return out;
}

std::vector<double> ewma_smooth(std::span<const double> series, double alpha) {
  if (series.empty()) throw ConfigError("ewma_smooth: empty series");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("ewma_smooth: alpha must lie in (0, 1]");
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t t = 1; t < series.size(); ++t) out[t] = alpha * series[t] + (1.0 - alpha) * out[t - 1];
  return out;
}

ObservationMatrix ewma_smooth(const ObservationMatrix& x, double alpha) {
  ObservationMatrix out = x;
  for (std::size_t c = 0; c < x.cols; ++c) out.set_column(c, ewma_smooth(x.column(c), alpha));
  return out;
}

ObservationMatrix ChannelStats::apply(const ObservationMatrix& x) const {
  if (x.cols != mean.size()) throw DataError("channel count does not match normalization statistics");
  ObservationMatrix out = x;
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c)
      if (!constant[c]) out.at(r, c) = (x.at(r, c) - mean[c]) / stddev[c];
  return out;
}

ChannelStats fit_channel_stats(const Corpus& corpus) {
  const std::size_t m = corpus.n_channels();
  if (m == 0) throw DataError("cannot normalize an empty corpus");
  std::vector<double> sum(m, 0.0);
  std::size_t count = 0;
  for (const auto& ev : corpus.events) {
    const auto& x = ev.observation;
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t c = 0; c < m; ++c) sum[c] += x.at(r, c);
    count += x.rows;
  }
  ChannelStats stats;
  stats.mean.resize(m);
  for (std::size_t c = 0; c < m; ++c) stats.mean[c] = sum[c] / static_cast<double>(count);
  std::vector<double> sq(m, 0.0);
  for (const auto& ev : corpus.events) {
    const auto& x = ev.observation;
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t c = 0; c < m; ++c) {
        const double d = x.at(r, c) - stats.mean[c];
        sq[c] += d * d;
      }
  }
  stats.stddev.resize(m);
  stats.constant.resize(m);
  for (std::size_t c = 0; c < m; ++c) {
    stats.stddev[c] = std::sqrt(sq[c] / static_cast<double>(count));
    stats.constant[c] = !(stats.stddev[c] > 1e-12 * std::max(1.0, std::abs(stats.mean[c])));
  }
  return stats;
}

NormalizedCorpus znormalize(const Corpus& corpus) {
  NormalizedCorpus out{corpus, fit_channel_stats(corpus)};
  for (auto& ev : out.corpus.events) ev.observation = out.stats.apply(ev.observation);
  return out;
}

namespace {

double interpolate(std::span<const double> series, std::size_t index_num, std::size_t index_den) {
  // position = index_num / index_den, computed from exact integers.
  const std::size_t lo = index_num / index_den;
  const std::size_t rem = index_num % index_den;
  if (rem == 0 || lo + 1 >= series.size()) return series[std::min(lo, series.size() - 1)];
  const double frac = static_cast<double>(rem) / static_cast<double>(index_den);
  return series[lo] + frac * (series[lo + 1] - series[lo]);
}

}  // namespace

std::vector<double> resample_series(std::span<const double> series, std::size_t target_len) {
  return resample_prefix(series, series.size(), target_len);
}

std::vector<double> resample_prefix(std::span<const double> prefix, std::size_t full_len, std::size_t target_len) {
  if (target_len < 2) throw ConfigError("resample target length must be at least 2");
  if (full_len < 2) throw DataError("cannot resample a series with fewer than 2 samples");
  if (prefix.empty() || prefix.size() > full_len) throw ConfigError("resample prefix length out of range");
  if (full_len == target_len) return {prefix.begin(), prefix.end()};
  // Grid point i sits at i * (full_len - 1) / (target_len - 1).
  const std::size_t den = target_len - 1;
  const std::size_t step = full_len - 1;
  const std::size_t last = prefix.size() - 1;
  std::vector<double> out;
  out.reserve(target_len);
  for (std::size_t i = 0; i < target_len; ++i) {
    const std::size_t num = i * step;
    if (num > last * den) break;
    out.push_back(interpolate(prefix, num, den));
  }
  return out;
}

ObservationMatrix resample_event(const ObservationMatrix& x, std::size_t target_len) {
  if (x.rows < 2) throw DataError("cannot resample an event with fewer than 2 rows");
  ObservationMatrix out(target_len, x.cols, x.sample_hz, x.channel_names);
  for (std::size_t c = 0; c < x.cols; ++c) out.set_column(c, resample_series(x.column(c), target_len));
  return out;
}

}  // namespace spiketurn
