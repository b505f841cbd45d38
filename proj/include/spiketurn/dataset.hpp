#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spiketurn {

enum class Agent { Human, Robot };

// One step of a collaborative task, performed by a single agent.
struct Subtask {
  Agent agent{Agent::Human};
  std::string action_label;
  std::vector<double> object_probs;  // one entry per task object, sums to 1
  double begin_time{0.0};            // seconds
  double finish_time{0.0};           // seconds

  void validate() const;
};

enum class TurnKind { Keep = 0, Give = 1 };

// L x M signal window, row-major: data[r * cols + c] is channel c at sample r.
struct ObservationMatrix {
  std::size_t rows{0};
  std::size_t cols{0};
  std::vector<double> data;
  double sample_hz{20.0};
  std::vector<std::string> channel_names;

  ObservationMatrix() = default;
  ObservationMatrix(std::size_t rows, std::size_t cols, double sample_hz,
                    std::vector<std::string> channel_names);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  // Throws DataError on empty shape, size mismatch or non-finite entries.
  void validate() const;

  bool operator==(const ObservationMatrix&) const = default;
};

struct TurnEvent {
  std::string event_id;
  TurnKind kind{TurnKind::Keep};
  double start_time{0.0};
  double end_time{0.0};
  std::string subject_id;
  ObservationMatrix observation;

  int label() const { return kind == TurnKind::Give ? 1 : 0; }
};

// Ordered object requests of one trial. The subject is the trial_id prefix
// before the first '/', or the whole trial_id when there is none.
struct ObjectTrial {
  std::string trial_id;
  std::string subject_id;
  std::vector<int> objects;  // ids in 1..n_objects
};

struct Corpus {
  std::vector<TurnEvent> events;
  std::vector<std::string> subjects;  // first-appearance order
  std::vector<ObjectTrial> trials;

  std::size_t n_channels() const { return events.empty() ? 0 : events.front().observation.cols; }
  const std::vector<std::string>& channel_names() const;
  std::size_t count_label(int label) const;

  // Rebuilds `subjects` from the events and trials.
  void index_subjects();
  void validate() const;
};

std::string subject_of_trial(const std::string& trial_id);

// JSON Lines corpus, one event per line:
// {"event_id", "subject", "label", "sample_hz", "channels", "data"}.
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// CSV `trial_id,step,object_id` with a header row.
std::vector<ObjectTrial> load_object_sequences(const std::filesystem::path& path, int n_objects = 6);
void save_object_sequences(const std::vector<ObjectTrial>& trials, const std::filesystem::path& path);

// Number of rows kept for a fraction tau of L rows: max(1, ceil(tau * L)).
std::size_t partial_rows(std::size_t rows, double tau);

// First partial_rows(L, tau) rows of x. tau must lie in (0, 1].
ObservationMatrix slice_partial(const ObservationMatrix& x, double tau);

// out[0] = raw[0]; out[t] = alpha * raw[t] + (1 - alpha) * out[t - 1].
std::vector<double> ewma_smooth(std::span<const double> series, double alpha);
ObservationMatrix ewma_smooth(const ObservationMatrix& x, double alpha);

// Grand mean and pooled (population) standard deviation per channel.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> constant;  // zero-variance channels pass through unscaled

  ObservationMatrix apply(const ObservationMatrix& x) const;
  bool operator==(const ChannelStats&) const = default;
};

ChannelStats fit_channel_stats(const Corpus& corpus);

struct NormalizedCorpus {
  Corpus corpus;
  ChannelStats stats;
};
NormalizedCorpus znormalize(const Corpus& corpus);

// Linear interpolation along time to exactly target_len rows.
ObservationMatrix resample_event(const ObservationMatrix& x, std::size_t target_len);
std::vector<double> resample_series(std::span<const double> series, std::size_t target_len);

// Resamples the leading `prefix.size()` samples of a series whose full length
// is full_len, on the same grid resample_series(full, target_len) would use.
// Only grid points that fall inside the prefix are produced, so no sample past
// the prefix is ever read. With the whole series this equals resample_series.
std::vector<double> resample_prefix(std::span<const double> prefix, std::size_t full_len,
                                    std::size_t target_len);

}  // namespace spiketurn
