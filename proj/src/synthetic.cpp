#include "spiketurn/synthetic.hpp"

#include "spiketurn/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace spiketurn {

using nlohmann::json;

void SyntheticConfig::validate() const {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(std::string("synthetic.") + field + ": " + what);
  };
  require(n_subjects >= 2, "n_subjects", "must be at least 2");
  require(events_per_subject >= 10, "events_per_subject", "must be at least 10");
  require(n_channels >= 4, "n_channels", "must be at least 4");
  require(give_prior > 0.0 && give_prior < 1.0, "give_prior", "must lie in (0, 1)");
  require(sample_hz > 0.0, "sample_hz", "must be positive");
  require(min_len >= 2, "min_len", "must be at least 2");
  require(max_len >= min_len, "max_len", "must be at least min_len");
  require(ar_coeff >= 0.0 && ar_coeff < 1.0, "ar_coeff", "must lie in [0, 1)");
  require(noise_std > 0.0, "noise_std", "must be positive");
  require(subject_offset_std >= 0.0, "subject_offset_std", "must be non-negative");
  require(motif_amplitude >= 0.0, "motif_amplitude", "must be non-negative");
  require(onset_amplitude >= 0.0, "onset_amplitude", "must be non-negative");
  for (int c : motif_channels) require(c >= 0 && c < n_channels, "motif_channels", "index out of range");
  for (int c : onset_channels) require(c >= 0 && c < n_channels, "onset_channels", "index out of range");
  require(trials_per_subject >= 0, "trials_per_subject", "must be non-negative");
  require(n_objects >= 2, "n_objects", "must be at least 2");
  require(object_noise >= 0.0 && object_noise <= 1.0, "object_noise", "must lie in [0, 1]");
  require(!object_script.empty(), "object_script", "must not be empty");
  for (int o : object_script) require(o >= 1 && o <= n_objects, "object_script", "object id out of range");
}

void to_json(json& j, const SyntheticConfig& c) {
  j = json{{"n_subjects", c.n_subjects},
           {"events_per_subject", c.events_per_subject},
           {"n_channels", c.n_channels},
           {"give_prior", c.give_prior},
           {"sample_hz", c.sample_hz},
           {"min_len", c.min_len},
           {"max_len", c.max_len},
           {"ar_coeff", c.ar_coeff},
           {"noise_std", c.noise_std},
           {"subject_offset_std", c.subject_offset_std},
           {"motif_amplitude", c.motif_amplitude},
           {"motif_freq_hz", c.motif_freq_hz},
           {"motif_channels", c.motif_channels},
           {"onset_amplitude", c.onset_amplitude},
           {"onset_channels", c.onset_channels},
           {"trials_per_subject", c.trials_per_subject},
           {"n_objects", c.n_objects},
           {"object_noise", c.object_noise},
           {"object_script", c.object_script}};
}

SyntheticConfig synthetic_config_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  SyntheticConfig c;
  json defaults = c;
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError(where + "." + key + ": unknown field");
    if (value.type() != defaults[key].type() &&
        !(value.is_number() && defaults[key].is_number()))
      throw ConfigError(where + "." + key + ": wrong type");
  }
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const json::exception&) {
      throw ConfigError(where + "." + key + ": wrong type");
    }
  };
  get("n_subjects", c.n_subjects);
  get("events_per_subject", c.events_per_subject);
  get("n_channels", c.n_channels);
  get("give_prior", c.give_prior);
  get("sample_hz", c.sample_hz);
  get("min_len", c.min_len);
  get("max_len", c.max_len);
  get("ar_coeff", c.ar_coeff);
  get("noise_std", c.noise_std);
  get("subject_offset_std", c.subject_offset_std);
  get("motif_amplitude", c.motif_amplitude);
  get("motif_freq_hz", c.motif_freq_hz);
  get("motif_channels", c.motif_channels);
  get("onset_amplitude", c.onset_amplitude);
  get("onset_channels", c.onset_channels);
  get("trials_per_subject", c.trials_per_subject);
  get("n_objects", c.n_objects);
  get("object_noise", c.object_noise);
  get("object_script", c.object_script);
  c.validate();
  return c;
}

namespace {

std::string numbered(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%02d", prefix, n);
  return buf;
}

}  // namespace

Corpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<std::string> channels;
  for (int c = 0; c < config.n_channels; ++c) channels.push_back(numbered("ch", c));

  Corpus corpus;
  const double innovation = config.noise_std * std::sqrt(1.0 - config.ar_coeff * config.ar_coeff);
  for (int s = 0; s < config.n_subjects; ++s) {
    std::mt19937_64 rng(derive_seed(seed, kStreamSynthetic, static_cast<std::uint64_t>(s)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::string subject = numbered("s", s + 1);

    std::vector<double> offset(config.n_channels);
    for (double& o : offset) o = config.subject_offset_std * normal(rng);

    // Exact per-subject class count, then shuffled.
    const int n_give = static_cast<int>(std::lround(config.give_prior * config.events_per_subject));
    std::vector<int> labels(config.events_per_subject, 0);
    std::fill(labels.begin(), labels.begin() + n_give, 1);
    std::shuffle(labels.begin(), labels.end(), rng);

    std::uniform_int_distribution<int> length_dist(config.min_len, config.max_len);
    for (int e = 0; e < config.events_per_subject; ++e) {
      const auto len = static_cast<std::size_t>(length_dist(rng));
      ObservationMatrix x(len, config.n_channels, config.sample_hz, channels);
      for (int c = 0; c < config.n_channels; ++c) {
        double state = config.noise_std * normal(rng);
        for (std::size_t r = 0; r < len; ++r) {
          if (r > 0) state = config.ar_coeff * state + innovation * normal(rng);
          x.at(r, c) = offset[c] + state;
        }
      }
      if (labels[e] == 1) {
        for (int c : config.onset_channels)
          for (std::size_t r = 0; r < len; ++r) x.at(r, c) += config.onset_amplitude;
        const auto width = static_cast<std::size_t>(std::ceil(0.4 * static_cast<double>(len)));
        const std::size_t start = len - width;
        for (int c : config.motif_channels)
          for (std::size_t r = start; r < len; ++r) {
            const double progress = static_cast<double>(r - start + 1) / static_cast<double>(width);
            const double phase = 2.0 * std::numbers::pi * config.motif_freq_hz * static_cast<double>(r - start) /
                                 config.sample_hz;
            x.at(r, c) += config.motif_amplitude * (progress + 0.5 * std::sin(phase));
          }
      }
      TurnEvent ev;
      ev.event_id = subject + "_e" + std::to_string(e + 1);
      ev.kind = labels[e] == 1 ? TurnKind::Give : TurnKind::Keep;
      ev.subject_id = subject;
      ev.start_time = 0.0;
      ev.end_time = static_cast<double>(len) / config.sample_hz;
      ev.observation = std::move(x);
      corpus.events.push_back(std::move(ev));
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> object_dist(1, config.n_objects);
    for (int t = 0; t < config.trials_per_subject; ++t) {
      ObjectTrial trial{subject + "/t" + std::to_string(t + 1), subject, {}};
      for (int planned : config.object_script)
        trial.objects.push_back(unit(rng) < config.object_noise ? object_dist(rng) : planned);
      corpus.trials.push_back(std::move(trial));
    }
  }
  corpus.index_subjects();
  corpus.validate();
  return corpus;
}

}  // namespace spiketurn
