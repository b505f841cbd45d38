// Python bindings: corpus access, TTSNet training and prediction, metrics,
// single-neuron and STDP primitives, and full experiment runs.
#include "spiketurn/common.hpp"
#include "spiketurn/experiment.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using nlohmann::json;
using namespace spiketurn;

namespace {

// Config and summary objects cross the boundary as JSON text; the Python
// package converts them to and from dicts.
json parse_config(const std::string& text, const char* what) {
  if (text.empty()) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

py::array_t<double> to_array(const ObservationMatrix& x) {
  py::array_t<double> out({x.rows, x.cols});
  std::copy(x.data.begin(), x.data.end(), out.mutable_data());
  return out;
}

ObservationMatrix from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                             std::vector<std::string> channels, double sample_hz) {
  if (a.ndim() != 2) throw DataError("observation must be a 2-D array (rows x channels)");
  ObservationMatrix x(a.shape(0), a.shape(1), sample_hz, std::move(channels));
  std::copy(a.data(), a.data() + a.size(), x.data.begin());
  x.validate();
  return x;
}

py::dict event_dict(const TurnEvent& e) {
  py::dict d;
  d["event_id"] = e.event_id;
  d["subject_id"] = e.subject_id;
  d["label"] = e.label();
  d["start_time"] = e.start_time;
  d["end_time"] = e.end_time;
  d["sample_hz"] = e.observation.sample_hz;
  d["channels"] = e.observation.channel_names;
  d["observation"] = to_array(e.observation);
  return d;
}

}  // namespace

PYBIND11_MODULE(_spiketurn, m) {
  m.doc() = "Early turn-taking prediction with spiking neural networks";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  // ---------------------------------------------------------------- metrics
  m.def("f1", py::overload_cast<std::size_t, std::size_t, std::size_t>(&f1), py::arg("tp"), py::arg("fp"),
        py::arg("fn"));
  m.def(
      "weighted_f1",
      [](const std::vector<int>& truth, const std::vector<int>& pred, int n_classes) {
        return weighted_f1(truth, pred, n_classes);
      },
      py::arg("truth"), py::arg("pred"), py::arg("n_classes"));
  m.def(
      "auc", [](const std::vector<double>& f1_values) { return auc(f1_values); }, py::arg("f1_values"));
  m.def(
      "median", [](const std::vector<double>& v) { return median(v); }, py::arg("values"));
  m.def(
      "mad", [](const std::vector<double>& v) { return mad(v); }, py::arg("values"));
  m.def(
      "cohen_kappa", [](const std::vector<int>& a, const std::vector<int>& b) { return cohen_kappa(a, b); },
      py::arg("a"), py::arg("b"));
  m.def("default_taus", &default_taus);

  // -------------------------------------------------------------- snn core
  m.def(
      "spike_times",
      [](const std::string& preset, double current, double duration_ms, double dt_ms) {
        return single_neuron_spike_times(NeuronKernel::preset(preset_from_string(preset)), current, duration_ms,
                                         dt_ms);
      },
      py::arg("preset"), py::arg("current"), py::arg("duration_ms") = 500.0, py::arg("dt_ms") = 0.1,
      "Spike times (ms) of an isolated neuron with kernel RS, IB, CH, FS or LTS.");
  m.def(
      "stdp_weight_change",
      [](int dt_ms, double a_plus, double a_minus, double tau_ms) {
        StdpParams p;
        p.a_plus = a_plus;
        p.a_minus = a_minus;
        p.tau_plus_ms = p.tau_minus_ms = tau_ms;
        return stdp_weight_change(dt_ms, p);
      },
      py::arg("dt_ms"), py::arg("a_plus") = 0.1, py::arg("a_minus") = 0.12, py::arg("tau_ms") = 20.0);

  py::class_<Quantizer>(m, "Quantizer")
      .def(py::init([](double r1, double r99, int levels) { return Quantizer{r1, r99, levels}; }), py::arg("r1"),
           py::arg("r99"), py::arg("levels") = 40)
      .def_readonly("r1", &Quantizer::r1)
      .def_readonly("r99", &Quantizer::r99)
      .def_readonly("levels", &Quantizer::levels)
      .def("quantize", py::overload_cast<double>(&Quantizer::quantize, py::const_), py::arg("x"));
  m.def(
      "fit_quantizer", [](const std::vector<double>& v, int levels) { return fit_quantizer(v, levels); },
      py::arg("values"), py::arg("levels") = 40);

  // ---------------------------------------------------------------- corpus
  py::class_<Corpus>(m, "Corpus")
      .def_static("load", &load_corpus, py::arg("path"))
      .def_static(
          "synthetic",
          [](const std::string& config, std::uint64_t seed) {
            return generate_synthetic(synthetic_config_from_json(parse_config(config, "synthetic")), seed);
          },
          py::arg("config") = "", py::arg("seed") = 7)
      .def("save", [](const Corpus& c, const std::filesystem::path& p) { save_corpus(c, p); }, py::arg("path"))
      .def("save_objects",
           [](const Corpus& c, const std::filesystem::path& p) { save_object_sequences(c.trials, p); },
           py::arg("path"))
      .def("__len__", [](const Corpus& c) { return c.events.size(); })
      .def("__getitem__",
           [](const Corpus& c, std::ptrdiff_t i) {
             const auto n = static_cast<std::ptrdiff_t>(c.events.size());
             if (i < 0) i += n;
             if (i < 0 || i >= n) throw py::index_error();
             return event_dict(c.events[i]);
           })
      .def_property_readonly("subjects", [](const Corpus& c) { return c.subjects; })
      .def_property_readonly("channels", [](const Corpus& c) { return c.channel_names(); })
      .def_property_readonly("labels",
                             [](const Corpus& c) {
                               std::vector<int> out;
                               for (const auto& e : c.events) out.push_back(e.label());
                               return out;
                             })
      .def_property_readonly("object_trials", [](const Corpus& c) {
        std::vector<std::pair<std::string, std::vector<int>>> out;
        for (const auto& t : c.trials) out.emplace_back(t.trial_id, t.objects);
        return out;
      });

  // ---------------------------------------------------------------- ttsnet
  py::class_<TtsnetModel>(m, "TtsnetModel")
      .def_static(
          "train",
          [](const Corpus& corpus, const std::string& config, std::uint64_t seed, int threads) {
            const auto c = ttsnet_config_from_json(parse_config(config, "ttsnet"));
            py::gil_scoped_release release;
            return TtsnetModel::train(corpus, c, seed, threads);
          },
          py::arg("corpus"), py::arg("config") = "", py::arg("seed") = 7, py::arg("threads") = 1)
      .def_static("load", &TtsnetModel::load, py::arg("path"))
      .def("save", &TtsnetModel::save, py::arg("path"))
      .def_property_readonly("channels", [](const TtsnetModel& t) { return t.pipeline().channel_names(); })
      .def_property_readonly("n_networks", [](const TtsnetModel& t) { return t.channels().size(); })
      .def_property_readonly("config", [](const TtsnetModel& t) { return to_json(t.config()).dump(); })
      .def(
          "predict",
          [](const TtsnetModel& t, const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
             double tau, double sample_hz) {
            const auto p = t.predict(from_array(x, t.pipeline().channel_names(), sample_hz), tau);
            return py::make_tuple(p.label, p.score);
          },
          py::arg("observation"), py::arg("tau") = 1.0, py::arg("sample_hz") = 20.0,
          "(label, score) for the first tau of the observation; label 1 is Give.")
      .def(
          "descriptor",
          [](const TtsnetModel& t, const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
             double tau, double sample_hz) {
            return t.descriptor(from_array(x, t.pipeline().channel_names(), sample_hz), tau);
          },
          py::arg("observation"), py::arg("tau") = 1.0, py::arg("sample_hz") = 20.0)
      .def(
          "firing_maps",
          [](const TtsnetModel& t, const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
             double tau, double sample_hz) {
            std::vector<std::vector<std::pair<int, int>>> out;
            for (const auto& map : t.firing_maps(from_array(x, t.pipeline().channel_names(), sample_hz), tau)) {
              auto& raster = out.emplace_back();
              for (const auto& f : map.firings) raster.emplace_back(f.neuron, f.time_ms);
            }
            return out;
          },
          py::arg("observation"), py::arg("tau") = 1.0, py::arg("sample_hz") = 20.0,
          "One list of (neuron, time_ms) firings per network.");

  // ------------------------------------------------------------ experiment
  m.def(
      "run_experiment",
      [](const std::string& config, const std::string& out_dir, int threads) {
        const auto c = experiment_config_from_json(parse_config(config, "experiment"));
        ExperimentReport report;
        {
          py::gil_scoped_release release;
          report = run_experiment(c, out_dir, threads);
        }
        return report.summary.dump();
      },
      py::arg("config") = "", py::arg("out_dir") = "", py::arg("threads") = 1,
      "Leave-one-subject-out evaluation; returns the summary as JSON text.");
  m.def(
      "default_config", [] { return to_json(ExperimentConfig{}).dump(); },
      "The full default experiment config as JSON text.");
}
