"""Early turn-taking prediction with spiking neural networks."""

import json as _json

from ._spiketurn import (
    ConfigError,
    Corpus,
    DataError,
    NumericalError,
    Quantizer,
    TtsnetModel,
    auc,
    cohen_kappa,
    default_taus,
    f1,
    fit_quantizer,
    mad,
    median,
    spike_times,
    stdp_weight_change,
    weighted_f1,
)
from . import _spiketurn

__all__ = [
    "ConfigError",
    "Corpus",
    "DataError",
    "NumericalError",
    "Quantizer",
    "TtsnetModel",
    "auc",
    "cohen_kappa",
    "default_config",
    "default_taus",
    "f1",
    "fit_quantizer",
    "mad",
    "median",
    "run_experiment",
    "spike_times",
    "stdp_weight_change",
    "synthetic_corpus",
    "train_ttsnet",
    "weighted_f1",
]


def _dump(config):
    return "" if config is None else _json.dumps(config)


def default_config():
    """Full default experiment configuration as a dict."""
    return _json.loads(_spiketurn.default_config())


def synthetic_corpus(config=None, seed=7):
    """Generate a synthetic corpus; `config` overrides synthetic-generator fields."""
    return Corpus.synthetic(_dump(config), seed)


def train_ttsnet(corpus, config=None, seed=7, threads=1):
    """Train a TTSNet model; `config` overrides fields of the ttsnet section."""
    return TtsnetModel.train(corpus, _dump(config), seed, threads)


def run_experiment(config=None, out_dir="", threads=1):
    """Leave-one-subject-out evaluation; returns the summary dict."""
    return _json.loads(_spiketurn.run_experiment(_dump(config), str(out_dir), threads))
