import json

import numpy as np
import pytest

import spiketurn as st


def small_corpus():
    return st.synthetic_corpus({"n_subjects": 3, "events_per_subject": 16, "trials_per_subject": 2}, seed=3)


def test_metrics():
    assert st.f1(8, 2, 2) == pytest.approx(0.8)
    assert st.f1(0, 5, 0) == 0.0
    assert st.auc([0.5] * 10) == pytest.approx(0.5)
    assert st.auc([0.0] * 9 + [1.0]) == pytest.approx(0.1)
    assert st.mad([0.8, 0.9, 1.0]) == pytest.approx(0.1)
    assert st.cohen_kappa([0, 0, 1, 1], [0, 1, 1, 1]) == pytest.approx(0.5)
    assert st.default_taus() == pytest.approx([0.1 * k for k in range(1, 11)])


def test_metric_errors():
    with pytest.raises(st.DataError):
        st.cohen_kappa([0, 1], [0])
    with pytest.raises(ValueError):
        st.mad([])


def test_neuron_and_stdp():
    spikes = st.spike_times("RS", 10.0, 500.0, 0.1)
    assert len(spikes) > 0
    assert all(0 <= t <= 500 for t in spikes)
    assert st.stdp_weight_change(0) == pytest.approx(0.1)
    assert st.stdp_weight_change(-20) == pytest.approx(-0.12 * np.exp(-1.0))
    q = st.Quantizer(0.0, 1.0)
    assert q.quantize(-5.0) == 0
    assert q.quantize(5.0) == 39


def test_corpus_access(tmp_path):
    corpus = small_corpus()
    assert len(corpus) == 48
    assert corpus.subjects == ["s01", "s02", "s03"]
    event = corpus[0]
    assert event["observation"].shape[1] == len(corpus.channels)
    assert event["label"] in (0, 1)
    corpus.save(tmp_path / "c.jsonl")
    again = st.Corpus.load(tmp_path / "c.jsonl")
    assert again.labels == corpus.labels
    with pytest.raises(IndexError):
        corpus[len(corpus)]


def test_ttsnet_train_predict_roundtrip(tmp_path):
    corpus = small_corpus()
    cfg = {"num_features": 2, "presentations": 20, "svm_c_grid": [1.0], "cv_folds": 2}
    model = st.train_ttsnet(corpus, cfg, seed=5)
    assert model.n_networks == 2
    x = corpus[0]["observation"]
    label, score = model.predict(x, 0.5)
    assert label in (0, 1) and np.isfinite(score)
    assert len(model.descriptor(x, 1.0)) == 2 * 25
    assert len(model.firing_maps(x, 1.0)) == 2
    model.save(tmp_path / "m.json")
    loaded = st.TtsnetModel.load(tmp_path / "m.json")
    assert loaded.predict(x, 0.5) == (label, score)
    with pytest.raises(st.DataError):
        model.predict(np.zeros((5, x.shape[1] + 1)), 1.0)


def test_bad_config():
    with pytest.raises(st.ConfigError):
        st.synthetic_corpus({"no_such_field": 1})


def test_run_experiment(tmp_path):
    cfg = {
        "seed": 3,
        "synthetic": {"n_subjects": 3, "events_per_subject": 16, "trials_per_subject": 2},
        "methods": ["ttsnet", "always_give"],
        "ttsnet": {"num_features": 2, "presentations": 20, "svm_c_grid": [1.0], "cv_folds": 2},
    }
    summary = st.run_experiment(cfg, tmp_path)
    assert set(summary["methods"]) == {"ttsnet", "always_give"}
    on_disk = json.loads((tmp_path / "summary.json").read_text())
    assert on_disk == summary
    assert (tmp_path / "curves" / "ttsnet.csv").read_text().startswith("tau,f1_mean,f1_std\n")
    assert "seed" in st.default_config()
