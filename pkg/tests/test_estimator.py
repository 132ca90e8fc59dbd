import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ecpair.data import SynthConfig, generate_synthetic
from ecpair.estimator import PairExtractor, check_documents
from ecpair.metrics import Predictions


def tiny_extractor(**overrides):
    kwargs = dict(hidden=12, embed_dim=12, dim_pos=6, max_offset=4, mask_dim=6,
                  epochs=25, learning_rate=5e-3, dropout=0.0, seed=0)
    kwargs.update(overrides)
    return PairExtractor(**kwargs)


def corpus_docs(num_docs=12, seed=0):
    cfg = SynthConfig(num_docs=num_docs, clauses_per_doc=(4, 6), tokens_per_clause=(2, 4))
    return generate_synthetic(cfg, seed=seed).documents


def test_get_params_set_params_clone():
    est = tiny_extractor(lambda1=0.3)
    params = est.get_params()
    assert params["lambda1"] == 0.3
    assert params["hidden"] == 12
    est.set_params(threshold=0.4)
    assert est.threshold == 0.4
    duplicate = clone(est)
    assert duplicate.get_params() == est.get_params()


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        tiny_extractor().predict(corpus_docs(2))


def test_check_documents_validation():
    with pytest.raises(ValueError, match="nonempty"):
        check_documents([])
    with pytest.raises(TypeError, match="X\\[0\\]"):
        check_documents(["not a document"])


def test_fit_predict_score_round_trip():
    docs = corpus_docs()
    est = tiny_extractor().fit(docs)
    preds = est.predict(docs)
    assert len(preds) == len(docs)
    assert all(isinstance(p, Predictions) for p in preds)
    f1 = est.score(docs)
    assert 0.0 <= f1 <= 1.0
    assert f1 == pytest.approx(est.report(docs).ecpe.f1)
    assert len(est.log_) == est.epochs + 1


def test_fit_learns_on_training_data():
    docs = corpus_docs(num_docs=10, seed=3)
    est = tiny_extractor(epochs=60, learning_rate=8e-3).fit(docs)
    assert est.score(docs) > 0.8


def test_dev_fraction_tracks_best_epoch():
    docs = corpus_docs(num_docs=10, seed=4)
    est = tiny_extractor(epochs=4, dev_fraction=0.3).fit(docs)
    assert hasattr(est, "best_epoch_")
    assert any("dev" in entry for entry in est.log_)


def test_unseen_tokens_map_to_unknown():
    docs = corpus_docs(num_docs=8, seed=5)
    est = tiny_extractor(epochs=1).fit(docs)
    mutated = corpus_docs(num_docs=2, seed=99)
    preds = est.predict(mutated)  # vocabulary came from the training docs only
    assert len(preds) == 2
