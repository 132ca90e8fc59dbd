"""Scikit-learn style estimator facade over the training engine.

``PairExtractor`` follows the fit/predict/score protocol with ``get_params``
/ ``set_params`` from sklearn's ``BaseEstimator``, so it clones and composes
with standard model-selection utilities. X is a list of ``Document``s; labels
travel on the documents themselves, so ``y`` is always ``None``.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import Document, build_vocab
from .metrics import MetricsReport, Predictions, decode
from .train import TrainConfig, build_model, evaluate_model, fit


def check_documents(X) -> list[Document]:
    """Validate that X is a nonempty sequence of Documents."""
    docs = list(X)
    if not docs:
        raise ValueError("expected a nonempty sequence of Documents")
    for i, doc in enumerate(docs):
        if not isinstance(doc, Document):
            raise TypeError(f"X[{i}] is {type(doc).__name__}, expected Document")
    return docs


class PairExtractor(BaseEstimator):
    """Joint clause/pair extractor with the estimator interface.

    Fitting builds the vocabulary from the training documents (unseen test
    tokens map to the unknown id), trains with seeded AdamW, and keeps the
    best checkpoint by dev ECPE F1 when ``dev_fraction`` > 0.
    """

    def __init__(self, hidden=300, embed_dim=64, dim_pos=50, max_offset=10,
                 mask_dim=64, lambda1=0.4, lambda2=0.4, learning_rate=1e-3,
                 batch_size=4, epochs=30, dropout=0.1, weight_decay=0.01,
                 threshold=0.5, encoding="pfn", ita="both", aux=True,
                 literal_loss=False, share_gate_params=False, detach_side="none",
                 dev_fraction=0.0, seed=0):
        self.hidden = hidden
        self.embed_dim = embed_dim
        self.dim_pos = dim_pos
        self.max_offset = max_offset
        self.mask_dim = mask_dim
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.dropout = dropout
        self.weight_decay = weight_decay
        self.threshold = threshold
        self.encoding = encoding
        self.ita = ita
        self.aux = aux
        self.literal_loss = literal_loss
        self.share_gate_params = share_gate_params
        self.detach_side = detach_side
        self.dev_fraction = dev_fraction
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            lambda1=self.lambda1, lambda2=self.lambda2,
            learning_rate=self.learning_rate, batch_size=self.batch_size,
            epochs=self.epochs, dropout_rate=self.dropout, seed=self.seed,
            weight_decay=self.weight_decay, threshold=self.threshold,
            encoding=self.encoding, ita=self.ita, aux=self.aux,
            literal_loss=self.literal_loss,
            share_gate_params=self.share_gate_params,
            detach_side=self.detach_side,
        )

    def fit(self, X, y=None):
        docs = check_documents(X)
        cfg = self._train_config()
        n_dev = int(len(docs) * self.dev_fraction)
        dev_docs = docs[-n_dev:] if n_dev else None
        train_docs = docs[:-n_dev] if n_dev else docs
        vocab = build_vocab(train_docs)
        model = build_model(cfg, hidden=self.hidden, embed_dim=self.embed_dim,
                            dim_pos=self.dim_pos, max_offset=self.max_offset,
                            mask_dim=self.mask_dim, vocab=vocab)
        result = fit(model, train_docs, cfg, dev_docs=dev_docs)
        self.model_ = result.model
        self.log_ = result.log
        self.best_epoch_ = result.best_epoch
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("PairExtractor is not fitted; call fit first")

    def predict(self, X) -> list[Predictions]:
        """Thresholded emotion/cause/pair predictions per document."""
        self._check_fitted()
        docs = check_documents(X)
        out = []
        for doc in docs:
            scores = self.model_.forward(doc, training=False).scores
            out.append(decode(scores, self.threshold))
        return out

    def report(self, X) -> MetricsReport:
        self._check_fitted()
        return evaluate_model(self.model_, check_documents(X), self.threshold)

    def score(self, X, y=None) -> float:
        """Micro-averaged ECPE F1 against the documents' gold pairs."""
        return self.report(X).ecpe.f1
