"""Task-aligned representations, prediction heads, and supervised losses.

Emotion and cause heads score clauses from [task feature; interaction
feature]; the pair head scores every ordered clause pair from the summed
features of both sides plus a relative-position embedding.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad


class FeedForward:
    """affine -> tanh -> affine scoring network."""

    def __init__(self, name: str, n_in: int, n_hidden: int, n_out: int,
                 params: ad.ParameterStore, rng: np.random.Generator):
        def affine(layer, a, b):
            limit = np.sqrt(6.0 / (a + b))
            w = params.create(f"{name}/{layer}/weight", rng.uniform(-limit, limit, (a, b)))
            bias = params.create(f"{name}/{layer}/bias", np.zeros(b))
            return w, bias

        self.hidden_layer = affine("hidden", n_in, n_hidden)
        self.out_layer = affine("out", n_hidden, n_out)

    def __call__(self, x: ad.Tensor) -> ad.Tensor:
        w, b = self.hidden_layer
        h = ad.tanh(ad.linear(x, w.tensor(), b.tensor()))
        w, b = self.out_layer
        return ad.linear(h, w.tensor(), b.tensor())


def task_representations(h_e: ad.Tensor, h_c: ad.Tensor, h_s: ad.Tensor) -> tuple[ad.Tensor, ad.Tensor]:
    """r_e[i] = [h_e[i]; h_s[i]] and r_c[i] = [h_c[i]; h_s[i]]."""
    return ad.concat([h_e, h_s]), ad.concat([h_c, h_s])


def pair_representation(i: int, j: int, h_e: ad.Tensor, h_c: ad.Tensor,
                        h_s: ad.Tensor, e_ij: ad.Tensor) -> ad.Tensor:
    """[h_e[i] + h_s[i]; h_c[j] + h_s[j]; e_ij] for a single ordered pair."""
    he_i = ad.add(ad.take_row(h_e, i), ad.take_row(h_s, i))
    hc_j = ad.add(ad.take_row(h_c, j), ad.take_row(h_s, j))
    return ad.concat([he_i, hc_j, e_ij])


def pair_grid(h_e: ad.Tensor, h_c: ad.Tensor, h_s: ad.Tensor,
              pos_grid: ad.Tensor) -> ad.Tensor:
    """(N, N, 2*hidden + dim_pos) representations for all ordered pairs."""
    n = h_e.shape[0]
    he = ad.expand_mid(ad.add(h_e, h_s), n)
    hc = ad.expand_front(ad.add(h_c, h_s), n)
    return ad.concat([he, hc, pos_grid])


def predict_scores(ffn: FeedForward, reps: ad.Tensor) -> ad.Tensor:
    """Sigmoid scores with the trailing singleton output axis dropped."""
    logits = ffn(reps)
    return ad.sigmoid(ad.reshape(logits, logits.shape[:-1]))


def bce_sum(scores: ad.Tensor, gold: np.ndarray, literal: bool = False) -> ad.Tensor:
    """Summed binary cross-entropy against a 0/1 indicator array.

    ``literal`` keeps only the positive-class term -sum(y * log(yhat)); the
    default adds the complement term, which is required for trainability.
    """
    gold = np.asarray(gold, dtype=np.float64)
    if gold.shape != scores.shape:
        raise ad.ShapeError(f"bce_sum: gold {gold.shape} vs scores {scores.shape}")
    pos = ad.mul(ad.Tensor(gold), ad.log(scores))
    if literal:
        return ad.scale(ad.total(pos), -1.0)
    ones = ad.Tensor(np.ones_like(gold))
    neg = ad.mul(ad.Tensor(1.0 - gold), ad.log(ad.sub(ones, scores)))
    return ad.scale(ad.total(ad.add(pos, neg)), -1.0)


def indicator(indices, shape) -> np.ndarray:
    out = np.zeros(shape)
    for idx in indices:
        out[idx] = 1.0
    return out


def aux_loss(y_e: ad.Tensor, y_c: ad.Tensor, emotions, causes,
             literal: bool = False) -> ad.Tensor:
    """Clause-level supervision summed over the emotion and cause heads."""
    n = y_e.shape[0]
    loss_e = bce_sum(y_e, indicator(emotions, n), literal)
    loss_c = bce_sum(y_c, indicator(causes, n), literal)
    return ad.add(loss_e, loss_c)


def pair_loss(y_p: ad.Tensor, pairs, literal: bool = False) -> ad.Tensor:
    """Pair-level supervision over the full (N, N) score grid."""
    return bce_sum(y_p, indicator(pairs, y_p.shape), literal)
