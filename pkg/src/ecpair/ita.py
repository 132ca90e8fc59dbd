"""Inter-task alignment: pseudo pair scores and the bidirectional KL penalty.

Clause-level emotion and cause scores combine into a pseudo pair grid through
a learned soft mask; a scalar-wise KL divergence then pulls the pair head's
grid and the pseudo grid toward each other.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .heads import FeedForward

DIRECTIONS = ("both", "p2e", "e2p", "off")


class MaskProjections:
    """Projections of the task representations used by the soft mask."""

    def __init__(self, n_in: int, n_hidden: int, d: int, params: ad.ParameterStore,
                 rng: np.random.Generator):
        self.d = d
        self.project_e = FeedForward("ita/v_e", n_in, n_hidden, d, params, rng)
        self.project_c = FeedForward("ita/v_c", n_in, n_hidden, d, params, rng)

    def __call__(self, r_e: ad.Tensor, r_c: ad.Tensor) -> tuple[ad.Tensor, ad.Tensor]:
        return self.project_e(r_e), self.project_c(r_c)


def scaled_scores(v_e: ad.Tensor, v_c: ad.Tensor) -> ad.Tensor:
    """Bilinear compatibility grid t[i, j] = (v_e[i] . v_c[j]) / sqrt(d)."""
    d = v_e.shape[-1]
    return ad.scale(ad.matmul(v_e, ad.transpose(v_c)), 1.0 / np.sqrt(d))


def mask_scores(v_e: ad.Tensor, v_c: ad.Tensor) -> ad.Tensor:
    """Row-softmax of the scaled dot products: alpha[i] sums to 1 over j."""
    return ad.softmax(scaled_scores(v_e, v_c))


def pseudo_pair_scores(y_e: ad.Tensor, y_c: ad.Tensor, alpha: ad.Tensor) -> ad.Tensor:
    """y_tilde[i, j] = alpha[i, j] * sqrt(y_e[i] * y_c[j]).

    The square root clamps at zero (not the log clamp) so a zero clause score
    annihilates its whole row/column exactly.
    """
    n = y_e.shape[0]
    grid_e = ad.expand_mid(y_e, n)
    grid_c = ad.expand_front(y_c, n)
    return ad.mul(alpha, ad.sqrt(ad.mul(grid_e, grid_c), clamp=0.0))


def kl_loss(y_tilde: ad.Tensor, y_p: ad.Tensor, direction: str = "both") -> ad.Tensor:
    """Scalar-wise KL between the pseudo and true pair grids.

    ``both`` is the symmetric half-sum; ``e2p`` keeps only the
    y_tilde*log(y_tilde/y_p) terms, ``p2e`` only the y_p*log(y_p/y_tilde)
    terms. Scores are clamped at 1e-12 before the logs.
    """
    if y_tilde.shape != y_p.shape:
        raise ad.ShapeError(f"kl_loss: grids {y_tilde.shape} vs {y_p.shape} differ")
    if direction not in ("both", "p2e", "e2p"):
        raise ValueError(f"direction must be both|p2e|e2p, got {direction!r}")
    log_ratio = ad.sub(ad.log(y_tilde), ad.log(y_p))
    tilde_term = ad.total(ad.mul(y_tilde, log_ratio))
    p_term = ad.scale(ad.total(ad.mul(y_p, log_ratio)), -1.0)
    if direction == "e2p":
        return tilde_term
    if direction == "p2e":
        return p_term
    return ad.scale(ad.add(tilde_term, p_term), 0.5)
