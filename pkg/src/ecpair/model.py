"""Full network assembly: provider -> sequence encoder -> heads -> alignment.

One differentiation graph per document; the forward pass returns plain score
arrays for decoding plus the three loss terms as graph tensors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import heads as heads_mod
from . import ita as ita_mod
from .data import Document
from .encoder import PrecomputedProvider, RelativePositionTable, TrainableLookupProvider
from .metrics import ScoreMatrices
from .pfn import PartitionFilterCell

ENCODINGS = ("pfn", "shared", "parallel")
DETACH_SIDES = ("none", "pseudo", "pair")


@dataclass
class ModelConfig:
    hidden: int = 300
    embed_dim: int = 64
    dim_pos: int = 50
    max_offset: int = 10
    mask_dim: int = 64
    dropout: float = 0.1
    encoding: str = "pfn"
    ita: str = "both"
    aux: bool = True
    literal_loss: bool = False
    share_gate_params: bool = False
    detach_side: str = "none"
    seed: int = 0

    def validate(self):
        if self.encoding not in ENCODINGS:
            raise ValueError(f"encoding must be one of {ENCODINGS}, got {self.encoding!r}")
        if self.ita not in ita_mod.DIRECTIONS:
            raise ValueError(f"ita must be one of {ita_mod.DIRECTIONS}, got {self.ita!r}")
        if self.detach_side not in DETACH_SIDES:
            raise ValueError(f"detach_side must be one of {DETACH_SIDES}, got {self.detach_side!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")


class LstmCell:
    """Plain LSTM used by the shared/parallel encoding ablations."""

    def __init__(self, name: str, dim: int, hidden: int, params: ad.ParameterStore,
                 rng: np.random.Generator):
        self.hidden = hidden

        def affine(gate):
            n_in = dim + hidden
            limit = np.sqrt(6.0 / (n_in + hidden))
            w = params.create(f"{name}/{gate}/weight", rng.uniform(-limit, limit, (n_in, hidden)))
            b = params.create(f"{name}/{gate}/bias", np.zeros(hidden))
            return w, b

        self.gates = {g: affine(g) for g in ("input", "forget", "output", "cell")}

    def run(self, x_seq: ad.Tensor) -> ad.Tensor:
        n = x_seq.shape[0]
        h = ad.Tensor(np.zeros(self.hidden))
        c = ad.Tensor(np.zeros(self.hidden))
        rows = []
        for idx in range(n):
            xh = ad.concat([ad.take_row(x_seq, idx), h])

            def gate(name, fn):
                w, b = self.gates[name]
                return fn(ad.linear(xh, w.tensor(), b.tensor()))

            i = gate("input", ad.sigmoid)
            f = gate("forget", ad.sigmoid)
            o = gate("output", ad.sigmoid)
            g = gate("cell", ad.tanh)
            c = ad.add(ad.mul(f, c), ad.mul(i, g))
            h = ad.mul(o, ad.tanh(c))
            rows.append(h)
        return ad.stack_rows(rows)


def build_ablation_encoder(flag: str, dim: int, hidden: int,
                           params: ad.ParameterStore, rng: np.random.Generator,
                           share_gate_params: bool = False):
    """Sequence encoder per ablation flag: pfn | shared | parallel.

    shared runs one recurrent encoder and feeds its output to every head
    (H_e = H_c = H_s = H); parallel runs two independent encoders with zero
    interaction features.
    """
    if flag == "pfn":
        cell = PartitionFilterCell(dim, hidden, params, rng, share_gate_params)
        return cell.run
    if flag == "shared":
        cell = LstmCell("shared", dim, hidden, params, rng)

        def run_shared(x_seq):
            h = cell.run(x_seq)
            return h, h, h

        return run_shared
    if flag == "parallel":
        cell_e = LstmCell("parallel_e", dim, hidden, params, rng)
        cell_c = LstmCell("parallel_c", dim, hidden, params, rng)

        def run_parallel(x_seq):
            h_e = cell_e.run(x_seq)
            h_c = cell_c.run(x_seq)
            zeros = ad.Tensor(np.zeros(h_e.shape))
            return h_e, h_c, zeros

        return run_parallel
    raise ValueError(f"unknown encoding flag: {flag!r}")


@dataclass
class DocOutputs:
    scores: ScoreMatrices
    loss_pair: ad.Tensor
    loss_aux: ad.Tensor
    loss_kl: ad.Tensor


class PairModel:
    """Trainable extractor scoring clauses and all ordered clause pairs."""

    def __init__(self, cfg: ModelConfig, vocab: dict[str, int] | None = None,
                 provider: PrecomputedProvider | None = None):
        cfg.validate()
        if provider is None and vocab is None:
            raise ValueError("PairModel needs a vocabulary (trainable mode) or a provider")
        self.cfg = cfg
        self.params = ad.ParameterStore()
        init_rng = np.random.default_rng(cfg.seed)
        # Constructed in a fixed order so that (seed, architecture) fully
        # determines every initial value regardless of ablation flags.
        if provider is not None:
            self.provider = provider
            self.input_dim = provider.dim
        else:
            self.provider = TrainableLookupProvider(vocab, cfg.embed_dim, self.params, init_rng)
            self.input_dim = cfg.embed_dim
        self.positions = RelativePositionTable(cfg.max_offset, cfg.dim_pos, self.params, init_rng)
        self.encode_sequence = build_ablation_encoder(
            cfg.encoding, self.input_dim, cfg.hidden, self.params, init_rng,
            cfg.share_gate_params,
        )
        n_hidden = max(1, cfg.hidden // 2)
        rep_width = 2 * cfg.hidden
        self.emotion_head = heads_mod.FeedForward(
            "heads/emotion", rep_width, n_hidden, 1, self.params, init_rng)
        self.cause_head = heads_mod.FeedForward(
            "heads/cause", rep_width, n_hidden, 1, self.params, init_rng)
        self.pair_head = heads_mod.FeedForward(
            "heads/pair", rep_width + cfg.dim_pos, n_hidden, 1, self.params, init_rng)
        # Mask projections are created even when ITA is off so the parameter
        # build order (and therefore every initial weight) is flag-invariant.
        self.mask = ita_mod.MaskProjections(
            rep_width, n_hidden, cfg.mask_dim, self.params, init_rng)
        self.dropout_rng = np.random.default_rng(init_rng.integers(2**63))

    def reseed_dropout(self, seed: int):
        self.dropout_rng = np.random.default_rng(seed)

    def forward(self, doc: Document, training: bool = False) -> DocOutputs:
        cfg = self.cfg
        n = len(doc.clauses)

        def drop(x):
            return ad.dropout(x, cfg.dropout, self.dropout_rng, training)

        x = drop(self.provider.encode(doc))
        h_e, h_c, h_s = self.encode_sequence(x)
        r_e, r_c = heads_mod.task_representations(h_e, h_c, h_s)
        r_e, r_c = drop(r_e), drop(r_c)
        y_e = heads_mod.predict_scores(self.emotion_head, r_e)
        y_c = heads_mod.predict_scores(self.cause_head, r_c)

        reps = heads_mod.pair_grid(h_e, h_c, h_s, self.positions.grid(n))
        y_p = heads_mod.predict_scores(self.pair_head, drop(reps))

        loss_pair = heads_mod.pair_loss(y_p, doc.pair_labels, cfg.literal_loss)
        loss_aux = heads_mod.aux_loss(
            y_e, y_c, doc.emotion_labels, doc.cause_labels, cfg.literal_loss)

        y_tilde_data = None
        if cfg.ita == "off":
            loss_kl = ad.Tensor(0.0)
        else:
            v_e, v_c = self.mask(r_e, r_c)
            alpha = ita_mod.mask_scores(v_e, v_c)
            y_tilde = ita_mod.pseudo_pair_scores(y_e, y_c, alpha)
            y_tilde_data = y_tilde.data
            pseudo = ad.stop_gradient(y_tilde) if cfg.detach_side == "pseudo" else y_tilde
            pair = ad.stop_gradient(y_p) if cfg.detach_side == "pair" else y_p
            loss_kl = ita_mod.kl_loss(pseudo, pair, cfg.ita)

        scores = ScoreMatrices(
            y_e=y_e.data.copy(), y_c=y_c.data.copy(), y_p=y_p.data.copy(),
            y_tilde=None if y_tilde_data is None else y_tilde_data.copy(),
        )
        return DocOutputs(scores, loss_pair, loss_aux, loss_kl)

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {p.name: p.data.copy() for p in self.params}

    def load_state_arrays(self, arrays: dict[str, np.ndarray]):
        own = set(self.params.names())
        incoming = set(arrays)
        if own != incoming:
            missing = sorted(own - incoming)
            extra = sorted(incoming - own)
            raise ValueError(f"parameter name sets differ: missing={missing} extra={extra}")
        for p in self.params:
            if p.data.shape != arrays[p.name].shape:
                raise ValueError(
                    f"parameter {p.name}: shape {arrays[p.name].shape} != {p.data.shape}")
            p.data[...] = arrays[p.name]
