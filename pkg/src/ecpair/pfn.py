"""Partition filter recurrent cell.

Each step splits the update into emotion-specific, cause-specific, and shared
interaction partitions using two smooth cumulative gates, and emits the three
feature vectors plus the recurrent state for the next clause.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad


def cummax(z: ad.Tensor) -> ad.Tensor:
    """cumsum(softmax(z)) over the last axis, capped at 1 against fp drift.

    The cap keeps both gates and their complements in [0, 1] exactly, which
    the partition identities below rely on.
    """
    return ad.minimum(ad.cumsum(ad.softmax(z)), 1.0)


def partition(g_e: ad.Tensor, g_c: ad.Tensor) -> tuple[ad.Tensor, ad.Tensor, ad.Tensor]:
    """Split two gates into emotion, cause, and shared partitions.

    f_s = g_e * g_c, f_e = g_e - f_s, f_c = g_c - f_s; all nonnegative for
    gates in [0, 1], and f_e + f_c + f_s = g_e + g_c - g_e*g_c.
    """
    f_s = ad.mul(g_e, g_c)
    return ad.sub(g_e, f_s), ad.sub(g_c, f_s), f_s


@dataclass
class PfnStepOutput:
    h_e: ad.Tensor
    h_c: ad.Tensor
    h_s: ad.Tensor
    h_next: ad.Tensor
    c_next: ad.Tensor


class PartitionFilterCell:
    """One-layer partition filter cell over [x_i; h_{i-1}].

    Four independent affine maps drive the forget- and input-gate families
    (two per family); ``share_gate_params`` ties the input family to the
    forget family for the ablation variant.
    """

    def __init__(self, dim: int, hidden: int, params: ad.ParameterStore,
                 rng: np.random.Generator, share_gate_params: bool = False):
        self.dim = dim
        self.hidden = hidden
        self.share_gate_params = share_gate_params

        def affine(name, n_in, n_out):
            limit = np.sqrt(6.0 / (n_in + n_out))
            w = params.create(f"pfn/{name}/weight", rng.uniform(-limit, limit, (n_in, n_out)))
            b = params.create(f"pfn/{name}/bias", np.zeros(n_out))
            return w, b

        n_in = dim + hidden
        self.forget_e = affine("forget_e", n_in, hidden)
        self.forget_c = affine("forget_c", n_in, hidden)
        if share_gate_params:
            self.input_e = self.forget_e
            self.input_c = self.forget_c
        else:
            self.input_e = affine("input_e", n_in, hidden)
            self.input_c = affine("input_c", n_in, hidden)
        self.candidate = affine("candidate", n_in, hidden)
        self.state = affine("state", 3 * hidden, hidden)

    def zero_state(self) -> tuple[ad.Tensor, ad.Tensor]:
        return ad.Tensor(np.zeros(self.hidden)), ad.Tensor(np.zeros(self.hidden))

    def gates(self, xh: ad.Tensor, which: str) -> tuple[ad.Tensor, ad.Tensor]:
        """Emotion and cause gates for the forget or input family.

        g_e is a rising cumulative gate, g_c = 1 - cummax of its own map, so
        g_e is nondecreasing with last element 1 and g_c nonincreasing with
        last element 0.
        """
        if which == "forget":
            (w_e, b_e), (w_c, b_c) = self.forget_e, self.forget_c
        elif which == "input":
            (w_e, b_e), (w_c, b_c) = self.input_e, self.input_c
        else:
            raise ValueError(f"gate family must be 'forget' or 'input', got {which!r}")
        g_e = cummax(ad.linear(xh, w_e.tensor(), b_e.tensor()))
        ones = ad.Tensor(np.ones(self.hidden))
        g_c = ad.sub(ones, cummax(ad.linear(xh, w_c.tensor(), b_c.tensor())))
        return g_e, g_c

    def step(self, x: ad.Tensor, h_prev: ad.Tensor, c_prev: ad.Tensor) -> PfnStepOutput:
        xh = ad.concat([x, h_prev])
        f_e, f_c, f_s = partition(*self.gates(xh, "forget"))
        o_e, o_c, o_s = partition(*self.gates(xh, "input"))
        w, b = self.candidate
        c_tilde = ad.tanh(ad.linear(xh, w.tensor(), b.tensor()))

        def mix(f, o):
            return ad.add(ad.mul(f, c_prev), ad.mul(o, c_tilde))

        p_e, p_c, p_s = mix(f_e, o_e), mix(f_c, o_c), mix(f_s, o_s)
        w, b = self.state
        c_next = ad.linear(ad.concat([p_e, p_s, p_c]), w.tensor(), b.tensor())
        return PfnStepOutput(
            h_e=ad.tanh(p_e),
            h_c=ad.tanh(p_c),
            h_s=ad.tanh(p_s),
            h_next=ad.tanh(c_next),
            c_next=c_next,
        )

    def run(self, x_seq: ad.Tensor) -> tuple[ad.Tensor, ad.Tensor, ad.Tensor]:
        """Left-to-right recurrence over X (N, dim) from zero initial state."""
        n = x_seq.shape[0]
        h, c = self.zero_state()
        rows_e, rows_c, rows_s = [], [], []
        for i in range(n):
            out = self.step(ad.take_row(x_seq, i), h, c)
            rows_e.append(out.h_e)
            rows_c.append(out.h_c)
            rows_s.append(out.h_s)
            h, c = out.h_next, out.c_next
        return ad.stack_rows(rows_e), ad.stack_rows(rows_c), ad.stack_rows(rows_s)
