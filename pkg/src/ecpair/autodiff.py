"""Reverse-mode automatic differentiation over numpy arrays.

Define-by-run tape: primitives executed while a :class:`Graph` is active are
recorded in application order and replayed in reverse by :func:`backward`.
With no active graph the same primitives run as plain numpy (used for
evaluation and for finite differences). Everything is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Inputs to log/sqrt are clamped here by default; the gradient is zero in the
# clamped region.
DOMAIN_CLAMP = 1e-12


class ShapeError(ValueError):
    """Operand shapes do not conform to the primitive's contract."""


class DomainError(ValueError):
    """Input outside a primitive's numeric domain and clamping is disabled."""


class GraphError(RuntimeError):
    """Graph misuse: double backward, non-scalar loss, or a detached loss."""


class Tensor:
    """Shape-carrying float64 array, optionally attached to a recording graph."""

    __slots__ = ("data", "param", "graph")

    def __init__(self, data, param=None, graph=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.param = param
        self.graph = graph

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


class Parameter:
    """Named trainable array with a gradient accumulator of the same shape."""

    __slots__ = ("name", "data", "grad")

    def __init__(self, name: str, data):
        self.name = name
        self.data = np.array(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)

    def tensor(self) -> Tensor:
        """Leaf tensor view of this parameter for use in a forward pass."""
        return Tensor(self.data, param=self)

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.data.shape})"


class ParameterStore:
    """Ordered collection of parameters with unique names."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def create(self, name: str, data) -> Parameter:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name!r}")
        p = Parameter(name, data)
        self._params[name] = p
        return p

    def zero_grad(self):
        for p in self._params.values():
            p.zero_grad()

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)


class _Node:
    __slots__ = ("op", "inputs", "out", "backward")

    def __init__(self, op, inputs, out, backward):
        self.op = op
        self.inputs = inputs
        self.out = out
        self.backward = backward


class Graph:
    """Append-only record of primitive applications for one forward pass.

    Rebuilt per document; insertion order is a topological order, so the
    backward sweep is a single reversed pass over ``nodes``.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self.consumed = False

    def __enter__(self):
        _GRAPH_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _GRAPH_STACK.pop()
        assert popped is self
        return False


_GRAPH_STACK: list[Graph] = []


def active_graph() -> Graph | None:
    return _GRAPH_STACK[-1] if _GRAPH_STACK else None


def record_op(op: str, inputs, out_data, backward_fn) -> Tensor:
    """Record one primitive application on the active graph (if any).

    ``backward_fn(grad_out)`` must return per-input gradients aligned with
    ``inputs`` (``None`` for inputs that need no gradient). Exposed so tests
    and extensions can register custom primitives.
    """
    out = Tensor(out_data)
    graph = active_graph()
    if graph is not None:
        out.graph = graph
        graph.nodes.append(_Node(op, tuple(inputs), out, backward_fn))
    return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def backward(loss: Tensor):
    """Accumulate d(loss)/d(parameter) into every reachable Parameter's grad.

    Parameters untouched by the forward pass keep whatever is already in
    their grad buffer (zero after ``zero_grad``). The graph that produced
    ``loss`` is consumed; a second backward without a new forward raises.
    """
    if not isinstance(loss, Tensor) or loss.shape != ():
        got = getattr(loss, "shape", type(loss))
        raise GraphError(f"backward requires a scalar loss tensor, got {got}")
    graph = loss.graph
    if graph is None:
        raise GraphError("loss is not attached to a graph (no recording was active)")
    if graph.consumed:
        raise GraphError("graph already consumed; rerun the forward pass before backward")
    graph.consumed = True

    grads: dict[int, np.ndarray] = {id(loss): np.array(1.0)}
    for node in reversed(graph.nodes):
        gout = grads.pop(id(node.out), None)
        if gout is None:
            continue
        for t, gin in zip(node.inputs, node.backward(gout)):
            if gin is None:
                continue
            if t.param is not None:
                t.param.grad += gin
            elif t.graph is graph:
                key = id(t)
                if key in grads:
                    grads[key] = grads[key] + gin
                else:
                    grads[key] = gin


# ---------------------------------------------------------------------------
# primitives


def _check_same_shape(op, a, b):
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: operand shapes {a.data.shape} and {b.data.shape} differ")


def linear(x, w, b) -> Tensor:
    """Affine map ``x @ w + b`` with x (..., in), w (in, out), b (out,)."""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    if w.data.ndim != 2 or x.data.shape[-1] != w.data.shape[0] or b.data.shape != (w.data.shape[1],):
        raise ShapeError(
            f"linear: x {x.data.shape}, w {w.data.shape}, b {b.data.shape} do not conform"
        )
    out = x.data @ w.data + b.data
    n_in, n_out = w.data.shape

    def bwd(g):
        x2 = x.data.reshape(-1, n_in)
        g2 = g.reshape(-1, n_out)
        return g @ w.data.T, x2.T @ g2, g2.sum(axis=0)

    return record_op("linear", (x, w, b), out, bwd)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: shapes {a.data.shape} and {b.data.shape} do not conform")
    out = a.data @ b.data

    def bwd(g):
        return g @ b.data.T, a.data.T @ g

    return record_op("matmul", (a, b), out, bwd)


def transpose(x) -> Tensor:
    x = as_tensor(x)
    if x.data.ndim != 2:
        raise ShapeError(f"transpose: expected a matrix, got shape {x.data.shape}")
    return record_op("transpose", (x,), x.data.T.copy(), lambda g: (g.T,))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    v = x.data
    out = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.maximum(v, 0))),
                   np.exp(np.minimum(v, 0)) / (1.0 + np.exp(np.minimum(v, 0))))

    def bwd(g):
        return (g * out * (1.0 - out),)

    return record_op("sigmoid", (x,), out, bwd)


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.data)

    def bwd(g):
        return (g * (1.0 - out * out),)

    return record_op("tanh", (x,), out, bwd)


def softmax(x) -> Tensor:
    """Softmax over the last axis."""
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - dot),)

    return record_op("softmax", (x,), out, bwd)


def cumsum(x) -> Tensor:
    """Cumulative sum over the last axis."""
    x = as_tensor(x)
    out = np.cumsum(x.data, axis=-1)

    def bwd(g):
        return (np.flip(np.cumsum(np.flip(g, axis=-1), axis=-1), axis=-1),)

    return record_op("cumsum", (x,), out, bwd)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape("add", a, b)
    return record_op("add", (a, b), a.data + b.data, lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape("sub", a, b)
    return record_op("sub", (a, b), a.data - b.data, lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape("mul", a, b)
    out = a.data * b.data

    def bwd(g):
        return g * b.data, g * a.data

    return record_op("mul", (a, b), out, bwd)


def scale(x, c: float) -> Tensor:
    x = as_tensor(x)
    c = float(c)
    return record_op("scale", (x,), x.data * c, lambda g: (g * c,))


def concat(parts) -> Tensor:
    """Concatenate along the last axis. 1-D inputs concatenate end to end."""
    parts = [as_tensor(p) for p in parts]
    if not parts:
        raise ShapeError("concat: no operands")
    lead = {p.data.shape[:-1] for p in parts}
    if len(lead) != 1:
        raise ShapeError(f"concat: leading shapes differ: {[p.data.shape for p in parts]}")
    widths = [p.data.shape[-1] for p in parts]
    out = np.concatenate([p.data for p in parts], axis=-1)
    splits = np.cumsum(widths)[:-1]

    def bwd(g):
        return tuple(np.split(g, splits, axis=-1))

    return record_op("concat", parts, out, bwd)


def sqrt(x, clamp: float | None = DOMAIN_CLAMP) -> Tensor:
    x = as_tensor(x)
    if clamp is None:
        if np.any(x.data <= 0):
            raise DomainError("sqrt: non-positive input with clamping disabled")
        safe = x.data
    else:
        safe = np.maximum(x.data, clamp)
    out = np.sqrt(safe)

    def bwd(g):
        live = x.data > (0.0 if clamp is None else clamp)
        denom = np.where(live, out, 1.0)
        return (np.where(live, g * 0.5 / denom, 0.0),)

    return record_op("sqrt", (x,), out, bwd)


def log(x, clamp: float | None = DOMAIN_CLAMP) -> Tensor:
    x = as_tensor(x)
    if clamp is None:
        if np.any(x.data <= 0):
            raise DomainError("log: non-positive input with clamping disabled")
        safe = x.data
    else:
        safe = np.maximum(x.data, clamp)
    out = np.log(safe)

    def bwd(g):
        grad = g / safe
        if clamp is not None:
            grad = np.where(x.data > clamp, grad, 0.0)
        return (grad,)

    return record_op("log", (x,), out, bwd)


def total(x) -> Tensor:
    """Sum of all elements, as a scalar tensor."""
    x = as_tensor(x)
    out = x.data.sum()

    def bwd(g):
        return (np.broadcast_to(g, x.data.shape).copy(),)

    return record_op("sum", (x,), out, bwd)


def sum_axis(x, axis: int) -> Tensor:
    x = as_tensor(x)
    out = x.data.sum(axis=axis)

    def bwd(g):
        return (np.broadcast_to(np.expand_dims(g, axis), x.data.shape).copy(),)

    return record_op("sum", (x,), out, bwd)


def dropout(x, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout: mask scaled by 1/keep so eval mode is the identity."""
    if not training or rate == 0.0:
        return x if isinstance(x, Tensor) else as_tensor(x)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = as_tensor(x)
    keep = 1.0 - rate
    mask = (rng.random(x.data.shape) < keep) / keep
    return record_op("dropout", (x,), x.data * mask, lambda g: (g * mask,))


def minimum(x, cap: float) -> Tensor:
    """Elementwise min with a constant cap; gradient is zero where capped."""
    x = as_tensor(x)
    out = np.minimum(x.data, cap)

    def bwd(g):
        return (np.where(x.data <= cap, g, 0.0),)

    return record_op("minimum", (x,), out, bwd)


def take_row(x, i: int) -> Tensor:
    x = as_tensor(x)
    if x.data.ndim < 2:
        raise ShapeError(f"take_row: expected ndim >= 2, got shape {x.data.shape}")
    out = x.data[i].copy()

    def bwd(g):
        gx = np.zeros_like(x.data)
        gx[i] = g
        return (gx,)

    return record_op("take_row", (x,), out, bwd)


def gather_rows(table, idx) -> Tensor:
    """Row lookup ``table[idx]`` for an integer index array of any shape."""
    table = as_tensor(table)
    idx = np.asarray(idx, dtype=np.intp)
    if table.data.ndim != 2:
        raise ShapeError(f"gather_rows: table must be a matrix, got {table.data.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= table.data.shape[0]):
        raise ShapeError(f"gather_rows: index out of range for table {table.data.shape}")
    out = table.data[idx]

    def bwd(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx, g)
        return (gt,)

    return record_op("gather_rows", (table,), out, bwd)


def stack_rows(rows) -> Tensor:
    """Stack equal-shape tensors along a new leading axis."""
    rows = [as_tensor(r) for r in rows]
    if len({r.data.shape for r in rows}) != 1:
        raise ShapeError(f"stack_rows: shapes differ: {[r.data.shape for r in rows]}")
    out = np.stack([r.data for r in rows], axis=0)

    def bwd(g):
        return tuple(g[i] for i in range(len(rows)))

    return record_op("stack_rows", rows, out, bwd)


def expand_mid(x, n: int) -> Tensor:
    """Insert a broadcast axis 1 of size n: out[i, j, ...] = x[i, ...]."""
    x = as_tensor(x)
    shape = (x.data.shape[0], n) + x.data.shape[1:]
    out = np.broadcast_to(x.data[:, None], shape).copy()

    def bwd(g):
        return (g.sum(axis=1),)

    return record_op("expand", (x,), out, bwd)


def expand_front(x, n: int) -> Tensor:
    """Prepend a broadcast axis of size n: out[j, i, ...] = x[i, ...]."""
    x = as_tensor(x)
    out = np.broadcast_to(x.data, (n,) + x.data.shape).copy()

    def bwd(g):
        return (g.sum(axis=0),)

    return record_op("expand", (x,), out, bwd)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    old = x.data.shape
    return record_op("reshape", (x,), x.data.reshape(shape), lambda g: (g.reshape(old),))


def stop_gradient(x) -> Tensor:
    """Detach: same values, no path back into the graph."""
    return Tensor(as_tensor(x).data)


PRIMITIVES = {
    "linear": linear,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "softmax": softmax,
    "cumsum": cumsum,
    "add": add,
    "sub": sub,
    "mul": mul,
    "scale": scale,
    "concat": concat,
    "sqrt": sqrt,
    "log": log,
    "sum": total,
    "dropout": dropout,
}


def apply_primitive(kind: str, *inputs, **kwargs) -> Tensor:
    """Dispatch a primitive by kind name (see PRIMITIVES for the set)."""
    try:
        op = PRIMITIVES[kind]
    except KeyError:
        raise ValueError(f"unknown primitive kind: {kind!r}") from None
    if kind == "concat":
        return op(inputs, **kwargs)
    return op(*inputs, **kwargs)


# ---------------------------------------------------------------------------
# finite-difference verification


@dataclass
class CheckReport:
    """Per-parameter comparison of analytic vs central-difference gradients."""

    max_rel_err: dict[str, float] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    tol: float = 1e-4

    @property
    def worst(self) -> float:
        return max(self.max_rel_err.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return not self.failures and self.worst <= self.tol

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"gradcheck {status}: max rel err {self.worst:.3e} (tol {self.tol:.1e})"]
        lines += [f"  non-finite analytic gradient: {name}" for name in self.failures]
        return "\n".join(lines)


# Relative-error denominator floor: central differences on a loss of order
# ten carry ~1e-9 absolute noise, so components below the floor are compared
# absolutely (pass iff |a - n| <= tol * floor).
REL_ERR_FLOOR = 1e-4


def grad_check(loss_fn, params, eps: float = 1e-5, tol: float = 1e-4) -> CheckReport:
    """Check analytic gradients of ``loss_fn`` against central differences.

    ``loss_fn()`` must rebuild the forward pass deterministically (dropout
    disabled, fixed inputs) and return a scalar Tensor. ``params`` is the
    sequence of Parameters to perturb; their data is modified in place and
    restored.
    """
    report = CheckReport(tol=tol)
    for p in params:
        p.zero_grad()
    with Graph():
        loss = loss_fn()
        backward(loss)
    analytic = {p.name: p.grad.copy() for p in params}

    for p in params:
        a = analytic[p.name]
        if not np.all(np.isfinite(a)):
            report.failures.append(p.name)
            report.max_rel_err[p.name] = np.inf
            continue
        flat = p.data.ravel()
        num = np.empty_like(flat)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            f_plus = float(loss_fn().data)
            flat[k] = orig - eps
            f_minus = float(loss_fn().data)
            flat[k] = orig
            num[k] = (f_plus - f_minus) / (2.0 * eps)
        num = num.reshape(p.data.shape)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(num)), REL_ERR_FLOOR)
        report.max_rel_err[p.name] = float(np.max(np.abs(a - num) / denom))
    return report
