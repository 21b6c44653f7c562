"""Reverse-mode automatic differentiation on dense float64 tensors.

A ``Tape`` records every primitive op as it executes; ``backward`` replays
the records once, in reverse order, accumulating vector-Jacobian products.
The tape is rebuilt for every training step -- there is no graph reuse.
Everything is float64 and CPU-only: this engine favours bit-reproducible
desk-scale experiments over speed.

Subgradient conventions (asserted by tests):
  * relu and max_with_scalar pass zero gradient when the input sits
    exactly on the kink (the clamped branch is treated as inactive);
  * sqrt has gradient 0 at exactly 0.
"""

from __future__ import annotations

import threading

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "Gradients",
    "Rng",
    "ShapeMismatchError",
    "DomainError",
    "NonScalarRootError",
    "backward",
    "constant",
    "add",
    "sub",
    "mul",
    "scale",
    "shift",
    "neg",
    "matmul",
    "relu",
    "tanh",
    "sigmoid",
    "log",
    "exp",
    "square",
    "sqrt",
    "mean",
    "sum",
    "max_with_scalar",
    "affine",
    "concat",
    "rng_normal",
    "rng_uniform",
]


class ShapeMismatchError(ValueError):
    """Operand shapes do not conform for the requested op."""


class DomainError(ValueError):
    """An input lies outside an op's numeric domain (e.g. log of x <= 0)."""


class NonScalarRootError(ValueError):
    """backward() was asked to differentiate a non-scalar root."""


class Tensor:
    """Dense float64 array treated as an immutable value.

    Only the optimizer rebinds ``data`` (with a fresh array); ops never
    mutate operands in place.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


def constant(data) -> Tensor:
    """Leaf tensor for fixed coefficients (gets a gradient, nobody reads it)."""
    return Tensor(data)


_STATE = threading.local()


def _active_tape():
    return getattr(_STATE, "tape", None)


class Tape:
    """Recording of primitive ops in execution order, one per thread."""

    __slots__ = ("nodes",)

    def __init__(self):
        # each node: (output tensor, input tensors, vjp(grad_out) -> grads per input)
        self.nodes = []

    def __enter__(self):
        if _active_tape() is not None:
            raise RuntimeError("a tape is already recording on this thread")
        _STATE.tape = self
        return self

    def __exit__(self, exc_type, exc, tb):
        _STATE.tape = None
        return False


def _record(out, inputs, vjp):
    tape = _active_tape()
    if tape is not None:
        tape.nodes.append((out, inputs, vjp))


class Gradients:
    """Result of a backward pass; tensors never touched map to zeros."""

    __slots__ = ("_table",)

    def __init__(self, table):
        self._table = table

    def of(self, t: Tensor) -> np.ndarray:
        g = self._table.get(t)
        if g is None:
            return np.zeros_like(t.data)
        return g


def backward(tape: Tape, root: Tensor) -> Gradients:
    """d(root)/d(tensor) for every tensor on the tape, root must be scalar.

    Visits each recorded node exactly once, in reverse recording order, so
    accumulation order (and therefore the result bit pattern) is fixed.
    """
    if root.data.size != 1:
        raise NonScalarRootError(f"root has shape {root.data.shape}, expected a scalar")
    table = {root: np.ones_like(root.data)}
    for out, inputs, vjp in reversed(tape.nodes):
        g = table.get(out)
        if g is None:
            continue
        for t, gt in zip(inputs, vjp(g)):
            prev = table.get(t)
            table[t] = gt if prev is None else prev + gt
    return Gradients(table)


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------


def _check_same_shape(a: Tensor, b: Tensor, op: str):
    if a.data.shape != b.data.shape:
        raise ShapeMismatchError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")
    out = Tensor(a.data + b.data)
    _record(out, (a, b), lambda g: (g, g))
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "sub")
    out = Tensor(a.data - b.data)
    _record(out, (a, b), lambda g: (g, -g))
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "mul")
    out = Tensor(a.data * b.data)
    ad, bd = a.data, b.data
    _record(out, (a, b), lambda g: (g * bd, g * ad))
    return out


def scale(a: Tensor, c: float) -> Tensor:
    """c * a for a plain python scalar c."""
    c = float(c)
    out = Tensor(a.data * c)
    _record(out, (a,), lambda g: (g * c,))
    return out


def shift(a: Tensor, c: float) -> Tensor:
    """a + c for a plain python scalar c."""
    out = Tensor(a.data + float(c))
    _record(out, (a,), lambda g: (g,))
    return out


def neg(a: Tensor) -> Tensor:
    return scale(a, -1.0)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeMismatchError(f"matmul: shapes {a.data.shape} and {b.data.shape} do not conform")
    out = Tensor(a.data @ b.data)
    ad, bd = a.data, b.data
    _record(out, (a, b), lambda g: (g @ bd.T, ad.T @ g))
    return out


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0.0
    out = Tensor(np.where(mask, a.data, 0.0))
    _record(out, (a,), lambda g: (g * mask,))
    return out


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)
    out = Tensor(t)
    _record(out, (a,), lambda g: (g * (1.0 - t * t),))
    return out


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    s = _stable_sigmoid(np.atleast_1d(a.data)).reshape(a.data.shape)
    out = Tensor(s)
    _record(out, (a,), lambda g: (g * s * (1.0 - s),))
    return out


def log(a: Tensor) -> Tensor:
    if not np.all(a.data > 0.0):
        raise DomainError("log: input must be strictly positive")
    out = Tensor(np.log(a.data))
    ad = a.data
    _record(out, (a,), lambda g: (g / ad,))
    return out


def exp(a: Tensor) -> Tensor:
    e = np.exp(a.data)
    if not np.all(np.isfinite(e)):
        raise DomainError("exp: overflow to non-finite value")
    out = Tensor(e)
    _record(out, (a,), lambda g: (g * e,))
    return out


def square(a: Tensor) -> Tensor:
    out = Tensor(a.data * a.data)
    ad = a.data
    _record(out, (a,), lambda g: (g * 2.0 * ad,))
    return out


def sqrt(a: Tensor) -> Tensor:
    if not np.all(a.data >= 0.0):
        raise DomainError("sqrt: input must be nonnegative")
    s = np.sqrt(a.data)
    out = Tensor(s)

    def vjp(g):
        gx = np.zeros_like(s)
        np.divide(0.5 * g, s, out=gx, where=s > 0.0)
        return (gx,)

    _record(out, (a,), vjp)
    return out


def mean(a: Tensor) -> Tensor:
    n = a.data.size
    out = Tensor(np.mean(a.data))
    shape_ = a.data.shape
    _record(out, (a,), lambda g: ((float(g) / n) * np.ones(shape_),))
    return out


def sum(a: Tensor) -> Tensor:  # noqa: A001 - matches the op vocabulary
    out = Tensor(np.sum(a.data))
    shape_ = a.data.shape
    _record(out, (a,), lambda g: (float(g) * np.ones(shape_),))
    return out


def max_with_scalar(a: Tensor, c: float) -> Tensor:
    """Elementwise max(a, c); gradient is zero where a <= c (kink included)."""
    c = float(c)
    mask = a.data > c
    out = Tensor(np.where(mask, a.data, c))
    _record(out, (a,), lambda g: (g * mask,))
    return out


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b with b broadcast over rows."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[0]:
        raise ShapeMismatchError(f"affine: shapes {x.data.shape} and {w.data.shape} do not conform")
    if b.data.shape != (w.data.shape[1],):
        raise ShapeMismatchError(f"affine: bias shape {b.data.shape} != ({w.data.shape[1]},)")
    out = Tensor(x.data @ w.data + b.data)
    xd, wd = x.data, w.data
    _record(out, (x, w, b), lambda g: (g @ wd.T, xd.T @ g, g.sum(axis=0)))
    return out


def concat(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the leading axis."""
    if a.data.shape[1:] != b.data.shape[1:]:
        raise ShapeMismatchError(f"concat: trailing dims {a.data.shape} vs {b.data.shape}")
    out = Tensor(np.concatenate([a.data, b.data], axis=0))
    na = a.data.shape[0]
    _record(out, (a, b), lambda g: (g[:na], g[na:]))
    return out


# ---------------------------------------------------------------------------
# random source
# ---------------------------------------------------------------------------


class Rng:
    """Seeded random stream backed by the Philox counter-based generator.

    Philox has fixed constants and a pure counter state, so a given seed
    reproduces the same stream on every platform and run. Draw counters
    let tests audit how much of the stream each consumer used.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._bits = np.random.Philox(key=self.seed)
        self._gen = np.random.Generator(self._bits)
        self.normal_drawn = 0
        self.uniform_drawn = 0
        self.choice_drawn = 0

    def normal(self, shape) -> np.ndarray:
        out = self._gen.standard_normal(size=shape)
        self.normal_drawn += out.size
        return out

    def uniform(self, shape, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        out = self._gen.uniform(lo, hi, size=shape)
        self.uniform_drawn += out.size
        return out

    def choice(self, n: int, size: int, p=None) -> np.ndarray:
        out = self._gen.choice(n, size=size, p=p)
        self.choice_drawn += out.size
        return out

    def get_state(self) -> dict:
        """JSON-serializable snapshot of the full generator state."""
        st = self._bits.state
        return {
            "seed": self.seed,
            "counter": [int(v) for v in st["state"]["counter"]],
            "key": [int(v) for v in st["state"]["key"]],
            "buffer": [int(v) for v in st["buffer"]],
            "buffer_pos": int(st["buffer_pos"]),
            "has_uint32": int(st["has_uint32"]),
            "uinteger": int(st["uinteger"]),
            "normal_drawn": self.normal_drawn,
            "uniform_drawn": self.uniform_drawn,
            "choice_drawn": self.choice_drawn,
        }

    def set_state(self, state: dict) -> None:
        self.seed = int(state["seed"])
        self._bits = np.random.Philox(key=self.seed)
        self._bits.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.array(state["counter"], dtype=np.uint64),
                "key": np.array(state["key"], dtype=np.uint64),
            },
            "buffer": np.array(state["buffer"], dtype=np.uint64),
            "buffer_pos": int(state["buffer_pos"]),
            "has_uint32": int(state["has_uint32"]),
            "uinteger": int(state["uinteger"]),
        }
        self._gen = np.random.Generator(self._bits)
        self.normal_drawn = int(state.get("normal_drawn", 0))
        self.uniform_drawn = int(state.get("uniform_drawn", 0))
        self.choice_drawn = int(state.get("choice_drawn", 0))

    @classmethod
    def from_state(cls, state: dict) -> "Rng":
        rng = cls(state["seed"])
        rng.set_state(state)
        return rng


def rng_normal(rng: Rng, shape) -> Tensor:
    return Tensor(rng.normal(shape))


def rng_uniform(rng: Rng, shape, lo: float = 0.0, hi: float = 1.0) -> Tensor:
    return Tensor(rng.uniform(shape, lo, hi))
