"""MLP generator/discriminator and the Adam optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Rng, Tensor

HIDDEN_ACTIVATIONS = ("relu", "tanh")
OUTPUT_ACTIVATIONS = ("identity", "tanh")


class ParamSet:
    """Named parameter tensors in a fixed order."""

    def __init__(self, tensors: dict[str, Tensor]):
        self.tensors = dict(tensors)

    def names(self) -> list[str]:
        return list(self.tensors)

    def items(self):
        return self.tensors.items()

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def param_count(self) -> int:
        return sum(t.data.size for t in self.tensors.values())

    def copy_values(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.tensors.items()}


@dataclass
class Mlp:
    """Fully connected net: affine layers with a chosen hidden/output activation."""

    widths: list[int]
    hidden_activation: str
    output_activation: str
    params: ParamSet


def init_mlp(
    widths,
    rng: Rng,
    hidden_activation: str = "relu",
    output_activation: str = "identity",
    weight_std: float = 0.02,
) -> Mlp:
    """Weights ~ Normal(0, weight_std), biases zero."""
    widths = [int(w) for w in widths]
    if len(widths) < 2 or any(w < 1 for w in widths):
        raise ValueError(f"need >= 2 positive layer widths, got {widths}")
    if hidden_activation not in HIDDEN_ACTIVATIONS:
        raise ValueError(f"unknown hidden activation {hidden_activation!r}")
    if output_activation not in OUTPUT_ACTIVATIONS:
        raise ValueError(f"unknown output activation {output_activation!r}")
    tensors: dict[str, Tensor] = {}
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        tensors[f"w{i}"] = Tensor(weight_std * rng.normal((fan_in, fan_out)))
        tensors[f"b{i}"] = Tensor(np.zeros(fan_out))
    return Mlp(widths, hidden_activation, output_activation, ParamSet(tensors))


def forward(net: Mlp, batch: Tensor) -> Tensor:
    """Affine-activation chain; recorded on the active tape if any."""
    if batch.data.ndim != 2 or batch.data.shape[1] != net.widths[0]:
        raise ad.ShapeMismatchError(
            f"batch shape {batch.data.shape} does not match input width {net.widths[0]}"
        )
    h = batch
    last = len(net.widths) - 2
    act = ad.relu if net.hidden_activation == "relu" else ad.tanh
    for i in range(last + 1):
        h = ad.affine(h, net.params[f"w{i}"], net.params[f"b{i}"])
        if i < last:
            h = act(h)
        elif net.output_activation == "tanh":
            h = ad.tanh(h)
    return h


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for one ParamSet."""

    lr: float = 0.0002
    beta1: float = 0.5
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: ParamSet, lr: float = 0.0002, beta1: float = 0.5, beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
            t=0,
            m={k: np.zeros_like(t.data) for k, t in params.items()},
            v={k: np.zeros_like(t.data) for k, t in params.items()},
        )


def adam_step(state: AdamState, params: ParamSet, grads: ad.Gradients) -> None:
    """One bias-corrected update; epsilon sits outside the square root, so
    beta1 = beta2 = 0 reduces to the RMS step lr*g/(|g|+eps)."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, tensor in params.items():
        g = grads.of(tensor)
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = state.m[name] / c1
        v_hat = state.v[name] / c2
        tensor.data = tensor.data - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
