"""Positive-unlabeled discriminator risks, generator losses and prior schedules.

The discriminator treats real samples as labeled positives and generated
samples as an unlabeled pool that is a pi : (1-pi) mixture of high- and
low-quality points. Its minibatch objective is

    pi * R_p_plus + max(0, R_u_minus - pi * R_p_minus)

where R_p_plus / R_p_minus are the mean positive/negative per-sample losses
over the real batch and R_u_minus the mean negative loss over the fake
batch. The max(0, .) clamp stops the rewritten negative-risk estimate from
going below zero, which otherwise invites overfitting; its subgradient at
exactly zero is zero, so a clamped step sends no gradient to the fake batch.

Four score-based loss families plug into the same assembly: logistic
(``sgan``, scores are logits), least-squares (``lsgan``), ``hinge`` and the
critic scores of ``wgangp``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import autodiff as ad
from .autodiff import Rng, Tensor

VARIANTS = ("sgan", "lsgan", "hinge", "wgangp")
G_LOSS_MODES = ("saturating", "nonsaturating")


def softplus(t: Tensor) -> Tensor:
    """log(1 + e^x) composed from primitives, stable for large |x|."""
    m = ad.max_with_scalar(t, 0.0)
    return ad.add(m, ad.log(ad.add(ad.exp(ad.sub(t, m)), ad.exp(ad.neg(m)))))


@dataclass(frozen=True)
class LossFamily:
    """Per-sample loss pair (l_pos, l_neg) plus the generator-loss rule.

    ``l_pos(d)`` is the loss for calling score d real, ``l_neg(d)`` for
    calling it fake. ``*_np`` are plain numpy twins used by the exact
    finite-support oracle. For ``sgan`` the scores are logits and the
    logistic map lives inside the losses; ``score_is_logit`` records that.
    ``g_score_mean`` marks families (hinge, wgangp) whose generator loss is
    -mean(score) regardless of mode.
    """

    variant: str
    l_pos: Callable[[Tensor], Tensor]
    l_neg: Callable[[Tensor], Tensor]
    l_pos_np: Callable[[np.ndarray], np.ndarray]
    l_neg_np: Callable[[np.ndarray], np.ndarray]
    score_is_logit: bool
    g_score_mean: bool


def make_loss_family(
    variant: str,
    l_pos: Optional[Callable[[Tensor], Tensor]] = None,
    l_neg: Optional[Callable[[Tensor], Tensor]] = None,
    l_pos_np: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    l_neg_np: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> LossFamily:
    """Standard loss table for a named variant; entries can be overridden."""
    if variant == "sgan":
        fam = LossFamily(
            variant,
            l_pos=lambda d: softplus(ad.neg(d)),
            l_neg=lambda d: softplus(d),
            l_pos_np=lambda d: np.logaddexp(0.0, -d),
            l_neg_np=lambda d: np.logaddexp(0.0, d),
            score_is_logit=True,
            g_score_mean=False,
        )
    elif variant == "lsgan":
        fam = LossFamily(
            variant,
            l_pos=lambda d: ad.square(ad.shift(d, -1.0)),
            l_neg=lambda d: ad.square(ad.shift(d, 1.0)),
            l_pos_np=lambda d: (d - 1.0) ** 2,
            l_neg_np=lambda d: (d + 1.0) ** 2,
            score_is_logit=False,
            g_score_mean=False,
        )
    elif variant == "hinge":
        fam = LossFamily(
            variant,
            l_pos=lambda d: ad.relu(ad.shift(ad.neg(d), 1.0)),
            l_neg=lambda d: ad.relu(ad.shift(d, 1.0)),
            l_pos_np=lambda d: np.maximum(0.0, 1.0 - d),
            l_neg_np=lambda d: np.maximum(0.0, 1.0 + d),
            score_is_logit=False,
            g_score_mean=True,
        )
    elif variant == "wgangp":
        fam = LossFamily(
            variant,
            l_pos=lambda d: ad.neg(d),
            l_neg=lambda d: ad.scale(d, 1.0),
            l_pos_np=lambda d: -d,
            l_neg_np=lambda d: np.array(d, dtype=np.float64, copy=True),
            score_is_logit=False,
            g_score_mean=True,
        )
    else:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    overrides = {}
    if l_pos is not None:
        overrides["l_pos"] = l_pos
    if l_neg is not None:
        overrides["l_neg"] = l_neg
    if l_pos_np is not None:
        overrides["l_pos_np"] = l_pos_np
    if l_neg_np is not None:
        overrides["l_neg_np"] = l_neg_np
    if overrides:
        from dataclasses import replace

        fam = replace(fam, **overrides)
    return fam


@dataclass(frozen=True)
class RiskTerms:
    """Minibatch risk estimates and the assembled clamped discriminator loss.

    Invariant: d_loss == pi*r_p_plus + max(0, r_u_minus - pi*r_p_minus), and
    clamp_active is true exactly when the gap r_u_minus - pi*r_p_minus is
    negative.
    """

    r_p_plus: float
    r_p_minus: float
    r_u_minus: float
    d_loss: Tensor  # scalar, lives on the recording tape
    clamp_active: bool


def pu_discriminator_loss(
    family: LossFamily,
    real_scores: Tensor,
    fake_scores: Tensor,
    pi: float,
    clamp: bool = True,
    prior_correction: bool = True,
) -> RiskTerms:
    """Clamped PU risk of a discriminator on one minibatch pair.

    ``clamp=False`` drops the max(0, .) guard (plain unbiased estimator);
    ``prior_correction=False`` additionally drops the -pi*R_p_minus term,
    which at pi=1 reduces the objective to the classic real-vs-fake loss.
    Gradients flow to real scores through R_p_plus (and R_p_minus while the
    clamp is inactive) and to fake scores only while the clamp is inactive.
    """
    if not 0.0 < pi <= 1.0:
        raise ValueError(f"pi={pi} out of (0, 1]")
    if real_scores.data.size == 0 or fake_scores.data.size == 0:
        raise ValueError("score batches must be nonempty")
    rp_plus = ad.mean(family.l_pos(real_scores))
    rp_minus = ad.mean(family.l_neg(real_scores))
    ru_minus = ad.mean(family.l_neg(fake_scores))
    if prior_correction:
        gap = ad.sub(ru_minus, ad.scale(rp_minus, pi))
    else:
        gap = ru_minus
    clamp_active = bool(gap.item() < 0.0)
    guarded = ad.max_with_scalar(gap, 0.0) if clamp else gap
    d_loss = ad.add(ad.scale(rp_plus, pi), guarded)
    return RiskTerms(
        r_p_plus=rp_plus.item(),
        r_p_minus=rp_minus.item(),
        r_u_minus=ru_minus.item(),
        d_loss=d_loss,
        clamp_active=clamp_active and clamp,
    )


def gan_discriminator_loss(family: LossFamily, real_scores: Tensor, fake_scores: Tensor) -> Tensor:
    """Classic real-vs-fake discriminator loss: mean l_pos(real) + mean l_neg(fake)."""
    return ad.add(ad.mean(family.l_pos(real_scores)), ad.mean(family.l_neg(fake_scores)))


def pu_generator_loss(family: LossFamily, fake_scores: Tensor, mode: str = "saturating") -> Tensor:
    """Generator loss on fake scores.

    saturating      minimize mean(-l_neg(d))   (drive the fake-label loss up)
    nonsaturating   minimize mean(l_pos(d))
    hinge / wgangp  minimize -mean(d) in both modes
    """
    if mode not in G_LOSS_MODES:
        raise ValueError(f"unknown generator loss mode {mode!r}")
    if fake_scores.data.size == 0:
        raise ValueError("score batch must be nonempty")
    if family.g_score_mean:
        return ad.neg(ad.mean(fake_scores))
    if mode == "saturating":
        return ad.neg(ad.mean(family.l_neg(fake_scores)))
    return ad.mean(family.l_pos(fake_scores))


def gradient_penalty(
    d_apply: Callable[[Tensor], Tensor],
    real_batch: np.ndarray,
    fake_batch: np.ndarray,
    rng: Rng,
    lam: float = 10.0,
    fd_step: float = 1e-4,
) -> Tensor:
    """Two-sided penalty lam * mean((||grad_x D(x_hat)||_2 - 1)^2).

    Interpolates x_hat = eps*x_real + (1-eps)*x_fake with eps ~ U[0,1] per
    row. The input gradient is taken by central differences of tape-recorded
    forward passes (2 per input dimension), so the penalty's own parameter
    gradient comes out of the ordinary first-order backward pass; the engine
    has no second-order mode. Central differences are exact for affine
    scores, which pins down the directed unit tests.
    """
    xr = np.asarray(real_batch, dtype=np.float64)
    xf = np.asarray(fake_batch, dtype=np.float64)
    if xr.ndim != 2 or xf.ndim != 2 or xr.shape[1] != xf.shape[1]:
        raise ValueError(f"batches must be 2D with equal width, got {xr.shape} and {xf.shape}")
    n, dim = xf.shape
    if xr.shape[0] != n:
        reps = int(np.ceil(n / xr.shape[0]))
        xr = np.tile(xr, (reps, 1))[:n]
    eps = rng.uniform((n, 1))
    x_hat = eps * xr + (1.0 - eps) * xf

    sq_norm = None
    inv = 1.0 / (2.0 * fd_step)
    for j in range(dim):
        bump = np.zeros((1, dim))
        bump[0, j] = fd_step
        s_plus = d_apply(Tensor(x_hat + bump))
        s_minus = d_apply(Tensor(x_hat - bump))
        gj = ad.scale(ad.sub(s_plus, s_minus), inv)
        term = ad.square(gj)
        sq_norm = term if sq_norm is None else ad.add(sq_norm, term)
    norm = ad.sqrt(sq_norm)
    return ad.scale(ad.mean(ad.square(ad.shift(norm, -1.0))), lam)


# ---------------------------------------------------------------------------
# class-prior schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiSchedule:
    """Class prior as a function of the training iteration.

    basic: linear ramp pi_init -> pi_max over warmup_iters, then constant.
    fast:  pi_init + step_size per step_every iterations, capped at pi_max.
    fixed: constant pi_fixed.
    """

    pattern: str
    pi_init: float = 0.1
    pi_max: float = 0.7
    warmup_iters: int = 10000
    step_every: int = 10000
    step_size: float = 0.1
    pi_fixed: float = 0.5

    def __post_init__(self):
        if self.pattern not in ("basic", "fast", "fixed"):
            raise ValueError(f"unknown pi pattern {self.pattern!r}")
        if self.pattern == "fixed":
            if not 0.0 < self.pi_fixed < 1.0:
                raise ValueError("pi out of (0,1)")
            return
        if not (0.0 < self.pi_init < 1.0 and 0.0 < self.pi_max < 1.0):
            raise ValueError("pi out of (0,1)")
        if self.pi_max < self.pi_init:
            raise ValueError("pi_max must be >= pi_init")
        if self.pattern == "basic" and self.warmup_iters < 1:
            raise ValueError("warmup_iters must be >= 1")
        if self.pattern == "fast" and (self.step_every < 1 or self.step_size < 0.0):
            raise ValueError("step_every must be >= 1 and step_size >= 0")

    @classmethod
    def basic(cls, pi_init: float = 0.1, pi_max: float = 0.7, warmup_iters: int = 10000) -> "PiSchedule":
        return cls("basic", pi_init=pi_init, pi_max=pi_max, warmup_iters=warmup_iters)

    @classmethod
    def fast(cls, pi_init: float = 0.3, pi_max: float = 0.7, step_every: int = 10000, step_size: float = 0.1) -> "PiSchedule":
        return cls("fast", pi_init=pi_init, pi_max=pi_max, step_every=step_every, step_size=step_size)

    @classmethod
    def fixed(cls, value: float) -> "PiSchedule":
        return cls("fixed", pi_fixed=value)


def pi_at(schedule: PiSchedule, iteration: int) -> float:
    if iteration < 0:
        raise ValueError("iteration must be >= 0")
    if schedule.pattern == "fixed":
        return schedule.pi_fixed
    if schedule.pattern == "basic":
        frac = min(1.0, iteration / schedule.warmup_iters)
        return schedule.pi_init + (schedule.pi_max - schedule.pi_init) * frac
    return min(schedule.pi_max, schedule.pi_init + schedule.step_size * (iteration // schedule.step_every))
