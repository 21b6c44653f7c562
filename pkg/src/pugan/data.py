"""Data sources: finite discrete distributions, synthetic mixtures, noise,
and IDX image ingestion for optional smoke tests.

Discrete distributions carry the exact-theory side of the package; the
synthetic mixtures (ring/grid of Gaussians, 1D mixtures) are the training
benchmarks.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Rng, Tensor

PROB_TOL = 1e-12
# sanity cap on count*height*width for IDX payloads
_IDX_MAX_ELEMENTS = 1 << 31


class InadmissiblePriorError(ValueError):
    """The class prior would make the low-quality density negative somewhere."""


class IdxFormatError(ValueError):
    """Base class for IDX ingestion failures."""


class IdxBadMagicError(IdxFormatError):
    pass


class IdxTruncatedError(IdxFormatError):
    pass


class IdxDimensionOverflowError(IdxFormatError):
    pass


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector on a finite support."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a nonempty 1D vector")
        if np.any(p < 0.0):
            raise ValueError("probs must be nonnegative")
        if abs(float(p.sum()) - 1.0) > PROB_TOL:
            raise ValueError(f"probs sum to {p.sum()!r}, not 1 within {PROB_TOL}")
        object.__setattr__(self, "probs", p)

    @property
    def support_size(self) -> int:
        return self.probs.size


def derive_pgf(p_data: DiscreteDistribution, p_g: DiscreteDistribution, pi: float) -> DiscreteDistribution:
    """Low-quality component (p_g - pi*p_data)/(1-pi) of the generated mixture.

    Raises InadmissiblePriorError if any component would be negative beyond
    rounding tolerance; renormalizes only to absorb <= 1e-12 of rounding.
    """
    if not 0.0 < pi < 1.0:
        raise InadmissiblePriorError(f"pi={pi} out of (0,1)")
    if p_data.support_size != p_g.support_size:
        raise ValueError("p_data and p_g must share a support")
    raw = p_g.probs - pi * p_data.probs
    if np.any(raw < -PROB_TOL):
        worst = float(raw.min())
        raise InadmissiblePriorError(f"pi={pi} inadmissible: p_g - pi*p_data reaches {worst}")
    raw = np.maximum(raw, 0.0) / (1.0 - pi)
    total = float(raw.sum())
    if abs(total - 1.0) > 1e-9:
        raise InadmissiblePriorError(f"derived p_gf sums to {total}, renormalization refused")
    return DiscreteDistribution(raw / total)


# ---------------------------------------------------------------------------
# synthetic continuous sources
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Isotropic Gaussian mixture; the stand-in for real data at desk scale."""

    kind: str
    means: np.ndarray  # [n_components, dim]
    stds: np.ndarray  # [n_components], std >= 0 (0 = degenerate point mass)
    weights: DiscreteDistribution

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        stds = np.asarray(self.stds, dtype=np.float64).reshape(-1)
        if means.shape[0] != stds.size or means.shape[0] != self.weights.support_size:
            raise ValueError("means, stds and weights must agree on component count")
        if np.any(stds < 0.0):
            raise ValueError("stds must be nonnegative")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @classmethod
    def gauss1d(cls, mean: float = 3.0, std: float = 0.5) -> "SyntheticSpec":
        return cls("gauss1d", np.array([[mean]]), np.array([std]), DiscreteDistribution(np.array([1.0])))

    @classmethod
    def mixture1d(cls, means, stds, weights) -> "SyntheticSpec":
        means = np.asarray(means, dtype=np.float64).reshape(-1, 1)
        return cls("mixture1d", means, np.asarray(stds, dtype=np.float64), DiscreteDistribution(np.asarray(weights, dtype=np.float64)))

    @classmethod
    def ring2d(cls, n_modes: int = 8, radius: float = 2.0, std: float = 0.02) -> "SyntheticSpec":
        angles = 2.0 * np.pi * np.arange(n_modes) / n_modes
        means = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        return cls(
            "ring2d",
            means,
            np.full(n_modes, std),
            DiscreteDistribution(np.full(n_modes, 1.0 / n_modes)),
        )

    @classmethod
    def grid2d(cls, side: int = 5, spacing: float = 2.0, std: float = 0.05) -> "SyntheticSpec":
        half = (side - 1) / 2.0
        coords = (np.arange(side) - half) * spacing
        means = np.array([[x, y] for x in coords for y in coords])
        n = side * side
        return cls("grid2d", means, np.full(n, std), DiscreteDistribution(np.full(n, 1.0 / n)))


def sample_real(spec: SyntheticSpec, rng: Rng, m: int) -> Tensor:
    """m i.i.d. draws from the mixture, shape [m, dim]."""
    if m < 1:
        raise ValueError("m must be >= 1")
    idx = rng.choice(spec.weights.support_size, size=m, p=spec.weights.probs)
    noise = rng.normal((m, spec.dim))
    pts = spec.means[idx] + spec.stds[idx][:, None] * noise
    return Tensor(pts)


def mode_centers(spec: SyntheticSpec) -> tuple[np.ndarray, float]:
    """Mixture means and the largest component std, as used by coverage metrics."""
    return spec.means.copy(), float(spec.stds.max())


@dataclass(frozen=True)
class NoiseSource:
    """Standard-normal latent prior of a fixed dimension."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("noise dim must be >= 1")


def sample_noise(src: NoiseSource, rng: Rng, m: int) -> Tensor:
    if m < 1:
        raise ValueError("m must be >= 1")
    return Tensor(rng.normal((m, src.dim)))


# ---------------------------------------------------------------------------
# file ingestion
# ---------------------------------------------------------------------------


_IDX_MAGIC = 0x00000803  # unsigned-byte, rank 3


@dataclass(frozen=True)
class ImageDataset:
    """Grayscale images flattened to [-1, 1] floats."""

    count: int
    height: int
    width: int
    pixels: np.ndarray = field(repr=False)  # flat float64, length count*height*width

    def __post_init__(self):
        if self.count * self.height * self.width != self.pixels.size:
            raise ValueError("pixel count does not match dimensions")
        if self.pixels.size and (self.pixels.min() < -1.0 or self.pixels.max() > 1.0):
            raise ValueError("pixels must lie in [-1, 1]")

    def rows(self) -> np.ndarray:
        return self.pixels.reshape(self.count, self.height * self.width)


def load_idx_images(path) -> ImageDataset:
    """Parse a big-endian IDX file of unsigned-byte rank-3 data.

    Pixel bytes b map to b/127.5 - 1, the [-1, 1] range Tanh generators emit.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 4:
        raise IdxTruncatedError(f"{path}: file shorter than the magic field")
    (magic,) = struct.unpack(">I", blob[:4])
    if magic != _IDX_MAGIC:
        raise IdxBadMagicError(f"{path}: magic 0x{magic:08x}, expected 0x{_IDX_MAGIC:08x}")
    if len(blob) < 16:
        raise IdxTruncatedError(f"{path}: header truncated ({len(blob)} bytes)")
    count, height, width = struct.unpack(">III", blob[4:16])
    n = count * height * width
    if n > _IDX_MAX_ELEMENTS:
        raise IdxDimensionOverflowError(f"{path}: {count}x{height}x{width} exceeds sanity cap")
    payload = blob[16:]
    if len(payload) < n:
        raise IdxTruncatedError(f"{path}: payload has {len(payload)} bytes, expected {n}")
    pixels = np.frombuffer(payload[:n], dtype=np.uint8).astype(np.float64) / 127.5 - 1.0
    return ImageDataset(count, height, width, pixels)


def images_to_idx_bytes(ds: ImageDataset) -> bytes:
    """Inverse of load_idx_images (used to verify the ingestion round trip)."""
    header = struct.pack(">IIII", _IDX_MAGIC, ds.count, ds.height, ds.width)
    quantized = np.rint((ds.pixels + 1.0) * 127.5).astype(np.uint8)
    return header + quantized.tobytes()


def sample_images(ds: ImageDataset, rng: Rng, m: int) -> Tensor:
    idx = rng.choice(ds.count, size=m)
    return Tensor(ds.rows()[idx])


def load_csv_points(path) -> np.ndarray:
    """Headerless CSV point cloud: one row per sample, comma-separated floats."""
    pts = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return pts
