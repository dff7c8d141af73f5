"""Instantaneous log-det capacity and streaming capacity statistics.

Capacities are in nats throughout.  SNR values are linear unless a name
says ``db``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels

__all__ = [
    "Snr",
    "db_to_linear",
    "linear_to_db",
    "instantaneous_capacity",
    "capacity_batch",
    "rank1_capacity",
    "EmpiricalStats",
    "accumulate",
    "merge",
    "empirical_outage",
]


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def linear_to_db(linear):
    return 10.0 * np.log10(np.asarray(linear, dtype=float))


@dataclass(frozen=True, order=True)
class Snr:
    """Average SNR per receive antenna, stored linear."""

    linear: float

    def __post_init__(self):
        if not np.isfinite(self.linear) or self.linear <= 0:
            raise ValueError(f"SNR must be positive and finite, got {self.linear}")
        object.__setattr__(self, "linear", float(self.linear))

    @classmethod
    def from_db(cls, db: float) -> "Snr":
        return cls(float(db_to_linear(db)))

    @property
    def db(self) -> float:
        return float(linear_to_db(self.linear))

    def __float__(self):
        return self.linear


def _check_finite(H):
    if not np.all(np.isfinite(H)):
        raise ValueError("channel matrix contains non-finite entries")


def instantaneous_capacity(H, gamma, m: Optional[int] = None) -> float:
    """``ln det(I + (gamma/m) H H^+)`` of a single ``n x m`` channel.

    ``m`` defaults to the number of columns of ``H``.  The determinant comes
    from a Cholesky factor of the (smaller) Gram matrix, which is Hermitian
    positive definite by construction.
    """
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim != 2:
        raise ValueError(f"expected a 2-D channel matrix, got shape {H.shape}")
    return float(capacity_batch(H[None], gamma, m)[0])


def capacity_batch(H, gamma, m: Optional[int] = None) -> np.ndarray:
    """Vectorised :func:`instantaneous_capacity` over a ``(T, n, m)`` stack."""
    H = np.asarray(H, dtype=np.complex128)
    _check_finite(H)
    gamma = float(gamma)
    if gamma <= 0:
        raise ValueError(f"SNR must be positive, got {gamma}")
    m = H.shape[-1] if m is None else m
    c = kernels.logdet_capacity(H, gamma / m)
    # ln det(I + PSD) >= 0; tiny negative values are pure round-off.
    return np.maximum(c, 0.0)


def rank1_capacity(h_r, h_t, gamma, m: Optional[int] = None):
    """Capacity of ``H = h_r h_t^+`` via the determinant lemma.

    ``ln(1 + (gamma/m) ||h_r||^2 ||h_t||^2)``; works on single vectors or
    on stacks with the antenna index last.
    """
    h_r = np.asarray(h_r)
    h_t = np.asarray(h_t)
    m = h_t.shape[-1] if m is None else m
    nr = np.sum(np.abs(h_r) ** 2, axis=-1)
    nt = np.sum(np.abs(h_t) ** 2, axis=-1)
    return np.log1p((float(gamma) / m) * nr * nt)


@dataclass(frozen=True)
class EmpiricalStats:
    """Running count/mean/sum-of-squares with an optional sample reservoir.

    ``m2`` is the sum of squared deviations from the mean, so the unbiased
    variance is ``m2 / (count - 1)``.  Instances are immutable; updates
    return new objects.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    min: float = np.inf
    max: float = -np.inf
    samples: Optional[np.ndarray] = None

    @classmethod
    def empty(cls, keep_samples: bool = False) -> "EmpiricalStats":
        return cls(samples=np.empty(0) if keep_samples else None)

    @classmethod
    def from_batch(cls, values, keep_samples: bool = False) -> "EmpiricalStats":
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return cls.empty(keep_samples)
        mean = float(values.mean())
        m2 = float(np.sum((values - mean) ** 2))
        return cls(
            count=int(values.size),
            mean=mean,
            m2=m2,
            min=float(values.min()),
            max=float(values.max()),
            samples=values.copy() if keep_samples else None,
        )

    @property
    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    def add(self, value: float) -> "EmpiricalStats":
        # Welford update.
        value = float(value)
        count = self.count + 1
        delta = value - self.mean
        mean = self.mean + delta / count
        m2 = self.m2 + delta * (value - mean)
        samples = None if self.samples is None else np.append(self.samples, value)
        return EmpiricalStats(count, mean, m2, min(self.min, value), max(self.max, value), samples)

    def merge(self, other: "EmpiricalStats") -> "EmpiricalStats":
        """Chan et al. pairwise combination; ``a.merge(b)`` keeps a's samples first."""
        if other.count == 0:
            return self._with_samples(other)
        if self.count == 0:
            return other._with_samples(self, prepend=True)
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / count)
        m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count / count)
        if self.samples is not None and other.samples is not None:
            samples = np.concatenate([self.samples, other.samples])
        else:
            samples = None
        return EmpiricalStats(count, mean, m2, min(self.min, other.min), max(self.max, other.max), samples)

    def _with_samples(self, other, prepend=False):
        if self.samples is None or other.samples is None:
            return EmpiricalStats(self.count, self.mean, self.m2, self.min, self.max, None)
        parts = [other.samples, self.samples] if prepend else [self.samples, other.samples]
        return EmpiricalStats(self.count, self.mean, self.m2, self.min, self.max, np.concatenate(parts))


def accumulate(stats: EmpiricalStats, sample: float) -> EmpiricalStats:
    return stats.add(sample)


def merge(parts) -> EmpiricalStats:
    """Fold accumulators left to right, the fixed order shards are merged in."""
    out = None
    for part in parts:
        out = part if out is None else out.merge(part)
    return EmpiricalStats.empty() if out is None else out


def empirical_outage(samples, rate: float) -> float:
    """Fraction of capacity samples strictly below ``rate``.

    ``samples`` may be an array or an :class:`EmpiricalStats` that kept its
    reservoir.
    """
    if isinstance(samples, EmpiricalStats):
        if samples.samples is None:
            raise ValueError("accumulator has no sample reservoir")
        samples = samples.samples
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empirical outage needs at least one sample")
    return float(np.count_nonzero(samples < rate)) / samples.size
