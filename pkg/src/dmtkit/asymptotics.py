"""Large-system Gaussian statistics of the instantaneous capacity.

All functions accept scalars or numpy arrays for the SNR and broadcast.
"""

from typing import NamedTuple

import numpy as np

from .channels import KeyholeChannelSpec, correlation_measure
from .errors import DomainError, NumericalDomainError

__all__ = [
    "CapacityStats",
    "f_function",
    "theorem1_stats",
    "high_snr_stats",
    "keyhole_stats",
]


def _out(x):
    x = np.asarray(x, dtype=float)
    return x[()] if x.ndim == 0 else x


class CapacityStats(NamedTuple):
    """Mean (nats) and variance (nats^2) of the capacity."""

    mean: float
    variance: float

    @property
    def std(self):
        return np.sqrt(self.variance)


def f_function(x, z):
    """``F(x, z) = (sqrt(x(1+sqrt z)^2 + 1) - sqrt(x(1-sqrt z)^2 + 1))^2``.

    Evaluated as ``(4 x sqrt(z) / (a + b))^2`` with ``a``, ``b`` the two
    radicals, which is algebraically identical and free of cancellation at
    large ``x``.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(x <= 0) or np.any(z <= 0):
        raise DomainError("F(x, z) requires x > 0 and z > 0")
    sz = np.sqrt(z)
    a = np.sqrt(x * (1.0 + sz) ** 2 + 1.0)
    b = np.sqrt(x * (1.0 - sz) ** 2 + 1.0)
    return _out((4.0 * x * sz / (a + b)) ** 2)


def theorem1_stats(gamma, n: int, beta: float = 1.0) -> CapacityStats:
    """Asymptotic mean and variance for an i.i.d. ``n x m`` channel, ``beta = m/n``.

    With ``F = F(gamma/beta, beta)``::

        mean/n   = beta ln(1 + gamma/beta - F/4) + ln(1 + gamma - F/4) - beta F / (4 gamma)
        variance = -ln(1 - beta (F / (4 gamma))^2)

    For ``beta = 1`` this is ``2 ln(1 + gamma - F/4) - F/(4 gamma)`` per
    antenna.  The mean scales with ``n``; the variance does not.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0):
        raise DomainError("theorem1_stats requires gamma > 0")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if beta <= 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    F = f_function(gamma / beta, beta)
    per_antenna = (
        beta * np.log1p(gamma / beta - F / 4.0)
        + np.log1p(gamma - F / 4.0)
        - beta * F / (4.0 * gamma)
    )
    u = beta * (F / (4.0 * gamma)) ** 2
    if np.any(u >= 1.0):
        raise NumericalDomainError("variance argument 1 - beta (F/4gamma)^2 is not positive")
    variance = -np.log1p(-u)
    return CapacityStats(_out(n * per_antenna), _out(variance))


def high_snr_stats(gamma, n: int) -> CapacityStats:
    """Moderate/high-SNR expansion of the square-channel statistics.

    ``mean = n (ln(gamma/e) + 2/sqrt(gamma))``,
    ``variance = (ln(gamma/4) + 2/sqrt(gamma)) / 2``.  Only meaningful for
    ``gamma > 1``.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 1.0):
        raise DomainError("high-SNR expansion requires gamma > 1")
    root = 2.0 / np.sqrt(gamma)
    mean = n * (np.log(gamma) - 1.0 + root)
    variance = 0.5 * (np.log(gamma / 4.0) + root)
    return CapacityStats(_out(mean), _out(variance))


def keyhole_stats(gamma, spec: KeyholeChannelSpec) -> CapacityStats:
    """Mean ``ln(1 + n gamma)`` and variance ``m^-2||R_t||^2 + n^-2||R_r||^2``."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0):
        raise DomainError("keyhole_stats requires gamma > 0")
    variance = correlation_measure(spec.r_t, spec.m) + correlation_measure(spec.r_r, spec.n)
    mean = np.log1p(spec.n * gamma)
    return CapacityStats(_out(mean), _out(np.full(np.shape(mean), variance)))
