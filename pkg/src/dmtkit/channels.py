"""Random MIMO channel ensembles.

Two families are provided:

* i.i.d. entries drawn from a :class:`FadingFamily`, both members of which
  have zero mean, ``E|h|^2 = 1`` and ``E|h|^4 = 2``;
* the correlated keyhole channel ``H = h_r h_t^+`` with Gaussian end
  vectors coloured by Tx/Rx correlation matrices.

All samplers take a :class:`numpy.random.Generator` and an optional batch
``size``; they are pure functions of the generator state.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .errors import InvalidSpecError

__all__ = [
    "FadingFamily",
    "IidChannelSpec",
    "KeyholeChannelSpec",
    "ChannelSpec",
    "sample_iid",
    "sample_keyhole",
    "sample_keyhole_vectors",
    "exponential_correlation",
    "correlation_measure",
    "hermitian_sqrt",
]

_NORM_TOL = 1e-9
_PSD_TOL = 1e-10


class FadingFamily(str, Enum):
    """Per-entry distribution of an i.i.d. channel."""

    COMPLEX_GAUSSIAN = "complex-gaussian"
    ON_OFF = "on-off-uniform-phase"

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self is FadingFamily.COMPLEX_GAUSSIAN:
            re = rng.standard_normal(shape)
            im = rng.standard_normal(shape)
            return (re + 1j * im) * np.sqrt(0.5)
        # |h|^2 in {0, 2} with equal probability, phase uniform on [0, 2pi).
        on = rng.random(shape) < 0.5
        phase = rng.random(shape) * (2.0 * np.pi)
        return np.where(on, np.sqrt(2.0), 0.0) * np.exp(1j * phase)

    @property
    def second_moment(self) -> float:
        return 1.0

    @property
    def fourth_moment(self) -> float:
        return 2.0


@dataclass(frozen=True)
class IidChannelSpec:
    """``n x m`` channel with i.i.d. entries from ``family``."""

    m: int
    n: int
    family: FadingFamily = FadingFamily.COMPLEX_GAUSSIAN

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n or self.m < 1 or self.n < 1:
            raise InvalidSpecError(f"antenna counts must be positive integers, got m={self.m}, n={self.n}")
        object.__setattr__(self, "family", FadingFamily(self.family))

    @property
    def beta(self) -> float:
        return self.m / self.n

    @property
    def kind(self) -> str:
        return "iid"


def _check_correlation(R, size, label):
    R = np.asarray(R, dtype=np.complex128)
    if R.shape != (size, size):
        raise InvalidSpecError(f"{label} must be {size}x{size}, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise InvalidSpecError(f"{label} has non-finite entries")
    if not np.allclose(R, R.conj().T, atol=1e-12, rtol=0.0):
        raise InvalidSpecError(f"{label} is not Hermitian")
    trace = np.trace(R).real / size
    if abs(trace - 1.0) > _NORM_TOL:
        raise InvalidSpecError(f"{label} must satisfy tr(R)/size = 1, got {trace:.12g}")
    w = np.linalg.eigvalsh(R)
    if w.min() < -_PSD_TOL * max(1.0, w.max()):
        raise InvalidSpecError(f"{label} is not positive semi-definite (min eigenvalue {w.min():.3g})")
    return R


@dataclass(frozen=True, eq=False)
class KeyholeChannelSpec:
    """Correlated keyhole channel ``H = h_r h_t^+``.

    ``r_t`` (m x m) and ``r_r`` (n x n) must be Hermitian PSD with unit
    normalised trace.  They are validated, never rescaled.
    """

    m: int
    n: int
    r_t: np.ndarray = field(default=None, repr=False)
    r_r: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n or self.m < 1 or self.n < 1:
            raise InvalidSpecError(f"antenna counts must be positive integers, got m={self.m}, n={self.n}")
        r_t = np.eye(self.m) if self.r_t is None else self.r_t
        r_r = np.eye(self.n) if self.r_r is None else self.r_r
        object.__setattr__(self, "r_t", _check_correlation(r_t, self.m, "R_t"))
        object.__setattr__(self, "r_r", _check_correlation(r_r, self.n, "R_r"))

    @property
    def beta(self) -> float:
        return self.m / self.n

    @property
    def kind(self) -> str:
        return "keyhole"

    @cached_property
    def tx_factor(self) -> np.ndarray:
        return hermitian_sqrt(self.r_t)

    @cached_property
    def rx_factor(self) -> np.ndarray:
        return hermitian_sqrt(self.r_r)

    @property
    def correlation_variance(self) -> float:
        return correlation_measure(self.r_t, self.m) + correlation_measure(self.r_r, self.n)


ChannelSpec = Union[IidChannelSpec, KeyholeChannelSpec]


def hermitian_sqrt(R: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix via ``eigh``."""
    w, V = np.linalg.eigh(np.asarray(R, dtype=np.complex128))
    if w.min() < -_PSD_TOL * max(1.0, w.max()):
        raise InvalidSpecError(f"matrix is not positive semi-definite (min eigenvalue {w.min():.3g})")
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T


def sample_iid(spec: IidChannelSpec, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Draw one ``(n, m)`` channel, or a ``(size, n, m)`` stack."""
    shape = (spec.n, spec.m) if size is None else (size, spec.n, spec.m)
    return spec.family.sample(rng, shape)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def sample_keyhole_vectors(spec: KeyholeChannelSpec, rng: np.random.Generator, size: Optional[int] = None):
    """Return the coloured end vectors ``(h_r, h_t)`` of a keyhole channel.

    Shapes are ``(n,)``/``(m,)`` or ``(size, n)``/``(size, m)``.  ``h_r`` is
    drawn before ``h_t`` so :func:`sample_keyhole` consumes the same stream.
    """
    lead = () if size is None else (size,)
    w_r = _cn(rng, lead + (spec.n,))
    w_t = _cn(rng, lead + (spec.m,))
    h_r = w_r @ spec.rx_factor.T
    h_t = w_t @ spec.tx_factor.T
    return h_r, h_t


def sample_keyhole(spec: KeyholeChannelSpec, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Draw a rank-one keyhole channel ``h_r h_t^+`` (or a stack of them)."""
    h_r, h_t = sample_keyhole_vectors(spec, rng, size)
    return h_r[..., :, None] * np.conj(h_t)[..., None, :]


def exponential_correlation(size: int, rho: float) -> np.ndarray:
    """Exponential correlation model with entries ``rho**|i-j|``."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if size < 1:
        raise ValueError(f"size must be positive, got {size}")
    idx = np.arange(size)
    return np.power(float(rho), np.abs(idx[:, None] - idx[None, :])).astype(float)


def correlation_measure(R: np.ndarray, size: int) -> float:
    """``size**-2 * ||R||_F**2``: 1/size when uncorrelated, 1 when fully correlated."""
    R = np.asarray(R)
    if R.shape != (size, size):
        raise ValueError(f"expected a {size}x{size} matrix, got shape {R.shape}")
    return float(np.sum(np.abs(R) ** 2)) / size**2
