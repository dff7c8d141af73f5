"""Gaussian outage probability and finite-SNR diversity-multiplexing tradeoff.

Rates are in nats, SNRs linear.  Three multiplexing-gain conventions are
supported (:class:`MuxGainDef`):

``LOG_SNR``          R = r ln(gamma)
``LOG_SNR_OFFSET``   R = r ln(gamma / e)
``MEAN_FRACTION``    R = r * mean_capacity / min(m, n)

Diversity is reported either as the ratio ``-ln P / ln gamma`` or as the
differential gain ``-d ln P / d ln gamma``.  The closed forms for the latter
(:func:`dprime_closed_form`) and the convergence thresholds
(:func:`convergence_threshold`) assume square i.i.d. channels.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import erfc, log_ndtr

from .asymptotics import CapacityStats, high_snr_stats, keyhole_stats, theorem1_stats
from .capacity import Snr
from .channels import KeyholeChannelSpec
from .errors import BoundInvalidError, DomainError

__all__ = [
    "MuxGainDef",
    "DiversityMethod",
    "DmtPoint",
    "DmtCurve",
    "ApproxOutage",
    "KeyholeDmt",
    "SnrOffset",
    "Derivative",
    "q_function",
    "log_q_function",
    "rate_from_mux",
    "gaussian_outage",
    "log_gaussian_outage",
    "gaussian_outage_bound",
    "outage_with_fallback",
    "diversity_ratio",
    "differential_diversity",
    "dmt_asymptote",
    "approx_outage_iid",
    "dprime_closed_form",
    "convergence_threshold",
    "keyhole_dmt",
    "fit_snr_offset",
    "iid_log_outage_curve",
    "keyhole_log_outage_curve",
]

_SQRT2 = math.sqrt(2.0)

DEFAULT_STEP = 0.01
RICHARDSON_TOL = 1e-3
CONVERGENCE_ACCURACY = 0.1


class MuxGainDef(str, Enum):
    LOG_SNR = "log_snr"
    LOG_SNR_OFFSET = "log_snr_offset"
    MEAN_FRACTION = "mean_fraction"

    @classmethod
    def parse(cls, value) -> "MuxGainDef":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown multiplexing-gain definition {value!r}; expected one of {[m.value for m in cls]}")


class DiversityMethod(str, Enum):
    ANALYTIC_CLOSED_FORM = "analytic-closed-form"
    NUMERIC_DIFFERENTIATION = "numeric-differentiation"
    RATIO_DEFINITION = "ratio-definition"
    MC_EMPIRICAL = "mc-empirical"


@dataclass(frozen=True)
class DmtPoint:
    gamma: float
    r: float
    d: float
    method: DiversityMethod

    @property
    def gamma_db(self) -> float:
        return 10.0 * math.log10(self.gamma)


@dataclass(frozen=True)
class DmtCurve:
    """Points of one tradeoff curve; every point must carry the same method."""

    points: tuple

    def __post_init__(self):
        points = tuple(self.points)
        methods = {p.method for p in points}
        if len(methods) > 1:
            raise ValueError(f"refusing to mix diversity methods in one curve: {sorted(m.value for m in methods)}")
        object.__setattr__(self, "points", points)

    @property
    def method(self) -> Optional[DiversityMethod]:
        return self.points[0].method if self.points else None

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


class ApproxOutage(NamedTuple):
    p_out: float
    offset: float
    delta: float
    exponent: float


class KeyholeDmt(NamedTuple):
    p_out: float
    delta: float
    dprime: float


class SnrOffset(NamedTuple):
    c: float
    log_c: float


class Derivative(NamedTuple):
    """Central-difference estimate plus its half-step Richardson refinement."""

    value: float
    refined: float
    accurate: bool


# --------------------------------------------------------------------------
# Gaussian tail
# --------------------------------------------------------------------------
def q_function(x):
    """Standard Gaussian tail ``Q(x)`` through ``erfc`` (keeps relative accuracy deep in the tail)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)[()]


def log_q_function(x):
    """``ln Q(x)``, finite far beyond where ``Q`` underflows."""
    return log_ndtr(-np.asarray(x, dtype=float))[()]


# --------------------------------------------------------------------------
# Rates and outage
# --------------------------------------------------------------------------
def rate_from_mux(definition, r, gamma, stats: Optional[CapacityStats] = None, p: Optional[int] = None):
    """Target rate in nats for multiplexing gain ``r`` under ``definition``."""
    definition = MuxGainDef.parse(definition)
    gamma = float(gamma)
    if r < 0:
        raise DomainError(f"multiplexing gain must be nonnegative, got {r}", definition.value)
    if definition is MuxGainDef.LOG_SNR:
        if gamma <= 1.0:
            raise DomainError(f"{definition.value} needs gamma > 1, got {gamma:.6g}", definition.value)
        return r * math.log(gamma)
    if definition is MuxGainDef.LOG_SNR_OFFSET:
        if gamma <= math.e:
            raise DomainError(f"{definition.value} needs gamma > e, got {gamma:.6g}", definition.value)
        return r * (math.log(gamma) - 1.0)
    if stats is None or p is None:
        raise ValueError("mean_fraction needs capacity stats and p = min(m, n)")
    if r > p:
        raise DomainError(f"{definition.value} needs r <= min(m, n) = {p}, got {r}", definition.value)
    mean = float(stats.mean)
    if mean <= 0:
        raise DomainError(f"{definition.value} needs a positive mean capacity", definition.value)
    return r * mean / p


def _z(stats, rate):
    if np.any(np.asarray(stats.variance) <= 0):
        raise DomainError("capacity variance must be positive")
    return (np.asarray(stats.mean, dtype=float) - rate) / np.sqrt(stats.variance)


def gaussian_outage(stats: CapacityStats, rate):
    """``Q((mean - R) / sigma)``: the Gaussian-approximation outage probability."""
    return q_function(_z(stats, rate))


def log_gaussian_outage(stats: CapacityStats, rate):
    return log_q_function(_z(stats, rate))


def gaussian_outage_bound(stats: CapacityStats, rate):
    """``exp(-x^2/2) / 2`` with ``x = (mean - R)/sigma``, valid for ``R <= mean``."""
    x = _z(stats, rate)
    if np.any(x < 0):
        raise BoundInvalidError("exponential outage bound needs rate <= mean capacity")
    return (0.5 * np.exp(-0.5 * x * x))[()]


def outage_with_fallback(stats: CapacityStats, rate):
    """Bound where it is valid, exact Gaussian tail otherwise.

    Returns ``(p_out, used_bound)`` for a scalar rate.
    """
    x = float(_z(stats, rate))
    if x >= 0:
        return 0.5 * math.exp(-0.5 * x * x), True
    return float(q_function(x)), False


def diversity_ratio(p_out: float, gamma: float) -> float:
    """``-ln P_out / ln gamma``."""
    if not 0.0 < p_out < 1.0:
        raise DomainError(f"outage probability must lie in (0, 1), got {p_out}")
    if gamma <= 1.0:
        raise DomainError(f"ratio diversity needs gamma > 1, got {gamma}")
    return -math.log(p_out) / math.log(gamma)


def differential_diversity(curve: Callable, gamma: float, *, log_curve: bool = False, step: float = DEFAULT_STEP) -> Derivative:
    """``-d ln P / d ln gamma`` by central differences in ``ln gamma``.

    ``curve`` maps a linear SNR to ``P_out`` (or to ``ln P_out`` when
    ``log_curve`` is true).  The estimate at ``step`` is returned together
    with a Richardson extrapolation from ``step/2``; ``accurate`` is false
    when the two differ by more than 1e-3 (relative, floored at 1).
    """
    gamma = float(gamma)
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    t = math.log(gamma)

    def lnp(u):
        v = float(curve(math.exp(u)))
        if log_curve:
            if not math.isfinite(v) or v >= 0.0:
                raise DomainError(f"ln P_out = {v} at gamma = {math.exp(u):.6g}; log-slope undefined")
            return v
        if not 0.0 < v < 1.0:
            raise DomainError(f"P_out = {v} at gamma = {math.exp(u):.6g}; log-slope undefined")
        return math.log(v)

    def central(h):
        return -(lnp(t + h) - lnp(t - h)) / (2.0 * h)

    d_h = central(step)
    d_half = central(step / 2.0)
    refined = d_half + (d_half - d_h) / 3.0
    accurate = abs(refined - d_h) <= RICHARDSON_TOL * max(1.0, abs(d_h))
    return Derivative(d_h, refined, accurate)


# --------------------------------------------------------------------------
# Asymptotic and closed-form tradeoffs
# --------------------------------------------------------------------------
def dmt_asymptote(r: float, m: int, n: int) -> float:
    """``(n - r)(m - r)`` at integer ``r``, linear in between."""
    p = min(m, n)
    if not 0 <= r <= p:
        raise DomainError(f"r must lie in [0, {p}], got {r}")
    lo = math.floor(r)
    if lo == r:
        return float((n - r) * (m - r))
    hi = lo + 1
    d_lo = (n - lo) * (m - lo)
    d_hi = (n - hi) * (m - hi)
    return float(d_lo + (r - lo) * (d_hi - d_lo))


def approx_outage_iid(gamma: float, n: int, r: float) -> ApproxOutage:
    """``P_out ~ 0.5 (gamma/e)^(-(n-r)^2 Delta)``, ``Delta = 1 + 2/(sqrt(gamma) ln(gamma/e))``.

    Square channel, rate as a fraction of the mean capacity.  Written as
    ``c / gamma^exponent`` the offset is ``c = 0.5 e^exponent``.
    """
    gamma = float(gamma)
    if gamma <= math.e:
        raise DomainError(f"approximation needs gamma > e, got {gamma:.6g}", MuxGainDef.MEAN_FRACTION.value)
    if not 0 <= r <= n:
        raise DomainError(f"r must lie in [0, {n}], got {r}")
    log_ge = math.log(gamma) - 1.0
    delta = 1.0 + 2.0 / (math.sqrt(gamma) * log_ge)
    exponent = (n - r) ** 2 * delta
    p_out = 0.5 * math.exp(-exponent * log_ge)
    return ApproxOutage(p_out, 0.5 * math.exp(exponent), delta, exponent)


def _check_square_gain(n, r):
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0 <= r <= n:
        raise DomainError(f"r must lie in [0, {n}], got {r}")


def dprime_closed_form(definition, gamma: float, n: int, r: float) -> float:
    """Closed-form differential diversity of a square i.i.d. channel.

    ``MEAN_FRACTION``:  (n-r)^2 (1 - 1/(2 sqrt g))
    ``LOG_SNR_OFFSET``: (n-r)^2 (1 - (n+r)/(n-r) / sqrt g)
    ``LOG_SNR``:        (n-r)^2 (1 - (n+r)/(n-r) / sqrt g - (r/(n-r))^2 / ln(g/e)^2)

    ``r = n`` gives exactly zero.
    """
    definition = MuxGainDef.parse(definition)
    gamma = float(gamma)
    _check_square_gain(n, r)
    if definition is MuxGainDef.MEAN_FRACTION:
        if gamma <= 0:
            raise DomainError("gamma must be positive", definition.value)
    elif definition is MuxGainDef.LOG_SNR_OFFSET:
        if gamma <= math.e:
            raise DomainError(f"{definition.value} needs gamma > e, got {gamma:.6g}", definition.value)
    else:
        if gamma <= 1.0 or gamma == math.e:
            raise DomainError(f"{definition.value} needs gamma > 1 and gamma != e, got {gamma:.6g}", definition.value)
    if r == n:
        return 0.0
    base = (n - r) ** 2
    root = math.sqrt(gamma)
    if definition is MuxGainDef.MEAN_FRACTION:
        return base * (1.0 - 1.0 / (2.0 * root))
    spread = (n + r) / (n - r)
    if definition is MuxGainDef.LOG_SNR_OFFSET:
        return base * (1.0 - spread / root)
    log_ge = math.log(gamma) - 1.0
    return base * (1.0 - spread / root - (r / (n - r)) ** 2 / log_ge**2)


def convergence_threshold(definition, n: int, r: float) -> Snr:
    """SNR above which the closed-form d' is within 10% of ``(n - r)^2``.

    ``MEAN_FRACTION`` gives 25 for every ``(n, r)``; ``LOG_SNR_OFFSET``
    gives ``(10 (n+r)/(n-r))^2``; ``LOG_SNR`` the larger of that and
    ``exp(1 + 3r/(n-r))``.
    """
    definition = MuxGainDef.parse(definition)
    if n < 1 or not 0 <= r < n:
        raise DomainError(f"thresholds need 0 <= r < n, got n={n}, r={r}", definition.value)
    if definition is MuxGainDef.MEAN_FRACTION:
        # 1/(2 sqrt g) <= 0.1
        return Snr((1.0 / (2.0 * CONVERGENCE_ACCURACY)) ** 2)
    root_term = ((n + r) / ((n - r) * CONVERGENCE_ACCURACY)) ** 2
    if definition is MuxGainDef.LOG_SNR_OFFSET:
        return Snr(root_term)
    return Snr(max(root_term, math.exp(1.0 + 3.0 * r / (n - r))))


def keyhole_dmt(gamma: float, spec: KeyholeChannelSpec, r: float) -> KeyholeDmt:
    """Finite-SNR tradeoff of a correlated keyhole channel.

    With ``s2 = m^-2||R_t||^2 + n^-2||R_r||^2``: ``Delta = ln(g n)/(2 s2)``,
    ``P_out = 0.5 (n g)^(-(1-r)^2 Delta)``, ``d' = (1-r)^2 ln(g n) / s2``.
    """
    gamma = float(gamma)
    if not 0 <= r <= 1:
        raise DomainError(f"keyhole multiplexing gain must lie in [0, 1], got {r}")
    if spec.n * gamma <= 1.0:
        raise DomainError(f"keyhole tradeoff needs n*gamma > 1, got {spec.n * gamma:.6g}")
    s2 = spec.correlation_variance
    log_ng = math.log(spec.n * gamma)
    d = (1.0 - r) ** 2
    delta = log_ng / (2.0 * s2)
    p_out = 0.5 * math.exp(-d * delta * log_ng)
    return KeyholeDmt(p_out, delta, d * log_ng / s2)


def fit_snr_offset(gammas: Sequence[float], p_out: Sequence[float], d: float, *, log_p: bool = False) -> SnrOffset:
    """Least-squares ``ln c`` in ``ln P = ln c - d ln gamma`` with ``d`` fixed.

    Pass ``log_p=True`` to supply ``ln P`` directly (useful deep in the tail).
    """
    gammas = np.asarray(gammas, dtype=float)
    vals = np.asarray(p_out, dtype=float)
    if gammas.size < 2 or gammas.shape != vals.shape:
        raise ValueError("need at least two matching (gamma, P_out) samples")
    if d <= 0:
        raise DomainError(f"diversity must be positive, got {d}")
    ln_p = vals if log_p else np.log(vals)
    log_c = float(np.mean(ln_p + d * np.log(gammas)))
    return SnrOffset(math.exp(log_c), log_c)


# --------------------------------------------------------------------------
# Analytic outage curves used for numeric differentiation
# --------------------------------------------------------------------------
def iid_log_outage_curve(n: int, r: float, definition, *, beta: float = 1.0, moments: str = "theorem1"):
    """``gamma -> ln P_out`` for an i.i.d. channel under the Gaussian approximation.

    ``moments`` selects the exact large-system statistics (``"theorem1"``)
    or the high-SNR expansion (``"high_snr"``, square channels only).
    """
    definition = MuxGainDef.parse(definition)
    if moments == "theorem1":
        def stats_of(g):
            return theorem1_stats(g, n, beta)
    elif moments == "high_snr":
        if beta != 1.0:
            raise DomainError("high-SNR expansion covers square channels only")

        def stats_of(g):
            return high_snr_stats(g, n)
    else:
        raise ValueError(f"unknown moments {moments!r}")
    p = min(n, int(round(beta * n)))

    def curve(gamma):
        stats = stats_of(gamma)
        rate = rate_from_mux(definition, r, gamma, stats, p)
        return float(log_gaussian_outage(stats, rate))

    return curve


def keyhole_log_outage_curve(spec: KeyholeChannelSpec, r: float):
    """``gamma -> ln P_out`` for a keyhole channel, rate ``r`` times the mean."""

    def curve(gamma):
        stats = keyhole_stats(gamma, spec)
        rate = rate_from_mux(MuxGainDef.MEAN_FRACTION, r, gamma, stats, 1)
        return float(log_gaussian_outage(stats, rate))

    return curve
