"""Seeded, sharded Monte-Carlo estimation of outage probability.

Trials are cut into fixed-size shards.  Shard ``k`` draws from its own
generator, seeded by ``SeedSequence(seed, spawn_key=(..., k))``, so its
samples never depend on which worker ran it.  Shard results are merged in
shard order, making every estimate a pure function of the plan: the
``workers`` knob changes wall time only.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from . import kernels
from .asymptotics import keyhole_stats, theorem1_stats
from .capacity import EmpiricalStats, capacity_batch, merge, rank1_capacity
from .channels import ChannelSpec, KeyholeChannelSpec, sample_iid, sample_keyhole_vectors
from .errors import DomainError
from .outage import MuxGainDef, rate_from_mux

__all__ = [
    "McPlan",
    "McEstimate",
    "run_plan",
    "common_random_sweep",
    "common_random_sweeps",
    "wilson_interval",
    "shard_generator",
    "analytic_stats",
]

DEFAULT_TRIALS = 1_000_000
DEFAULT_SHARD_SIZE = 1 << 15
TRUST_COUNT = 100


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion, clipped to [0, 1]."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")
    z = float(norm.ppf(0.5 + level / 2.0))
    p = successes / trials
    z2n = z * z / trials
    denom = 1.0 + z2n
    center = (p + z2n / 2.0) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class McPlan:
    """What to simulate.

    Either ``definition`` (with gain ``r``) or a fixed ``rate`` in nats sets
    the target rate at each grid SNR.  ``gammas`` are linear and strictly
    increasing.
    """

    channel: ChannelSpec
    gammas: Sequence[float]
    definition: Optional[MuxGainDef] = None
    r: float = 0.0
    rate: Optional[float] = None
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    shard_size: int = DEFAULT_SHARD_SIZE
    keep_samples: bool = False

    def __post_init__(self):
        gammas = tuple(float(g) for g in np.atleast_1d(self.gammas))
        if not gammas:
            raise ValueError("SNR grid is empty")
        if any(g <= 0 for g in gammas) or any(b <= a for a, b in zip(gammas, gammas[1:])):
            raise ValueError("SNR grid must be positive and strictly increasing")
        object.__setattr__(self, "gammas", gammas)
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.shard_size < 1:
            raise ValueError(f"shard_size must be >= 1, got {self.shard_size}")
        if (self.definition is None) == (self.rate is None):
            raise ValueError("give exactly one of a multiplexing-gain definition or a fixed rate")
        if self.definition is not None:
            object.__setattr__(self, "definition", MuxGainDef.parse(self.definition))
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def shards(self) -> List[Tuple[int, int]]:
        """``(index, size)`` for each shard; the last one may be short."""
        full, rest = divmod(self.trials, self.shard_size)
        out = [(k, self.shard_size) for k in range(full)]
        if rest:
            out.append((full, rest))
        return out


@dataclass(frozen=True)
class McEstimate:
    gamma: float
    rate: float
    p_hat: float
    outages: int
    trials: int
    ci95: Tuple[float, float]
    cap_mean: float
    cap_var: float
    stats: Optional[EmpiricalStats] = field(default=None, repr=False, compare=False)
    skipped: Optional[str] = None

    @property
    def gamma_db(self) -> float:
        return 10.0 * math.log10(self.gamma)

    @property
    def trusted(self) -> bool:
        """True when at least ``TRUST_COUNT`` outages were observed."""
        return self.skipped is None and self.outages >= TRUST_COUNT


def shard_generator(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def analytic_stats(channel: ChannelSpec, gamma: float):
    if isinstance(channel, KeyholeChannelSpec):
        return keyhole_stats(gamma, channel)
    return theorem1_stats(gamma, channel.n, channel.beta)


def _min_dim(channel: ChannelSpec) -> int:
    # The keyhole matrix has rank one.
    return 1 if isinstance(channel, KeyholeChannelSpec) else min(channel.m, channel.n)


def _rate_at(plan: McPlan, gamma: float) -> float:
    if plan.rate is not None:
        return float(plan.rate)
    stats = analytic_stats(plan.channel, gamma) if plan.definition is MuxGainDef.MEAN_FRACTION else None
    return rate_from_mux(plan.definition, plan.r, gamma, stats, _min_dim(plan.channel))


def _rates(plan: McPlan):
    rates, reasons = [], []
    for g in plan.gammas:
        try:
            rates.append(_rate_at(plan, g))
            reasons.append(None)
        except DomainError as exc:
            rates.append(math.nan)
            reasons.append(str(exc))
    return np.array(rates), reasons


def _sample_capacity(channel, rng, size, gamma):
    if isinstance(channel, KeyholeChannelSpec):
        h_r, h_t = sample_keyhole_vectors(channel, rng, size)
        return rank1_capacity(h_r, h_t, gamma, channel.m)
    return capacity_batch(sample_iid(channel, rng, size), gamma, channel.m)


def _sample_gram_spectrum(channel, rng, size):
    if isinstance(channel, KeyholeChannelSpec):
        h_r, h_t = sample_keyhole_vectors(channel, rng, size)
        prod = np.sum(np.abs(h_r) ** 2, axis=-1) * np.sum(np.abs(h_t) ** 2, axis=-1)
        return prod[:, None]
    return kernels.gram_eigvals(sample_iid(channel, rng, size))


def _map(fn, tasks, workers):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _estimate(gamma, rate, outages, trials, stats, reason, keep_samples):
    if reason is not None:
        nan = math.nan
        return McEstimate(gamma, nan, nan, 0, trials, (nan, nan), stats.mean, stats.variance,
                          stats if keep_samples else None, reason)
    return McEstimate(
        gamma=gamma,
        rate=float(rate),
        p_hat=outages / trials,
        outages=int(outages),
        trials=trials,
        ci95=wilson_interval(int(outages), trials),
        cap_mean=stats.mean,
        cap_var=stats.variance,
        stats=stats if keep_samples else None,
    )


def run_plan(plan: McPlan, workers: int = 1) -> List[McEstimate]:
    """Independent Monte-Carlo estimate at every grid SNR.

    Grid point ``i`` and shard ``k`` use substream ``(seed, i, k)``.  A grid
    point outside the rate definition's domain is returned with ``skipped``
    set instead of aborting the sweep.
    """
    rates, reasons = _rates(plan)
    tasks = [(i, k, size) for i in range(len(plan.gammas)) for k, size in plan.shards]

    def work(task):
        i, k, size = task
        c = _sample_capacity(plan.channel, shard_generator(plan.seed, i, k), size, plan.gammas[i])
        outages = int(np.count_nonzero(c < rates[i])) if reasons[i] is None else 0
        return outages, EmpiricalStats.from_batch(c, plan.keep_samples)

    results = _map(work, tasks, workers)
    nshards = len(plan.shards)
    out = []
    for i, g in enumerate(plan.gammas):
        chunk = results[i * nshards:(i + 1) * nshards]
        outages = sum(o for o, _ in chunk)
        stats = merge(s for _, s in chunk)
        out.append(_estimate(g, rates[i], outages, plan.trials, stats, reasons[i], plan.keep_samples))
    return out


def common_random_sweeps(plans: Sequence[McPlan], workers: int = 1) -> List[List[McEstimate]]:
    """Run several rate policies on one shared set of channel realizations.

    Every plan must agree on channel, grid, trials, seed and shard size;
    only the rate policy may differ.  Shard ``k`` uses substream
    ``(seed, k)`` and its realizations are reused at every grid SNR, so
    ``p_hat`` at a fixed rate is exactly nonincreasing in SNR.
    """
    plans = list(plans)
    if not plans:
        return []
    base = plans[0]
    for p in plans[1:]:
        same = (p.channel is base.channel or p.channel == base.channel)
        if not same or p.gammas != base.gammas or p.trials != base.trials or p.seed != base.seed or p.shard_size != base.shard_size:
            raise ValueError("common-random sweeps must share channel, grid, trials, seed and shard size")
    channel = base.channel
    gammas = np.array(base.gammas)
    rate_rows = []
    reason_rows = []
    for p in plans:
        rates, reasons = _rates(p)
        rate_rows.append(rates)
        reason_rows.append(reasons)
    rate_table = np.array(rate_rows)
    valid = ~np.isnan(rate_table)
    filled = np.where(valid, rate_table, -np.inf)
    scales = gammas / channel.m

    def work(task):
        k, size = task
        spectrum = _sample_gram_spectrum(channel, shard_generator(base.seed, k), size)
        caps = kernels.capacity_from_eigs(spectrum, scales)
        counts = np.count_nonzero(caps[None, :, :] < filled[:, :, None], axis=2)
        return counts, [EmpiricalStats.from_batch(row, base.keep_samples) for row in caps]

    results = _map(work, base.shards, workers)
    counts = np.zeros_like(rate_table, dtype=np.int64)
    for c, _ in results:
        counts += c
    stats = [merge(res[1][j] for res in results) for j in range(len(gammas))]
    out = []
    for pi, p in enumerate(plans):
        row = []
        for j, g in enumerate(base.gammas):
            row.append(_estimate(g, rate_table[pi, j], counts[pi, j], base.trials, stats[j],
                                 reason_rows[pi][j], base.keep_samples))
        out.append(row)
    return out


def common_random_sweep(plan: McPlan, workers: int = 1) -> List[McEstimate]:
    """:func:`common_random_sweeps` for a single rate policy."""
    return common_random_sweeps([plan], workers)[0]
