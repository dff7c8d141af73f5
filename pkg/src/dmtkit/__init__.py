"""Finite-SNR diversity-multiplexing tradeoff of large MIMO channels.

Analytic outage/diversity formulas built on Gaussian large-system capacity
statistics, plus a seeded Monte-Carlo channel simulator that checks them.
"""

__version__ = "0.1.0"

from .asymptotics import CapacityStats, f_function, high_snr_stats, keyhole_stats, theorem1_stats
from .capacity import (  # noqa: F401
    EmpiricalStats,
    Snr,
    accumulate,
    capacity_batch,
    db_to_linear,
    empirical_outage,
    instantaneous_capacity,
    linear_to_db,
    rank1_capacity,
)
from .channels import (  # noqa: F401
    FadingFamily,
    IidChannelSpec,
    KeyholeChannelSpec,
    correlation_measure,
    exponential_correlation,
    sample_iid,
    sample_keyhole,
)
from .errors import BoundInvalidError, DmtError, DomainError, InvalidSpecError, NumericalDomainError
from .montecarlo import McEstimate, McPlan, common_random_sweep, run_plan, wilson_interval
from .outage import (  # noqa: F401
    MuxGainDef,
    approx_outage_iid,
    convergence_threshold,
    differential_diversity,
    diversity_ratio,
    dmt_asymptote,
    dprime_closed_form,
    fit_snr_offset,
    gaussian_outage,
    gaussian_outage_bound,
    keyhole_dmt,
    q_function,
    rate_from_mux,
)
