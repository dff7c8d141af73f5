"""Curve sweeps, figure/example reproduction and threshold tables.

Everything here orchestrates the analytic and Monte-Carlo modules and
turns their output into :class:`~dmtkit.records.CurveRecord` rows.
"""

import json
import math
import os
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence


from . import __version__
from ._accel import backend_name
from .asymptotics import keyhole_stats, theorem1_stats
from .channels import IidChannelSpec, KeyholeChannelSpec
from .config import ScenarioConfig, output_dir
from .errors import BoundInvalidError, DomainError
from .montecarlo import McPlan, common_random_sweeps, run_plan, TRUST_COUNT
from .outage import (
    MuxGainDef,
    convergence_threshold,
    diversity_ratio,
    differential_diversity,
    dprime_closed_form,
    fit_snr_offset,
    gaussian_outage,
    gaussian_outage_bound,
    iid_log_outage_curve,
    keyhole_dmt,
    keyhole_log_outage_curve,
    log_gaussian_outage,
    rate_from_mux,
)
from .records import DOMAIN, INVALID, NA, UNDEFINED, CurveRecord, records_to_csv, records_to_json, write_atomic

__all__ = [
    "SweepResult",
    "QUOTED_THRESHOLDS_DB",
    "REPRODUCE_TARGETS",
    "run_sweep",
    "write_sweep",
    "threshold_rows",
    "format_threshold_table",
    "reproduce",
]

# Convergence SNRs (dB) quoted in the source text for specific (n, r).
QUOTED_THRESHOLDS_DB = {
    (10, 9): {MuxGainDef.MEAN_FRACTION: 14.0, MuxGainDef.LOG_SNR_OFFSET: 50.0, MuxGainDef.LOG_SNR: 120.0},
    (2, 1): {MuxGainDef.MEAN_FRACTION: 14.0, MuxGainDef.LOG_SNR_OFFSET: 22.0, MuxGainDef.LOG_SNR: 22.0},
}
ALL_DEFS = (MuxGainDef.LOG_SNR, MuxGainDef.LOG_SNR_OFFSET, MuxGainDef.MEAN_FRACTION)


@dataclass
class SweepResult:
    config: ScenarioConfig
    records: List[CurveRecord]
    thresholds: List[Dict]
    all_domain_errors: bool

    def meta(self) -> Dict:
        return {
            "tool": "dmtkit",
            "version": __version__,
            "backend": backend_name(),
            "seed": self.config.seed,
            "trials": self.config.trials,
            "config": self.config.echo(),
            "thresholds": self.thresholds,
            "mc_trust_floor": TRUST_COUNT / self.config.trials,
        }


def _analytic_stats(channel, gamma):
    if isinstance(channel, KeyholeChannelSpec):
        return keyhole_stats(gamma, channel)
    return theorem1_stats(gamma, channel.n, channel.beta)


def _min_dim(channel):
    return 1 if isinstance(channel, KeyholeChannelSpec) else min(channel.m, channel.n)


def _log_curve(channel, definition, r):
    if isinstance(channel, KeyholeChannelSpec):
        if definition is not MuxGainDef.MEAN_FRACTION:
            def curve(g):
                stats = keyhole_stats(g, channel)
                rate = rate_from_mux(definition, r, g)
                return float(log_gaussian_outage(stats, rate))
            return curve
        return keyhole_log_outage_curve(channel, r)
    return iid_log_outage_curve(channel.n, r, definition, beta=channel.beta)


def _closed_form(channel, definition, gamma, r):
    if isinstance(channel, KeyholeChannelSpec):
        if definition is not MuxGainDef.MEAN_FRACTION:
            return NA, None
        return keyhole_dmt(gamma, channel, r).dprime, "dprime-closed=keyhole"
    if channel.m != channel.n:
        return NA, None
    return dprime_closed_form(definition, gamma, channel.n, r), "dprime-closed=square-iid"


def _mc_estimates(config: ScenarioConfig, channel, gammas):
    plan = McPlan(channel, gammas, definition=config.mux, r=config.r, trials=config.trials,
                  seed=config.seed, shard_size=config.shard_size)
    if config.mc_mode == "crn":
        return common_random_sweeps([plan], workers=config.workers)[0]
    return run_plan(plan, workers=config.workers)


def run_sweep(config: ScenarioConfig, mc=None) -> SweepResult:
    """Evaluate every requested output on the config's SNR grid.

    ``mc`` may carry precomputed Monte-Carlo estimates (one per grid point),
    which lets several definitions share one common-random-number run.
    """
    channel = config.channel()
    definition = config.mux
    r = config.r
    want = set(config.outputs)
    grid_db = config.grid_db()
    gammas = [10.0 ** (d / 10.0) for d in grid_db]
    if mc is None and "mc" in want:
        mc = _mc_estimates(config, channel, gammas)
    curve = _log_curve(channel, definition, r) if "dprime_numeric" in want else None

    records = []
    domain_points = 0
    for i, (db, g) in enumerate(zip(grid_db, gammas)):
        tags = []
        row = {"gamma_db": float(db), "gamma_linear": g, "p_ref_inv_snr": 1.0 / g}
        stats = _analytic_stats(channel, g)
        try:
            rate = rate_from_mux(definition, r, g, stats, _min_dim(channel))
        except DomainError:
            rate = None
            domain_points += 1
        row["rate_nats"] = DOMAIN if rate is None else rate

        if "analytic" in want:
            if rate is None:
                row["p_out_analytic"] = DOMAIN
                row["d_ratio"] = DOMAIN
            else:
                p = float(gaussian_outage(stats, rate))
                row["p_out_analytic"] = p
                tags.append("analytic=gaussian-q")
                try:
                    row["d_ratio"] = diversity_ratio(p, g)
                except DomainError:
                    row["d_ratio"] = UNDEFINED
        if "bound" in want:
            if rate is None:
                row["p_out_bound"] = DOMAIN
            else:
                try:
                    row["p_out_bound"] = float(gaussian_outage_bound(stats, rate))
                    tags.append("bound=exp")
                except BoundInvalidError:
                    # Fall back to the exact Gaussian tail, tagged.
                    row["p_out_bound"] = INVALID
                    tags.append("bound-invalid:fallback=gaussian-q")
        if "dprime_numeric" in want:
            try:
                der = differential_diversity(curve, g, log_curve=True)
                row["dprime_numeric"] = der.value
                tags.append("dprime-numeric=central-diff")
                if not der.accurate:
                    tags.append("dprime-richardson-warning")
            except DomainError as exc:
                row["dprime_numeric"] = DOMAIN if exc.definition else UNDEFINED
        if "dprime_closed" in want:
            try:
                value, tag = _closed_form(channel, definition, g, r)
                row["dprime_closed"] = value
                if tag:
                    tags.append(tag)
            except DomainError:
                row["dprime_closed"] = DOMAIN
        if "mc" in want:
            est = mc[i]
            if est.skipped is not None:
                row.update(p_hat_mc=DOMAIN, ci95_lo=DOMAIN, ci95_hi=DOMAIN)
            else:
                row.update(p_hat_mc=est.p_hat, ci95_lo=est.ci95[0], ci95_hi=est.ci95[1])
                tags.append(f"mc={config.mc_mode}")
                if not est.trusted:
                    tags.append("mc-below-floor")
        records.append(CurveRecord(method_tags=";".join(tags), **row))

    thresholds = []
    if "thresholds" in want and isinstance(channel, IidChannelSpec) and channel.m == channel.n:
        try:
            thresholds = threshold_rows(channel.n, r, [definition])
        except DomainError:
            thresholds = []
    return SweepResult(config, records, thresholds, domain_points == len(gammas))


def _threshold_comments(rows):
    return [
        "threshold definition={definition} linear={linear!r} db={db:.4f} quoted_db={quoted}".format(
            **{**row, "quoted": "na" if row["quoted_db"] is None else row["quoted_db"]})
        for row in rows
    ]


def _resolve(path):
    if path == "-" or os.path.isabs(path):
        return path
    return os.path.join(output_dir(), path)


def write_sweep(result: SweepResult) -> List[str]:
    """Write CSV and/or JSON per the config; returns the paths written."""
    cfg = result.config
    path = _resolve(cfg.path)
    written = []
    csv_text = records_to_csv(result.records, _threshold_comments(result.thresholds))
    json_text = records_to_json(result.records, result.meta())
    if cfg.format == "csv":
        write_atomic(path, csv_text)
        written.append(path)
    elif cfg.format == "json":
        write_atomic(path, json_text)
        written.append(path)
    else:
        stem = os.path.splitext(path)[0]
        write_atomic(stem + ".csv", csv_text)
        write_atomic(stem + ".json", json_text)
        written += [stem + ".csv", stem + ".json"]
    return written


# --------------------------------------------------------------------------
# Threshold tables
# --------------------------------------------------------------------------
def threshold_rows(n: int, r: float, definitions: Optional[Sequence] = None) -> List[Dict]:
    defs = ALL_DEFS if not definitions else [MuxGainDef.parse(d) for d in definitions]
    stated = QUOTED_THRESHOLDS_DB.get((n, r), {})
    rows = []
    for d in defs:
        snr = convergence_threshold(d, n, r)
        quoted = stated.get(d)
        if quoted is None and d is MuxGainDef.MEAN_FRACTION:
            quoted = 14.0
        rows.append({
            "definition": d.value,
            "n": n,
            "r": r,
            "linear": snr.linear,
            "db": snr.db,
            "quoted_db": quoted,
            "quoted_minus_formula_db": None if quoted is None else quoted - snr.db,
        })
    return rows


def format_threshold_table(rows: List[Dict]) -> str:
    lines = [f"{'definition':<16} {'threshold (linear)':>20} {'formula dB':>11} {'quoted dB':>9} {'diff dB':>8}"]
    for row in rows:
        quoted = "-" if row["quoted_db"] is None else f"{row['quoted_db']:.1f}"
        diff = "-" if row["quoted_minus_formula_db"] is None else f"{row['quoted_minus_formula_db']:+.1f}"
        lines.append(f"{row['definition']:<16} {row['linear']:>20.6g} {row['db']:>11.2f} {quoted:>9} {diff:>8}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# Reproduction targets
# --------------------------------------------------------------------------
REPRODUCE_TARGETS = {
    "fig1": dict(n=10, r=9, start_db=0.0, stop_db=40.0, step_db=1.0, kind="outage", trials=10_000_000),
    "fig2": dict(n=2, r=1, start_db=0.0, stop_db=30.0, step_db=1.0, kind="outage", trials=1_000_000),
    "fig3": dict(n=10, r=9, start_db=0.0, stop_db=120.0, step_db=1.0, kind="dprime"),
    "fig4": dict(n=2, r=1, start_db=0.0, stop_db=60.0, step_db=1.0, kind="dprime"),
    "ex1": dict(n=10, r=9, kind="thresholds"),
    "ex2": dict(n=2, r=1, kind="thresholds"),
}


def _fmt_p(v):
    return v if isinstance(v, str) else f"{v:.3e}"


def _outage_target(name, spec, trials, seed, workers, out_dir):
    n, r = spec["n"], spec["r"]
    trials = spec["trials"] if trials is None else trials
    base = ScenarioConfig(
        kind="iid", m=n, n=n, start_db=spec["start_db"], stop_db=spec["stop_db"], step_db=spec["step_db"],
        r=r, outputs=("analytic", "bound", "mc"), trials=trials, seed=seed, workers=workers,
    )
    channel = base.channel()
    gammas = [10.0 ** (d / 10.0) for d in base.grid_db()]
    plans = [McPlan(channel, gammas, definition=d, r=r, trials=trials, seed=seed, shard_size=base.shard_size)
             for d in ALL_DEFS]
    mc_rows = common_random_sweeps(plans, workers=workers)

    files, summary, docs = [], [], {}
    floor = TRUST_COUNT / trials
    summary.append(f"{name}: n = m = {n}, r = {r}, {trials} Monte-Carlo trials (common random numbers), "
                   f"seed {seed}; MC trusted where p_hat >= {floor:.1e}")
    for d, mc in zip(ALL_DEFS, mc_rows):
        cfg = replace(base, definition=d.value, path=os.path.join(out_dir, f"{name}_{d.value}.csv"))
        res = run_sweep(cfg, mc=mc)
        text = records_to_csv(res.records, [f"target={name} definition={d.value}"])
        write_atomic(cfg.path, text)
        files.append(cfg.path)
        docs[d.value] = res

        dev = []
        for rec in res.records:
            if isinstance(rec.p_hat_mc, float) and isinstance(rec.p_out_analytic, float) and rec.p_hat_mc >= 1e-4:
                dev.append(abs(math.log10(rec.p_hat_mc) - math.log10(rec.p_out_analytic)))
        tail = [(rec.gamma_linear, rec.p_out_analytic) for rec in res.records[-11:]
                if isinstance(rec.p_out_analytic, float) and 0 < rec.p_out_analytic < 1]
        offset = fit_snr_offset(*zip(*tail), d=float((n - r) ** 2)) if len(tail) >= 2 else None
        last = res.records[-1]
        summary.append(
            f"  {d.value:<15} P_out({last.gamma_db:.0f} dB) analytic={_fmt_p(last.p_out_analytic)} "
            f"mc={_fmt_p(last.p_hat_mc)}; max |log10 MC - log10 analytic| (p_hat >= 1e-4) = "
            f"{max(dev) if dev else float('nan'):.3f}; offset c over top 10 dB = "
            f"{'n/a' if offset is None else f'{offset.c:.3g}'}"
        )
    json_path = os.path.join(out_dir, f"{name}.json")
    doc = {
        "target": name,
        "meta": {"tool": "dmtkit", "version": __version__, "backend": backend_name(), "seed": seed,
                 "trials": trials, "config": base.echo()},
        "curves": {k: [rec.__dict__ for rec in v.records] for k, v in docs.items()},
        "summary": summary,
    }
    write_atomic(json_path, json.dumps(doc, indent=2, allow_nan=False) + "\n")
    files.append(json_path)
    return files, summary


def _dprime_target(name, spec, out_dir):
    n, r = spec["n"], spec["r"]
    files, summary = [], []
    summary.append(f"{name}: differential diversity, n = m = {n}, r = {r}; asymptote (n - r)^2 = {(n - r) ** 2}")
    for d in ALL_DEFS:
        cfg = ScenarioConfig(
            kind="iid", m=n, n=n, start_db=spec["start_db"], stop_db=spec["stop_db"], step_db=spec["step_db"],
            definition=d.value, r=r, outputs=("analytic", "dprime_numeric", "dprime_closed"),
            path=os.path.join(out_dir, f"{name}_{d.value}.csv"),
        )
        res = run_sweep(cfg)
        write_atomic(cfg.path, records_to_csv(res.records, [f"target={name} definition={d.value}"]))
        files.append(cfg.path)
        last = res.records[-1]
        summary.append(f"  {d.value:<15} at {last.gamma_db:.0f} dB: numeric d' = {_fmt_p(last.dprime_numeric)}, "
                       f"closed form = {_fmt_p(last.dprime_closed)}")
    return files, summary


def _threshold_target(name, spec, out_dir):
    rows = threshold_rows(spec["n"], spec["r"])
    path = os.path.join(out_dir, f"{name}.csv")
    lines = ["definition,n,r,threshold_linear,threshold_db,quoted_db"]
    for row in rows:
        quoted = "na" if row["quoted_db"] is None else repr(row["quoted_db"])
        lines.append(f"{row['definition']},{row['n']},{row['r']},{row['linear']!r},{row['db']!r},{quoted}")
    write_atomic(path, "\n".join(lines) + "\n")
    summary = [f"{name}: convergence thresholds for n = {spec['n']}, r = {spec['r']} (10% accuracy convention)",
               format_threshold_table(rows)]
    for row in rows:
        if row["quoted_db"] is not None and abs(row["quoted_minus_formula_db"]) > 1.0:
            summary.append(f"  note: {row['definition']} formula gives {row['db']:.1f} dB, "
                           f"the quoted value is {row['quoted_db']:.0f} dB")
    return [path], summary


def reproduce(target: str, *, trials: Optional[int] = None, seed: int = 2008, workers: int = 1,
              out_dir: Optional[str] = None):
    """Regenerate one figure or example; returns ``(files, summary_lines)``."""
    if target not in REPRODUCE_TARGETS:
        raise KeyError(f"unknown target {target!r}; choose from {sorted(REPRODUCE_TARGETS)}")
    spec = REPRODUCE_TARGETS[target]
    out_dir = output_dir() if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    if spec["kind"] == "outage":
        return _outage_target(target, spec, trials, seed, workers, out_dir)
    if spec["kind"] == "dprime":
        return _dprime_target(target, spec, out_dir)
    return _threshold_target(target, spec, out_dir)
