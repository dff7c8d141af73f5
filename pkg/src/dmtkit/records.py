"""Curve records and their CSV / JSON serialisations.

Every cell holds either a float or one of the explicit sentinels in
:data:`SENTINELS`; there are no empty cells.  Floats are written with
``repr`` so a CSV round-trip is exact.
"""

import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields
from typing import Iterable, List, Union

__all__ = [
    "SCHEMA_VERSION",
    "NA",
    "INVALID",
    "DOMAIN",
    "UNDEFINED",
    "SENTINELS",
    "CurveRecord",
    "COLUMNS",
    "records_to_csv",
    "records_from_csv",
    "records_to_json",
    "records_from_json",
    "write_atomic",
]

SCHEMA_VERSION = 1

NA = "na"                # not requested
INVALID = "invalid"      # exponential bound used with rate above mean
DOMAIN = "domain"        # SNR outside the rate definition's domain
UNDEFINED = "undefined"  # log-slope or ratio undefined (P_out of 0 or 1)
SENTINELS = (NA, INVALID, DOMAIN, UNDEFINED)

Cell = Union[float, str]


@dataclass(frozen=True)
class CurveRecord:
    gamma_db: float
    gamma_linear: float
    rate_nats: Cell = NA
    p_out_analytic: Cell = NA
    p_out_bound: Cell = NA
    p_ref_inv_snr: Cell = NA
    p_hat_mc: Cell = NA
    ci95_lo: Cell = NA
    ci95_hi: Cell = NA
    d_ratio: Cell = NA
    dprime_numeric: Cell = NA
    dprime_closed: Cell = NA
    method_tags: str = "none"

    def __post_init__(self):
        for f in fields(self):
            if f.name == "method_tags":
                continue
            v = getattr(self, f.name)
            if isinstance(v, str):
                if v not in SENTINELS:
                    raise ValueError(f"{f.name}: unknown sentinel {v!r}")
            else:
                v = float(v)
                if math.isnan(v):
                    raise ValueError(f"{f.name}: NaN is not allowed, use a sentinel")
                object.__setattr__(self, f.name, v)
        if not self.method_tags:
            object.__setattr__(self, "method_tags", "none")


COLUMNS = tuple(f.name for f in fields(CurveRecord))


def _fmt(v):
    return v if isinstance(v, str) else repr(float(v))


def _parse(name, text):
    if name == "method_tags":
        return text
    if text in SENTINELS:
        return text
    return float(text)


def records_to_csv(records: Iterable[CurveRecord], comments: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA_VERSION}\n")
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, c)) if c != "method_tags" else rec.method_tags for c in COLUMNS])
    return buf.getvalue()


def records_from_csv(text: str) -> List[CurveRecord]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    return [CurveRecord(**{c: _parse(c, v) for c, v in zip(header, row)}) for row in reader if row]


def records_to_json(records: Iterable[CurveRecord], meta: dict) -> str:
    doc = {
        "schema": SCHEMA_VERSION,
        "columns": list(COLUMNS),
        "meta": meta,
        "records": [asdict(r) for r in records],
    }
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def records_from_json(text: str) -> List[CurveRecord]:
    doc = json.loads(text)
    return [CurveRecord(**row) for row in doc["records"]]


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file + rename; ``-`` is stdout."""
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
