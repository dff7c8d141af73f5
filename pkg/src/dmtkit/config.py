"""Scenario configuration: INI file sections, overridable key by key.

Example file::

    [channel]
    kind = iid            ; or keyhole
    m = 2
    n = 2
    family = complex-gaussian
    rho_t = 0.0           ; keyhole only: exponential correlation
    rho_r = 0.0

    [sweep]
    start_db = 0
    stop_db = 30
    step_db = 1

    [rate]
    definition = mean_fraction
    r = 1

    [run]
    outputs = analytic, bound, dprime_numeric, dprime_closed, mc, thresholds
    trials = 100000
    seed = 1
    workers = 1
    shard_size = 32768
    mc_mode = crn         ; or independent

    [output]
    path = -
    format = csv          ; csv, json or both
"""

import configparser
import os
from dataclasses import asdict, dataclass, fields
from typing import Dict, Optional, Tuple

import numpy as np

from .channels import FadingFamily, IidChannelSpec, KeyholeChannelSpec, exponential_correlation
from .errors import InvalidSpecError
from .montecarlo import DEFAULT_SHARD_SIZE
from .outage import MuxGainDef

__all__ = ["ConfigError", "ScenarioConfig", "OUTPUT_KINDS", "SECTIONS", "load_config", "output_dir"]

OUTPUT_KINDS = ("analytic", "bound", "dprime_numeric", "dprime_closed", "mc", "thresholds")
OUTPUT_DIR_ENV = "DMTKIT_OUTPUT_DIR"

# key -> section, in the order they appear in a config file
SECTIONS = {
    "kind": "channel", "m": "channel", "n": "channel", "family": "channel",
    "rho_t": "channel", "rho_r": "channel",
    "start_db": "sweep", "stop_db": "sweep", "step_db": "sweep",
    "definition": "rate", "r": "rate",
    "outputs": "run", "trials": "run", "seed": "run", "workers": "run",
    "shard_size": "run", "mc_mode": "run",
    "path": "output", "format": "output",
}


class ConfigError(ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "iid"
    m: int = 2
    n: int = 2
    family: str = FadingFamily.COMPLEX_GAUSSIAN.value
    rho_t: float = 0.0
    rho_r: float = 0.0
    start_db: float = 0.0
    stop_db: float = 30.0
    step_db: float = 1.0
    definition: str = MuxGainDef.MEAN_FRACTION.value
    r: float = 1.0
    outputs: Tuple[str, ...] = ("analytic",)
    trials: int = 100_000
    seed: int = 1
    workers: int = 1
    shard_size: int = DEFAULT_SHARD_SIZE
    mc_mode: str = "crn"
    path: str = "-"
    format: str = "csv"

    def __post_init__(self):
        self._validate()

    def _validate(self):
        if self.kind not in ("iid", "keyhole"):
            raise ConfigError("kind", f"expected 'iid' or 'keyhole', got {self.kind!r}")
        for name in ("m", "n"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be a positive integer")
        try:
            FadingFamily(self.family)
        except ValueError:
            raise ConfigError("family", f"unknown fading family {self.family!r}") from None
        for name in ("rho_t", "rho_r"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(name, "must lie in [0, 1)")
        if self.step_db <= 0:
            raise ConfigError("step_db", "must be > 0")
        if self.stop_db < self.start_db:
            raise ConfigError("stop_db", "must be >= start_db")
        try:
            MuxGainDef.parse(self.definition)
        except ValueError as exc:
            raise ConfigError("definition", str(exc)) from None
        if self.r < 0:
            raise ConfigError("r", "must be nonnegative")
        if not self.outputs:
            raise ConfigError("outputs", "at least one output is required")
        bad = [o for o in self.outputs if o not in OUTPUT_KINDS]
        if bad:
            raise ConfigError("outputs", f"unknown output(s) {bad}; choose from {list(OUTPUT_KINDS)}")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        if self.shard_size < 1:
            raise ConfigError("shard_size", "must be >= 1")
        if self.mc_mode not in ("crn", "independent"):
            raise ConfigError("mc_mode", "expected 'crn' or 'independent'")
        if self.format not in ("csv", "json", "both"):
            raise ConfigError("format", "expected 'csv', 'json' or 'both'")
        if self.format == "both" and self.path == "-":
            raise ConfigError("format", "'both' needs a file path, not standard output")

    @property
    def mux(self) -> MuxGainDef:
        return MuxGainDef.parse(self.definition)

    def grid_db(self) -> np.ndarray:
        count = int(np.floor((self.stop_db - self.start_db) / self.step_db + 1e-9)) + 1
        return self.start_db + self.step_db * np.arange(count)

    def channel(self):
        try:
            if self.kind == "iid":
                return IidChannelSpec(self.m, self.n, FadingFamily(self.family))
            return KeyholeChannelSpec(
                self.m, self.n,
                exponential_correlation(self.m, self.rho_t),
                exponential_correlation(self.n, self.rho_r),
            )
        except InvalidSpecError as exc:
            raise ConfigError("channel", str(exc)) from None

    def echo(self) -> Dict:
        out = asdict(self)
        out["outputs"] = list(self.outputs)
        return out


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _coerce(name, raw):
    if raw is None:
        return None
    kind = _FIELD_TYPES[name]
    try:
        if name == "outputs":
            if isinstance(raw, (list, tuple)):
                return tuple(raw)
            return tuple(p.strip() for p in str(raw).replace(";", ",").split(",") if p.strip())
        if kind in (int, "int"):
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind in (float, "float"):
            return float(raw)
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot parse {raw!r}") from None


def load_config(path: Optional[str] = None, overrides: Optional[Dict] = None) -> ScenarioConfig:
    """Build a config from an optional INI file, then apply non-None overrides."""
    values = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise ConfigError("config", f"malformed file: {exc}") from None
        for section in parser.sections():
            for key, raw in parser.items(section):
                if key not in SECTIONS:
                    raise ConfigError(f"{section}.{key}", "unknown key")
                if SECTIONS[key] != section:
                    raise ConfigError(f"{section}.{key}", f"belongs in section [{SECTIONS[key]}]")
                values[key] = _coerce(key, raw)
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in SECTIONS:
            raise ConfigError(key, "unknown key")
        values[key] = _coerce(key, raw)
    return ScenarioConfig(**values)


def output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, ".")
