"""Sweep configuration: flat ``key = value`` text, profiles and a stable hash.

Recognised keys (blank lines and ``#`` comments are ignored)::

    energies_keV  comma-separated collision energies
    b_min, b_max  impact-parameter range (a.u.), n_b uniform points
    n_b           number of impact parameters (>= 10)
    method        qas | avqds | exact
    dt, l2_cut    AVQDS Euler step and McLachlan threshold
    rtol, atol    tolerances of the exact and QAS integrators
    z_span        length of the straight-line path (a.u.)
    n_steps       output time samples per trajectory
    coupling      bare | lowdin
    shots, seed   optional shot noise for QAS measurements
    workers       worker processes (never changes any output value)
    output_dir    where CSV and SVG files go
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace

import numpy as np

from .collision import COUPLINGS
from .errors import ConfigError

METHODS = ("qas", "avqds", "exact")

TABLE_ENERGIES = (1.00, 1.41, 1.92, 2.00, 2.41, 3.04, 3.82, 4.80, 6.05, 7.62,
                  9.60, 12.1, 15.2, 19.2, 24.1)
DESK_ENERGIES = (1.0, 2.0, 4.8, 9.6, 15.2, 24.1)
HEATMAP_ENERGIES = tuple(float(f"{e:.4g}") for e in np.geomspace(1.0, 25.0, 13))

# keys that control execution only; excluded from the provenance hash
_RUNTIME_KEYS = ("workers", "output_dir")


@dataclass(frozen=True)
class SweepConfig:
    energies_keV: tuple = TABLE_ENERGIES
    b_min: float = 0.02
    b_max: float = 10.0
    n_b: int = 500
    method: str = "qas"
    dt: float = 0.005
    l2_cut: float = 1e-8
    rtol: float = 1e-11
    atol: float = 1e-11
    z_span: float = 30.0
    n_steps: int = 2001
    coupling: str = "bare"
    shots: int | None = None
    seed: int | None = None
    workers: int = 1
    output_dir: str = "sweep_out"

    def __post_init__(self):
        e = tuple(float(x) for x in self.energies_keV)
        object.__setattr__(self, "energies_keV", e)
        if not e or any(x <= 0 for x in e):
            raise ConfigError("energies_keV must be a non-empty list of positive values")
        if len(set(e)) != len(e):
            raise ConfigError("energies_keV contains duplicates")
        if not 0 < self.b_min < self.b_max:
            raise ConfigError("need 0 < b_min < b_max")
        if self.n_b < 10:
            raise ConfigError("n_b must be >= 10")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.coupling not in COUPLINGS:
            raise ConfigError(f"coupling must be one of {COUPLINGS}")
        if self.dt <= 0 or self.l2_cut <= 0 or self.z_span <= 0:
            raise ConfigError("dt, l2_cut and z_span must be positive")
        if not (1e-13 <= self.rtol <= 1e-6 and 1e-13 <= self.atol <= 1e-6):
            raise ConfigError("rtol and atol must lie in [1e-13, 1e-6]")
        if self.n_steps < 2:
            raise ConfigError("n_steps must be >= 2")
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def b_grid(self):
        return np.linspace(self.b_min, self.b_max, self.n_b)

    def to_text(self, include_runtime=True):
        lines = []
        for f in fields(self):
            if not include_runtime and f.name in _RUNTIME_KEYS:
                continue
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def config_hash(self):
        """sha256 prefix of the canonical text, ignoring workers and output_dir."""
        return hashlib.sha256(self.to_text(include_runtime=False).encode()).hexdigest()[:16]

    def with_overrides(self, **kw):
        """Copy with the given keys replaced; ``None`` values are skipped."""
        return _replace(self, {k: v for k, v in kw.items() if v is not None})


PROFILES = {
    "desk": SweepConfig(energies_keV=DESK_ENERGIES, n_b=100, n_steps=1001),
    "full": SweepConfig(),
    "heatmap": SweepConfig(energies_keV=HEATMAP_ENERGIES, n_b=100, n_steps=1001),
}


def _replace(cfg, values):
    try:
        return replace(cfg, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _format_value(v):
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _field_types():
    return {f.name: f.type for f in fields(SweepConfig)}


def parse_value(key, text):
    """Convert one textual value to the type of ``key``."""
    types = _field_types()
    if key not in types:
        raise ConfigError(f"unknown key {key!r}")
    text = text.strip()
    kind = types[key]
    try:
        if key == "energies_keV":
            return tuple(float(x) for x in text.replace(",", " ").split())
        if "None" in kind and text.lower() == "none":
            return None
        if kind.startswith("int"):
            return int(text)
        if kind == "float":
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def parse_config(text, base=None):
    """Parse ``key = value`` lines on top of ``base`` (default: full profile)."""
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        values[key] = parse_value(key, val)
    return _replace(base or SweepConfig(), values)


def load_config(path, base=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), base)
