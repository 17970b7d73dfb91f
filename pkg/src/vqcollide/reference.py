"""Reference cross-section datasets and relative-error comparison."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ContractError, EmptyComparisonError

EXPERIMENT_LABELS = ("exp1", "exp2")


@dataclass(frozen=True)
class ReferenceDataset:
    """Points are (E_keV, sigma in 1e-16 cm^2, uncertainty in percent)."""

    label: str
    points: tuple
    source: str = ""

    def __post_init__(self):
        e = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(e, e[1:])):
            raise ContractError(f"dataset {self.label}: energies must be ascending")

    @property
    def energies(self):
        return np.array([p[0] for p in self.points], dtype=float)

    @property
    def sigmas(self):
        return np.array([p[1] for p in self.points], dtype=float)


_HEADER = re.compile(r"#\s*dataset\s+(\S+):\s*(.*?);\s*uncertainty\s+([\d.]+)\s*%")


def parse_reference(text):
    """Datasets from the column format of the bundled reference file."""
    meta = {}
    rows = []
    columns = None
    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        m = _HEADER.match(s)
        if m:
            meta[m.group(1)] = (m.group(2).strip(), float(m.group(3)))
            continue
        if s.startswith("# E_keV"):
            columns = s[1:].split()[1:]
            continue
        if s.startswith("#"):
            continue
        rows.append(s.split())
    if columns is None:
        raise ContractError("reference file lacks a '# E_keV ...' column header")
    out = []
    for j, label in enumerate(columns, 1):
        source, unc = meta.get(label, ("", 0.0))
        pts = tuple((float(r[0]), float(r[j]), unc) for r in rows if r[j] != "-")
        out.append(ReferenceDataset(label, pts, source))
    return out


def load_reference(path=None):
    if path is None:
        text = resources.files("vqcollide").joinpath("data/reference_sigma.txt").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_reference(text)


def experimental_datasets(path=None):
    return [d for d in load_reference(path) if d.label in EXPERIMENT_LABELS]


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    energy_keV: float
    sigma_ref: float
    sigma_calc: float
    rel_error_pct: float


@dataclass(frozen=True)
class Comparison:
    rows: tuple

    @property
    def mean_pct(self):
        return float(np.mean([r.rel_error_pct for r in self.rows]))

    @property
    def max_pct(self):
        return float(np.max([r.rel_error_pct for r in self.rows]))

    @property
    def worst(self):
        return max(self.rows, key=lambda r: r.rel_error_pct)


def interpolate_sigma(energies, sigmas, targets):
    """Piecewise-linear interpolation of ln sigma in ln E."""
    e = np.asarray(energies, dtype=float)
    s = np.asarray(sigmas, dtype=float)
    order = np.argsort(e)
    e, s = e[order], s[order]
    if np.any(s <= 0):
        raise ContractError("log interpolation needs positive cross sections")
    targets = np.asarray(targets, dtype=float)
    out = np.exp(np.interp(np.log(targets), np.log(e), np.log(s)))
    # tabulated energies return the tabulated value without log round-off
    idx = np.clip(np.searchsorted(e, targets), 0, e.size - 1)
    hit = e[idx] == targets
    out[hit] = s[idx[hit]]
    return out


def compare_reference(points, refs, rtol_range=1e-9) -> Comparison:
    """Relative error |sigma_calc - sigma_ref| / sigma_ref at every reference
    energy inside the computed range.

    ``points`` are ``CrossSectionPoint``s or (E_keV, sigma_1e-16_cm2) pairs.
    """
    pairs = [(p.energy_keV, p.sigma_cm2) if hasattr(p, "sigma_cm2") else tuple(p)
             for p in points]
    if not pairs:
        raise EmptyComparisonError("no computed cross sections")
    e = np.array([p[0] for p in pairs], dtype=float)
    s = np.array([p[1] for p in pairs], dtype=float)
    lo, hi = e.min() * (1 - rtol_range), e.max() * (1 + rtol_range)
    rows = []
    for ref in refs:
        for E, sref, _ in ref.points:
            if not lo <= E <= hi:
                continue
            calc = float(interpolate_sigma(e, s, [E])[0])
            rows.append(ComparisonRow(ref.label, E, sref, calc, 100.0 * abs(calc - sref) / sref))
    if not rows:
        raise EmptyComparisonError(
            f"no reference energy inside the computed range [{e.min()}, {e.max()}] keV")
    rows.sort(key=lambda r: (r.energy_keV, r.label))
    return Comparison(tuple(rows))


def write_comparison_csv(cmp: Comparison, path, provenance=None):
    extra = list(provenance or {})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "E_keV", "sigma_ref_1e-16_cm2", "sigma_calc_1e-16_cm2",
                    "rel_error_pct"] + extra)
        for r in cmp.rows:
            w.writerow([r.label, f"{r.energy_keV:.6g}", f"{r.sigma_ref:.6g}",
                        f"{r.sigma_calc:.12e}", f"{r.rel_error_pct:.6f}"]
                       + [provenance[k] for k in extra])
        w.writerow(["mean", "", "", "", f"{cmp.mean_pct:.6f}"] + [provenance[k] for k in extra])
        w.writerow(["max", "", "", "", f"{cmp.max_pct:.6f}"] + [provenance[k] for k in extra])
