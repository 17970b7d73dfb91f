"""Single trajectories and parallel (E, b) sweeps with CSV/SVG output."""

from __future__ import annotations

import csv
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .avqds import evolve_avqds
from .collision import TrajectoryContext, build_frames
from .config import SweepConfig
from .errors import EmptyComparisonError, QuadratureResolutionError
from .exact import propagate_exact
from .observables import (
    CrossSectionPoint,
    SimulationRecord,
    asymptotic_probability,
    cross_section,
    fidelities,
    transfer_probabilities,
    write_cross_section_csv,
)
from .pauli import StateVector
from .qas import build_moment_basis, evolve_qas, measure_model
from .reference import compare_reference, experimental_datasets, load_reference, write_comparison_csv
from . import svg

# BK image of the electron in the target 1s spin-up orbital
INITIAL_STATE = "1011"
FAILURE_WARN_FRACTION = 0.10


def initial_state():
    return StateVector.from_bitstring(INITIAL_STATE)


def trajectory_context(cfg: SweepConfig, energy_keV, b):
    return TrajectoryContext(float(energy_keV), float(b), z_span=cfg.z_span,
                             n_steps=cfg.n_steps, coupling=cfg.coupling)


def trajectory_seed(cfg: SweepConfig, energy_keV, b):
    """Per-trajectory measurement seed derived from the config seed and (E, b)."""
    if cfg.seed is None:
        return None
    ss = np.random.SeedSequence([cfg.seed, int(round(energy_keV * 1e6)), int(round(b * 1e9))])
    return int(ss.generate_state(1)[0])


def run_trajectory(cfg: SweepConfig, energy_keV, b, method=None, oracle=False,
                   frames=None) -> SimulationRecord:
    """Build frames, run one propagator and fill the observables.

    ``oracle=True`` also propagates the exact state and stores F(t).
    Propagator failures come back as ``status="failed"`` records.
    """
    method = method or cfg.method
    traj = (float(energy_keV), float(b))
    ctx = trajectory_context(cfg, energy_keV, b)
    t = ctx.t_grid
    try:
        h = frames if frames is not None else build_frames(ctx)
        phi0 = initial_state()
        if method == "exact":
            res = propagate_exact(h, phi0, t, cfg.rtol, cfg.atol)
            rec = SimulationRecord(traj, "exact", t, transfer_probabilities(res.amplitudes),
                                   fl_bound=np.ones(t.size), l2_trace=np.zeros(t.size),
                                   amplitudes=res.amplitudes)
            if res.norm_drift > 1e-9:
                rec.warnings.append(f"exact norm drift {res.norm_drift:.3g}")
        elif method == "qas":
            basis = build_moment_basis(h, phi0)
            model = measure_model(basis, h, cfg.shots, trajectory_seed(cfg, energy_keV, b))
            rec = evolve_qas(model, h, t, cfg.rtol, cfg.atol, trajectory=traj)
        elif method == "avqds":
            rec, _ = evolve_avqds(h, phi0, t, cfg.dt, cfg.l2_cut, trajectory=traj)
        else:
            raise ValueError(f"unknown method {method!r}")
        if oracle and method != "exact":
            ref = propagate_exact(h, phi0, t, cfg.rtol, cfg.atol)
            rec.fidelity = fidelities(rec.amplitudes, ref.amplitudes)
        elif method == "exact":
            rec.fidelity = np.ones(t.size)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            asymptotic_probability(rec)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        nan = np.full(t.size, np.nan)
        rec = SimulationRecord(traj, method, t, nan, nan, nan, status="failed",
                               error=f"{type(exc).__name__}: {exc}")
    return rec


@dataclass(frozen=True)
class PointResult:
    """Compact per-(E, b) outcome shipped back from a worker."""

    energy_keV: float
    b: float
    method: str
    p_asymptotic: float
    bound_infidelity: float
    max_n_theta: int
    measurement_count: int
    status: str
    error: str = ""
    notes: tuple = ()


def _run_point(args):
    cfg, energy_keV, b = args
    rec = run_trajectory(cfg, energy_keV, b)
    return PointResult(float(energy_keV), float(b), rec.method, float(rec.p_asymptotic),
                       rec.final_bound_infidelity, rec.max_n_theta, rec.measurement_count,
                       rec.status, rec.error or "", tuple(rec.warnings))


@dataclass
class SweepResult:
    config: SweepConfig
    energies: np.ndarray
    b: np.ndarray
    points: list
    P: np.ndarray
    status: np.ndarray
    bound_infidelity: np.ndarray
    cross_sections: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def n_failed(self):
        return int(np.sum(self.status == "failed"))

    @property
    def n_patched(self):
        return int(np.sum(self.status == "patched"))


def patch_failures(P, status, b):
    """Replace failed entries by the nearest converged b at the same energy
    (ties go to the smaller b).  Returns copies."""
    P = P.copy()
    status = status.copy()
    for i in range(P.shape[0]):
        good = np.flatnonzero(status[i] == "converged")
        if good.size == 0:
            continue
        for j in np.flatnonzero(status[i] == "failed"):
            k = good[np.argmin(np.abs(b[good] - b[j]))]
            P[i, j] = P[i, k]
            status[i, j] = "patched"
    return P, status


def run_sweep(cfg: SweepConfig, progress=None) -> SweepResult:
    """Run every (E, b) task; results are merged in (E, b) order."""
    energies = np.array(cfg.energies_keV)
    b = cfg.b_grid
    tasks = [(cfg, float(e), float(bb)) for e in energies for bb in b]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            chunk = max(1, len(tasks) // (8 * cfg.workers))
            results = []
            for r in ex.map(_run_point, tasks, chunksize=chunk):
                results.append(r)
                if progress:
                    progress(len(results), len(tasks))
    else:
        results = []
        for task in tasks:
            results.append(_run_point(task))
            if progress:
                progress(len(results), len(tasks))
    shape = (energies.size, b.size)
    P = np.array([r.p_asymptotic for r in results]).reshape(shape)
    status = np.array([r.status for r in results], dtype=object).reshape(shape)
    bound = np.array([r.bound_infidelity for r in results]).reshape(shape)
    P, status = patch_failures(P, status, b)
    out = SweepResult(cfg, energies, b, results, P, status, bound)
    for i, e in enumerate(energies):
        n_bad = int(np.sum(status[i] != "converged"))
        if n_bad > FAILURE_WARN_FRACTION * b.size:
            out.warnings.append(f"E={e:g} keV: {n_bad}/{b.size} points failed (> 10%)")
        ok = np.isfinite(P[i])
        try:
            pt = cross_section(np.column_stack([b[ok], np.clip(P[i][ok], 0.0, 1.0)]),
                               energy_keV=e, method=cfg.method)
        except QuadratureResolutionError as exc:
            out.warnings.append(f"E={e:g} keV: no cross section ({exc})")
            continue
        out.cross_sections.append(pt)
    if out.n_failed:
        out.warnings.append(f"{out.n_failed} points failed and could not be patched")
    return out


def _provenance(cfg: SweepConfig):
    return {"seed": "none" if cfg.seed is None else str(cfg.seed),
            "config_hash": cfg.config_hash()}


def _g(x):
    return format(float(x), ".12e")


def ecdf(values):
    """Sorted finite values and their empirical cumulative fractions."""
    v = np.sort(np.asarray(values, dtype=float)[np.isfinite(values)])
    return v, np.arange(1, v.size + 1) / max(v.size, 1)


def write_outputs(res: SweepResult, out_dir=None):
    """Write every CSV/SVG product plus summary.txt; returns the written paths."""
    cfg = res.config
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    prov = _provenance(cfg)
    paths = {}

    def path(name):
        paths[name] = os.path.join(out_dir, name)
        return paths[name]

    write_cross_section_csv(res.cross_sections, path("sigma.csv"), prov)

    with open(path("pb.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "E_keV", "b", "P", "status", "max_N_theta", "measurements",
                    "seed", "config_hash"])
        k = 0
        for i, e in enumerate(res.energies):
            for j, bb in enumerate(res.b):
                r = res.points[k]
                k += 1
                w.writerow([cfg.method, _g(e), _g(bb), _g(res.P[i, j]), res.status[i, j],
                            r.max_n_theta, r.measurement_count, prov["seed"], prov["config_hash"]])

    with open(path("infidelity_grid.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "E_keV", "b", "bound_infidelity", "seed", "config_hash"])
        for i, e in enumerate(res.energies):
            for j, bb in enumerate(res.b):
                w.writerow([cfg.method, _g(e), _g(bb), _g(res.bound_infidelity[i, j]),
                            prov["seed"], prov["config_hash"]])

    vals, frac = ecdf(res.bound_infidelity.ravel())
    with open(path("ecdf.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "grid", "bound_infidelity", "ecdf", "seed", "config_hash"])
        for v, f in zip(vals, frac):
            w.writerow([cfg.method, "all", _g(v), _g(f), prov["seed"], prov["config_hash"]])

    cmp = None
    if res.cross_sections:
        try:
            cmp = compare_reference(res.cross_sections, experimental_datasets())
        except EmptyComparisonError:
            cmp = None
    if cmp is not None:
        write_comparison_csv(cmp, path("comparison.csv"), {"method": cfg.method, **prov})

    _plots(res, path)
    with open(path("summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary_text(res, cmp))
    return paths


def _plots(res, path):
    cfg = res.config
    if res.cross_sections:
        series = [(f"{cfg.method}", [p.energy_keV for p in res.cross_sections],
                   [p.sigma_cm2 for p in res.cross_sections])]
        for ref in load_reference():
            series.append((ref.label, ref.energies, ref.sigmas))
        svg.line_plot(series, path("sigma.svg"), title="Charge transfer cross section",
                      xlabel="E (keV)", ylabel="sigma (1e-16 cm^2)", logx=True)
    pb_series = [(f"{e:g} keV", res.b, res.P[i]) for i, e in enumerate(res.energies)]
    svg.line_plot(pb_series, path("pb.svg"), title="Transfer probability",
                  xlabel="b (a.u.)", ylabel="P")
    svg.heatmap(res.bound_infidelity.T, res.energies, res.b, path("heatmap.svg"),
                title=f"{cfg.method}: 1 - F_L", xlabel="E (keV)", ylabel="b (a.u.)",
                colorbar_label="log10(1-F_L)")
    vals, frac = ecdf(res.bound_infidelity.ravel())
    svg.line_plot([(cfg.method, vals, frac)], path("ecdf.svg"), title="ECDF of 1 - F_L",
                  xlabel="1 - F_L", ylabel="fraction", logx=True)


def summary_text(res: SweepResult, cmp=None):
    cfg = res.config
    lines = ["# sweep summary", cfg.to_text(include_runtime=False).rstrip(),
             f"config_hash = {cfg.config_hash()}",
             f"tasks = {res.status.size}",
             f"failed = {res.n_failed}",
             f"patched = {res.n_patched}"]
    bi = res.bound_infidelity[np.isfinite(res.bound_infidelity)]
    if bi.size:
        lines.append(f"max_bound_infidelity = {bi.max():.6e}")
    for p in res.cross_sections:
        lines.append(f"sigma({p.energy_keV:g} keV) = {p.sigma_cm2:.6f} e-16 cm^2")
    if cmp is not None:
        lines.append(f"mean_rel_error_pct = {cmp.mean_pct:.4f}")
        lines.append(f"max_rel_error_pct = {cmp.max_pct:.4f}")
    notes = sorted({(r.energy_keV, r.b, n) for r in res.points for n in r.notes})
    for e, bb, n in notes:
        lines.append(f"note E={e:g} b={bb:g}: {n}")
    for r in res.points:
        if r.status == "failed":
            lines.append(f"failure E={r.energy_keV:g} b={r.b:g}: {r.error}")
    for wmsg in res.warnings:
        lines.append(f"WARNING: {wmsg}")
    return "\n".join(lines) + "\n"


def read_sigma_csv(path):
    """CrossSectionPoints from a sigma.csv written by a sweep."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(CrossSectionPoint(float(row["E_keV"]), float(row["sigma_au"]),
                                         int(row["n_b_points"]), row.get("method", "")))
    return out
