"""Scenario configs and the batch pipeline behind the command line.

Configs are YAML mappings (JSON is accepted too, being a YAML subset)::

    field: {kind: RigidHelixFlow, omega: 2, W: 1}
    seeds: [[0.5, 0.0, 0.0]]            # or {r_count: 5, r_max: 0.8, z_start: 0, theta0: 0}
    spans: {t_span: [0, 3], z_span: [0, 2]}
    thresholds: {residual_tol: 1.0e-5}
    tolerances: {ode_tol: 1.0e-10, quad_tol: 1.0e-10, fd_step: 1.0e-4}
    inflow: {U_s: 1, U_o: 0.5, g: {kind: sinusoid, N: 4}}
    outputs: {directory: out, format: csv}
    mode: diagnose
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .diagnostics import (DISTURBANCE_COLUMNS, RESIDUAL_COLUMNS, ThresholdConfig, blowup_indicator,
                          disturbance_rates, frame_residuals, momentum_flux_ratio,
                          near_axis_breakdown_indicator)
from .errors import (AxiflowError, ConfigError, NotUnilateral, NumericalFailure,
                     OutsideTubeRange, ValidationFailure)
from .field_core import Affine, StraightTube, make_fixture, waveform_from_config
from .frenet import FRENET_COLUMNS, frame_explicit, frame_numeric
from .io import dumps, write_csv, write_jsonl
from .lagrange import (DEFAULT_ODE_TOL, TRAJECTORY_COLUMNS, ArcCurve, axis_length_reparam,
                       integrate_trajectory)
from .reconstruct import STREAMTUBE_COLUMNS, build_streamtube_map, clustered_nodes

log = logging.getLogger("axiflow")

MODES = ("diagnose", "validate")
FORMATS = ("csv", "jsonl")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3


@dataclass
class ScenarioConfig:
    field: dict
    seeds: list
    t_span: tuple
    z_span: Optional[tuple] = None
    thresholds: ThresholdConfig = dc_field(default_factory=ThresholdConfig)
    ode_tol: float = DEFAULT_ODE_TOL
    quad_tol: float = 1e-10
    fd_step: Optional[float] = None
    inflow: Optional[dict] = None
    out_dir: str = "out"
    format: str = "csv"
    mode: str = "diagnose"
    samples: int = 101
    frenet_points: int = 21
    residual_points: int = 10
    map_r0_max: Optional[float] = None
    map_nodes: int = 21
    base_dir: Optional[str] = None
    raw: dict = dc_field(default_factory=dict, repr=False)

    def build_field(self):
        spec = dict(self.field)
        if self.inflow:
            if spec.get("kind") != "StraightTube":
                raise ConfigError("inflow is only supported for StraightTube fields", key="inflow")
            g = waveform_from_config(self.inflow.get("g", "const"))
            U_s = _positive_or_zero(self.inflow.get("U_s", 0.0), "inflow.U_s")
            U_o = float(self.inflow.get("U_o", 1.0))
            spec.pop("g", None)
            return StraightTube(g=Affine(g, U_s, U_o), **spec_without_kind(spec))
        return make_fixture(spec, self.base_dir)

    @property
    def hash(self):
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True, default=str).encode()).hexdigest()


def spec_without_kind(spec):
    return {k: v for k, v in spec.items() if k != "kind"}


def _positive_or_zero(v, key):
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {v!r}", key=key) from None
    return v


def _tol(d, key, default):
    v = d.get(key, default)
    if v is None:
        return None
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"tolerance {key} must be a number", key=key) from None
    if not v > 0:
        raise ConfigError(f"tolerance {key} must be positive, got {v}", key=key)
    return v


def _span(v, key):
    if v is None:
        return None
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(f"{key} must be a pair [start, end]", key=key)
    a, b = float(v[0]), float(v[1])
    if not b > a:
        raise ConfigError(f"{key} must be increasing", key=key)
    return (a, b)


def expand_seeds(seeds, lattice=None):
    """Seeds from an explicit list or a lattice mapping {r_count, r_max, z_start, theta0}."""
    if isinstance(seeds, dict):
        n = int(seeds.get("r_count", 5))
        r_max = float(seeds.get("r_max", 1.0))
        z0 = float(seeds.get("z_start", 0.0))
        th = float(seeds.get("theta0", 0.0))
        z_count = int(seeds.get("z_count", 1))
        z_step = float(seeds.get("z_step", 0.0))
        if lattice:
            n, z_count = lattice
        rs = [r_max * (k + 1) / n for k in range(n)]
        return [(r, th, z0 + j * z_step) for j in range(z_count) for r in rs]
    out = []
    for s in seeds:
        if len(s) != 3:
            raise ConfigError(f"seed {s!r} must be (r0, theta0, z0)", key="seeds")
        out.append(tuple(float(x) for x in s))
    return out


def parse_config(data: dict, base_dir=None, overrides=None) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    overrides = overrides or {}
    if "field" not in data:
        raise ConfigError("config needs a 'field' entry", key="field")
    fld = data["field"]
    if isinstance(fld, str):
        fld = {"kind": "Gridded", "path": fld}
    spans = data.get("spans", {})
    t_span = _span(spans.get("t_span", data.get("t_span")), "t_span")
    if t_span is None:
        raise ConfigError("spans.t_span is required", key="t_span")
    z_span = _span(spans.get("z_span", data.get("z_span")), "z_span")
    tol = data.get("tolerances", {}) or {}
    try:
        thresholds = ThresholdConfig(**(data.get("thresholds") or {}))
    except TypeError as exc:
        raise ConfigError(f"bad thresholds: {exc}", key="thresholds") from None
    outputs = data.get("outputs", {}) or {}
    mode = overrides.get("mode") or data.get("mode", "diagnose")
    fmt = overrides.get("format") or outputs.get("format", "csv")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}", key="mode")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}", key="format")
    seeds = expand_seeds(data.get("seeds", [[0.5, 0.0, t_span and 0.0]]), overrides.get("lattice"))
    if not seeds:
        raise ConfigError("no seeds", key="seeds")
    ode_tol = overrides.get("ode_tol") or _tol(tol, "ode_tol", DEFAULT_ODE_TOL)
    mp = data.get("map", {}) or {}
    cfg = ScenarioConfig(
        field=dict(fld), seeds=seeds, t_span=t_span, z_span=z_span, thresholds=thresholds,
        ode_tol=float(ode_tol), quad_tol=_tol(tol, "quad_tol", 1e-10),
        fd_step=_tol(tol, "fd_step", None), inflow=data.get("inflow"),
        out_dir=overrides.get("out_dir") or outputs.get("directory", "out"), format=fmt, mode=mode,
        samples=int(data.get("samples", 101)), map_r0_max=mp.get("r0_max"),
        map_nodes=int(mp.get("nodes", 21)), base_dir=base_dir, raw=data)
    if cfg.inflow and "g" in cfg.inflow:
        g = cfg.inflow["g"]
        if isinstance(g, dict) and g.get("kind") in ("spike-train", "spike_train"):
            ts = list(g.get("times", []))
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ConfigError("spike-train times must be strictly increasing", key="inflow.g")
    return cfg


def load_config(path, overrides=None) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return parse_config(data, os.path.dirname(os.path.abspath(path)), overrides)


# ---------------------------------------------------------------------------
# pipeline

@dataclass
class SeedResult:
    seed: tuple
    trajectory: object
    arc: Optional[ArcCurve] = None
    frenet: list = dc_field(default_factory=list)
    residuals: list = dc_field(default_factory=list)
    error: Optional[dict] = None

    def summary(self):
        out = {"seed": list(self.seed), "status": self.trajectory.status,
               "t_end": self.trajectory.t_end}
        if self.arc is not None:
            out["arc_length"] = self.arc.length
        if self.residuals:
            out["max_abs_res_r"] = max(abs(r.res_r) for r in self.residuals)
            out["max_abs_res_b"] = max(abs(r.res_b) for r in self.residuals)
            out["max_abs_corrected"] = max(max(abs(r.corrected_r), abs(r.corrected_b))
                                           for r in self.residuals)
        if self.error:
            out["error"] = self.error
        return out


def process_seed(field, seed, cfg: ScenarioConfig) -> SeedResult:
    traj = integrate_trajectory(field, *seed, cfg.t_span, cfg.ode_tol, n_samples=cfg.samples)
    res = SeedResult(seed=seed, trajectory=traj)
    curve = axis_length_reparam(traj, field)
    arc = ArcCurve(curve, cfg.quad_tol)
    res.arc = arc
    L = arc.length
    for s in np.linspace(0.0, L, cfg.frenet_points):
        z = arc.z_of(float(s))
        res.frenet.append(frame_explicit(curve, z).row(float(s), z))
    for s in np.linspace(0.05 * L, 0.95 * L, cfg.residual_points):
        z = arc.z_of(float(s))
        R, th, t = curve.state(z)
        x = np.array([R * math.cos(th), R * math.sin(th), z])
        res.residuals.append(frame_residuals(field, (x, t), frame_explicit(curve, z),
                                             fd_step=cfg.fd_step, s=float(s)))
    return res


def _map_and_rates(field, cfg, seeds):
    if cfg.z_span is None:
        return None, [], []
    r_max = cfg.map_r0_max
    if r_max is None:
        r_max = 0.9 * field.domain.r_max if field.domain.r_max else field.length_scale
    t0 = cfg.t_span[0]
    if field.steady:
        t_nodes = [t0]
    else:
        dt = 0.05 * field.time_scale
        t_nodes = [t0 + k * dt for k in range(5)]
    tube = build_streamtube_map(field, clustered_nodes(r_max, cfg.map_nodes), cfg.z_span, t_nodes,
                                ode_tol=min(cfg.ode_tol, 1e-12))
    t_eval = t_nodes[len(t_nodes) // 2]
    zs = np.linspace(cfg.z_span[0], cfg.z_span[1], 5)
    a_values = sorted({min(s[0], r_max) for s in seeds} | {0.0})
    rates = [disturbance_rates(tube, a, float(z), t_eval) for z in zs for a in a_values]
    rows = tube.rows(zs, [t_eval], np.linspace(0.0, r_max, 6))
    return tube, rates, rows


def _indicators(field, cfg):
    out = []
    z_lo = cfg.z_span[0] if cfg.z_span else field.domain.z_min
    z_hi = cfg.z_span[1] if cfg.z_span else field.domain.z_max
    if not (math.isfinite(z_lo) and math.isfinite(z_hi)):
        z_lo, z_hi = 0.0, field.length_scale
    t = cfg.t_span[0]
    for z in np.linspace(z_lo, z_hi, 3):
        z = float(z)
        rec = {"indicator": "near_axis_breakdown"}
        try:
            rec.update(near_axis_breakdown_indicator(field, z, t))
        except NumericalFailure as exc:
            rec.update({"z": z, "t": t, "error": exc.as_dict()})
        out.append(rec)
        if field.max_order >= 3:
            rec = {"indicator": "blowup"}
            try:
                rec.update(blowup_indicator(field, z, t))
            except NumericalFailure as exc:
                rec.update({"z": z, "t": t, "error": exc.as_dict()})
            out.append(rec)
    return out


def _validate(field, cfg, results, rates):
    """Invariant suites; each entry is (name, passed, detail)."""
    verdicts = []
    tol = cfg.thresholds.residual_tol
    recs = [r for res in results for r in res.residuals]
    if field.euler and recs:
        if field.steady:
            worst = max(max(abs(r.res_r), abs(r.res_b)) / r.scale for r in recs)
            verdicts.append(("frame_identities", worst <= tol, {"max_scaled_residual": worst}))
        else:
            worst = max(max(abs(r.corrected_r), abs(r.corrected_b)) / r.scale for r in recs)
            raw = max(max(abs(r.res_r), abs(r.res_b)) / r.scale for r in recs)
            verdicts.append(("frame_identities_time_corrected", worst <= tol,
                             {"max_scaled_residual": worst, "max_scaled_raw_residual": raw}))
    for res in results:
        tr, arc = res.trajectory, res.arc
        if arc is None:
            continue
        curve = arc.curve
        err = 0.0
        for t in 0.5 * (tr.t[1:-1:10] + tr.t[2::10]):
            r, th, z = tr.at(t)
            R, TH, _ = curve.state(z)
            err = max(err, abs(R - r), abs(TH - th))
        verdicts.append((f"reparam_consistency[{res.seed}]", err <= 10 * cfg.ode_tol,
                         {"max_error": err}))
        L = arc.length
        if L > 1e-3:
            s = 0.5 * L
            fe = frame_explicit(curve, arc.z_of(s))
            if not fe.degenerate and fe.kappa > 1e-6:
                fn = frame_numeric(arc, s, min(1e-3, L / 10))
                rel = abs(fn.kappa - fe.kappa) / fe.kappa
                verdicts.append((f"frenet_routes_agree[{res.seed}]", rel <= 1e-5, {"rel_kappa": rel}))
    if rates:
        verdicts.append(("L0_at_least_2", all(r.L0 >= 2 - 1e-9 for r in rates),
                         {"min_L0": min(r.L0 for r in rates)}))
        if field.steady:
            verdicts.append(("Lt_zero_for_steady", all(r.Lt <= 1e-9 for r in rates),
                             {"max_Lt": max(r.Lt for r in rates)}))
    return [{"suite": n, "passed": bool(p), **d} for n, p, d in verdicts]


def run(cfg: ScenarioConfig, threads=1) -> dict:
    """Execute a scenario; returns the report.  Raises AxiflowError subclasses."""
    start = time.perf_counter()
    field = cfg.build_field()
    for s in cfg.seeds:
        if not field.domain.contains(s[0], s[2], cfg.t_span[0]) or s[0] < 0:
            raise ConfigError(f"seed {s} outside the field domain", key="seeds")
    os.makedirs(cfg.out_dir, exist_ok=True)
    log.info("running %s on %d seeds", field.kind, len(cfg.seeds))

    def task(seed):
        return process_seed(field, seed, cfg)

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(task, cfg.seeds))
    else:
        results = [task(s) for s in cfg.seeds]

    tube, rates, tube_rows = _map_and_rates(field, cfg, cfg.seeds)
    indicators = _indicators(field, cfg)

    traj_rows = [row for res in results for row in res.trajectory.rows()]
    frenet_rows = [{**row, "seed_r0": res.seed[0]} for res in results for row in res.frenet]
    resid_rows = [r.row() for res in results for r in res.residuals]
    dist_rows = [r.row() for r in rates]
    tables = [("trajectories", TRAJECTORY_COLUMNS, traj_rows),
              ("frenet", FRENET_COLUMNS, frenet_rows),
              ("residuals", RESIDUAL_COLUMNS, resid_rows),
              ("disturbance", DISTURBANCE_COLUMNS, dist_rows)]
    if tube is not None:
        tables.append(("streamtube", STREAMTUBE_COLUMNS, tube_rows))
    for name, cols, rows in tables:
        if cfg.format == "csv":
            write_csv(os.path.join(cfg.out_dir, f"{name}.csv"), cols, rows)
        else:
            write_jsonl(os.path.join(cfg.out_dir, f"{name}.jsonl"),
                        ({c: row[c] for c in cols} for row in rows))
    write_jsonl(os.path.join(cfg.out_dir, "indicators.jsonl"), indicators)

    report = {
        "field": {"kind": field.kind, **field.params()},
        "mode": cfg.mode,
        "seeds": [r.summary() for r in results],
        "maxima": {
            "abs_res_r": max((abs(r.res_r) for res in results for r in res.residuals), default=None),
            "abs_res_b": max((abs(r.res_b) for res in results for r in res.residuals), default=None),
            "L0": max((r.L0 for r in rates), default=None),
            "Lx": max((r.Lx for r in rates), default=None),
            "Lt": max((r.Lt for r in rates), default=None),
        },
        "scales": {"length": tube.length_scale if tube else field.length_scale,
                   "time": tube.time_scale if tube else field.time_scale},
        "provenance": {"config_hash": cfg.hash, "version": __version__},
    }
    if field.domain.r_max is not None:
        try:
            report["momentum_flux_ratio"] = momentum_flux_ratio(
                field, cfg.z_span[0] if cfg.z_span else 0.0, cfg.t_span[0], cfg.quad_tol)
        except AxiflowError as exc:
            report["momentum_flux_ratio"] = exc.as_dict()
    if cfg.mode == "validate":
        report["validation"] = _validate(field, cfg, results, rates)
    report["provenance"]["wall_time"] = time.perf_counter() - start
    return report


def write_report(out_dir, report):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", newline="\n") as fh:
        fh.write(json.dumps(json.loads(dumps(report)), sort_keys=True, indent=2) + "\n")


def execute(cfg: ScenarioConfig, threads=1) -> int:
    """Run, write report.json, map the outcome to an exit code."""
    try:
        report = run(cfg, threads)
    except ConfigError as exc:
        write_report(cfg.out_dir, {"error": exc.as_dict(), "exit_code": EXIT_CONFIG})
        log.error("%s", exc)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        write_report(cfg.out_dir, {"error": exc.as_dict(), "exit_code": EXIT_NUMERICAL})
        log.error("%s", exc)
        return EXIT_NUMERICAL
    code = EXIT_OK
    if cfg.mode == "validate" and not all(v["passed"] for v in report["validation"]):
        failed = [v["suite"] for v in report["validation"] if not v["passed"]]
        report["error"] = ValidationFailure(f"failed suites: {', '.join(failed)}",
                                            suites=failed).as_dict()
        code = EXIT_VALIDATION
    report["exit_code"] = code
    write_report(cfg.out_dir, report)
    return code
