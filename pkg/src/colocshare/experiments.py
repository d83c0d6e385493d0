"""Seeded Monte Carlo replications, parameter sweeps and sim-vs-analytic rows.

Replication ``k`` of a scenario with seed ``s`` always uses
``numpy.random.default_rng(s + k)``, so results are reproducible bit for bit
and independent of how replications are distributed over worker processes.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analytics
from .errors import InvalidSpecError
from .metrics import MetricsSummary, RadioParams, summarize, user_strengths
from .network import (ScenarioConfig, associate, build_network, compose_densities,
                      parse_override, place_towers, place_users, subnetwork)


def replication_seed(base_seed: int, k: int) -> int:
    return base_seed + k


def _mean_stderr(values):
    a = np.asarray(values, dtype=np.float64)
    a = a[~np.isnan(a)]
    if a.size == 0:
        return math.nan, math.nan
    if a.size == 1:
        return float(a[0]), math.nan
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))


@dataclass(frozen=True)
class SimulationSummary:
    config: ScenarioConfig
    radius: float
    replications: list
    mean: dict
    stderr: dict

    @property
    def n(self) -> int:
        return len(self.replications)

    def replication_rows(self) -> list[dict]:
        return [{"replication": k, "seed": replication_seed(self.config.seed, k), **m.to_row()}
                for k, m in enumerate(self.replications)]

    def summary_rows(self) -> list[dict]:
        return [{"metric": key, "mean": self.mean[key], "stderr": self.stderr[key], "n": self.n}
                for key in self.mean]


def aggregate(config: ScenarioConfig, radius: float,
              summaries: Sequence[MetricsSummary]) -> SimulationSummary:
    rows = [m.to_row() for m in summaries]
    keys = list(dict.fromkeys(k for row in rows for k in row))
    mean, stderr = {}, {}
    for key in keys:
        mean[key], stderr[key] = _mean_stderr([row.get(key, math.nan) for row in rows])
    return SimulationSummary(config, radius, list(summaries), mean, stderr)


def _one_replication(args):
    cfg, k, radius, radio, sharing = args
    rng = np.random.default_rng(replication_seed(cfg.seed, k))
    net = build_network(cfg, rng, sharing=sharing, radius=radius)
    return summarize(net, cfg.bandwidth_w, radio)


def run_replications(cfg: ScenarioConfig, n: int, radio: Optional[RadioParams] = None,
                     sharing: bool = True, workers: int = 1,
                     radius: Optional[float] = None) -> SimulationSummary:
    """Realise ``n`` independent networks and aggregate their metric summaries."""
    if n < 1:
        raise ValueError("need at least one replication")
    r = cfg.resolved_radius() if radius is None else float(radius)
    jobs = [(cfg, k, r, radio, sharing) for k in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_one_replication, jobs))
    else:
        summaries = [_one_replication(j) for j in jobs]
    return aggregate(cfg, r, summaries)


@dataclass(frozen=True)
class GainEstimate:
    shared_mean: float
    baseline_mean: float
    gain: float
    gain_stderr: float
    shared_radius: float
    baseline_radius: float
    n: int


def run_gain_replications(cfg: ScenarioConfig, n: int, operator: int = 1) -> GainEstimate:
    """Empirical sharing gain of ``operator``, each network at its analytic optimal radius.

    The shared and standalone networks are cut from the same realisation, so the
    ratio of means benefits from common random numbers.
    """
    inputs = analytics.AnalyticInputs.from_config(cfg)
    r_shared = analytics.optimal_radius(inputs)
    r_alone = analytics.optimal_radius(analytics.standalone_inputs(inputs, operator))
    shared, alone = [], []
    for k in range(n):
        rng = np.random.default_rng(replication_seed(cfg.seed, k))
        towers = place_towers(cfg, rng)
        users = place_users(cfg, rng)
        net = associate(towers, users, r_shared, cfg.region)
        shared.append(user_strengths(net, cfg.bandwidth_w, cfg.alpha).mean())
        t_k, u_k = subnetwork(towers, users, operator)
        if len(u_k) == 0:
            alone.append(math.nan)
            continue
        net_k = associate(t_k, u_k, r_alone, cfg.region)
        alone.append(user_strengths(net_k, cfg.bandwidth_w, cfg.alpha).mean())
    a = np.asarray(shared)
    b = np.asarray(alone)
    ok = ~np.isnan(b)
    a, b = a[ok], b[ok]
    ratio = a.mean() / b.mean()
    if a.size > 1:
        resid = a - ratio * b
        se = float(resid.std(ddof=1) / math.sqrt(a.size) / abs(b.mean()))
    else:
        se = math.nan
    return GainEstimate(float(a.mean()), float(b.mean()), float(ratio), se, r_shared, r_alone,
                        int(a.size))


# --- sweeps -----------------------------------------------------------------

METRICS = ("mean_strength", "coverage_fraction", "mean_capacity", "mean_user_degree",
           "mean_tower_degree", "gain")

COMPARISON_COLUMNS = ["metric", "empirical_mean", "empirical_stderr", "analytic_value",
                      "rel_error", "regime_flag"]


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    axes: list
    replications: int = 100
    outputs: tuple = ("mean_strength",)
    radio: Optional[RadioParams] = None

    def __post_init__(self):
        if self.replications < 1:
            raise InvalidSpecError("replications must be >= 1")
        valid = {f.name for f in dataclasses.fields(ScenarioConfig)}
        for name, values in self.axes:
            if name not in valid and not name.startswith("region."):
                raise InvalidSpecError(f"unknown sweep parameter {name!r}")
            if not len(values):
                raise InvalidSpecError(f"axis {name!r} has no values")
        for m in self.outputs:
            if m not in METRICS:
                raise InvalidSpecError(f"unknown output metric {m!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        axes = d.get("axes", {})
        if isinstance(axes, dict):
            axes = list(axes.items())
        radio = d.get("radio")
        return cls(
            base=ScenarioConfig.from_dict(d.get("base", {})),
            axes=[(name, list(values)) for name, values in axes],
            replications=int(d.get("replications", 100)),
            outputs=tuple(d.get("outputs", ("mean_strength",))),
            radio=RadioParams(**radio) if radio else None,
        )

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "axes": [[name, list(values)] for name, values in self.axes],
            "replications": self.replications,
            "outputs": list(self.outputs),
            "radio": dataclasses.asdict(self.radio) if self.radio else None,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class ComparisonRow:
    parameters: dict
    metric: str
    empirical_mean: float
    empirical_stderr: float
    analytic_value: float
    rel_error: float
    regime_flag: float
    extra: dict = field(default_factory=dict)

    def to_row(self) -> dict:
        row = dict(self.parameters)
        row.update({c: getattr(self, c) for c in COMPARISON_COLUMNS})
        row.update(self.extra)
        return row


def rel_error(empirical: float, analytic: float) -> float:
    if analytic is None or not math.isfinite(analytic) or analytic == 0:
        return math.nan
    return abs(empirical - analytic) / abs(analytic)


def _analytic_companion(metric: str, cfg: ScenarioConfig, r: float) -> float:
    inputs = analytics.AnalyticInputs.from_config(cfg)
    if metric == "mean_strength":
        return analytics.expected_strength(r, inputs)
    if metric == "coverage_fraction":
        return float(analytics.coverage_probability(r, inputs.lambda_tower))
    if metric == "mean_user_degree":
        return inputs.lambda_tower * math.pi * r * r
    if metric == "mean_tower_degree":
        return inputs.lambda_user * math.pi * r * r
    if metric == "gain":
        return analytics.gain_for_operator(inputs, 1)
    return math.nan


def compare(cfg: ScenarioConfig, summary: SimulationSummary, metric: str,
            parameters: Optional[dict] = None) -> ComparisonRow:
    r = summary.radius
    emp, se = summary.mean[metric], summary.stderr[metric]
    ana = _analytic_companion(metric, cfg, r)
    _, lu = compose_densities(cfg)
    return ComparisonRow(parameters or {}, metric, emp, se, ana, rel_error(emp, ana),
                         lu * math.pi * r * r)


def apply_parameters(base: ScenarioConfig, params: dict) -> ScenarioConfig:
    cfg = base
    for name, value in params.items():
        cfg = parse_override(cfg, name, json.dumps(value))
    return cfg


def sweep(spec: SweepSpec, workers: int = 1) -> list[ComparisonRow]:
    """One row per (grid cell, output metric) over the Cartesian product of the axes."""
    names = [name for name, _ in spec.axes]
    rows = []
    for combo in itertools.product(*(values for _, values in spec.axes)):
        params = dict(zip(names, combo))
        cfg = apply_parameters(spec.base, params)
        summary = None
        for metric in spec.outputs:
            if metric == "gain":
                g = run_gain_replications(cfg, spec.replications)
                ana = _analytic_companion("gain", cfg, g.shared_radius)
                _, lu = compose_densities(cfg)
                rows.append(ComparisonRow(
                    params, "gain", g.gain, g.gain_stderr, ana, rel_error(g.gain, ana),
                    lu * math.pi * g.shared_radius ** 2,
                    extra={"closed_form_gain": _closed_form_gain(cfg)}))
                continue
            if summary is None:
                summary = run_replications(cfg, spec.replications, radio=spec.radio,
                                           workers=workers)
            rows.append(compare(cfg, summary, metric, {**params, "r": summary.radius}))
    return rows


def _closed_form_gain(cfg: ScenarioConfig) -> float:
    if cfg.n_operators == 2:
        return analytics.gain_type1(cfg.betas[0], cfg.colocation_p)
    if all(b == 1.0 for b in cfg.betas):
        return analytics.gain_N(cfg.n_operators, cfg.colocation_p)
    return math.nan


# --- output -----------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> Path:
    """Write ``rows`` with a header; columns default to first-seen key order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = list(dict.fromkeys(k for row in rows for k in row))
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: _fmt(row.get(c)) for c in columns})
    return path


def update_manifest(out_dir, entry: dict) -> Path:
    """Add or replace an entry (keyed by output path) in ``out_dir/manifest.json``."""
    out_dir = Path(out_dir)
    path = out_dir / "manifest.json"
    entries = json.loads(path.read_text()) if path.exists() else []
    entries = [e for e in entries if e.get("path") != entry["path"]]
    entries.append(entry)
    entries.sort(key=lambda e: (e.get("figure_id", ""), e["path"]))
    path.write_text(json.dumps(entries, indent=2, sort_keys=True) + "\n")
    return path


def spec_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]
