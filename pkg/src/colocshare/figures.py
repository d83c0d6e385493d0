"""Plot-ready CSV datasets for each figure of the analysis (no rendering).

Each builder returns ``(rows, columns, params)``; :func:`emit_figure` writes
``<out>/<figure_id>.csv`` and records it in ``<out>/manifest.json`` together with
a hash of ``params``.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np

from . import analytics
from .analytics import AnalyticInputs
from .errors import InvalidSpecError, NoBenefitError
from .experiments import compare, run_replications, spec_hash, update_manifest, write_csv
from .metrics import RadioParams
from .network import ScenarioConfig

# Defaults shared by every simulated figure.
BASE = dict(lambda_bs=1e-6, lambda_u=1e-3, bandwidth_w=1e7)


def fig3(reps: int = 100, seed: int = 0, **_):
    """Mean capacity and strength per user against r, single operator."""
    radio = RadioParams(111.0, "db", 2.0)
    cfg = ScenarioConfig(seed=seed, **BASE)
    r_grid = np.arange(10.0, 501.0, 10.0)
    r_strength = analytics.optimal_radius(AnalyticInputs.from_config(cfg))
    rows = []
    for r in r_grid:
        s = run_replications(cfg, reps, radio=radio, radius=float(r))
        rows.append({
            "r": float(r),
            "mean_capacity": s.mean["mean_capacity"],
            "capacity_stderr": s.stderr["mean_capacity"],
            "mean_strength": s.mean["mean_strength"],
            "strength_stderr": s.stderr["mean_strength"],
            "coverage_fraction": s.mean["coverage_fraction"],
            "strength_optimal_r": r_strength,
        })
    params = {"reps": reps, "seed": seed, "k_db": 111.0, "alpha": 2.0, **BASE}
    return rows, list(rows[0]), params


def fig4(reps: int = 100, seed: int = 0, **_):
    """Simulated vs approximate mean strength against r for N = 2 and N = 10."""
    rows = []
    for n in (2, 10):
        for p in (0.0, 0.5, 1.0):
            cfg = ScenarioConfig(n_operators=n, colocation_p=p, seed=seed, **BASE)
            r_opt = analytics.optimal_radius(AnalyticInputs.from_config(cfg))
            for factor in (0.5, 0.75, 1.0, 1.25, 1.5):
                r = factor * r_opt
                if 2 * r > cfg.region.width:
                    continue
                c = compare(cfg, run_replications(cfg, reps, radius=r), "mean_strength")
                rows.append({"N": n, "p": p, "r": r, "empirical_mean": c.empirical_mean,
                             "empirical_stderr": c.empirical_stderr,
                             "analytic": c.analytic_value, "rel_error": c.rel_error,
                             "regime_flag": c.regime_flag})
    return rows, list(rows[0]), {"reps": reps, "seed": seed, **BASE}


def fig5(beta2: float = 0.8, **_):
    """Optimal strength for two operators of unequal size against p."""
    rows = []
    for p in np.linspace(0.0, 1.0, 101):
        inp = AnalyticInputs(2, float(p), (beta2,), **BASE)
        rows.append({
            "p": float(p),
            "shared": analytics.optimal_strength(inp),
            "type1_alone": analytics.optimal_strength(analytics.standalone_inputs(inp, 1)),
            "type2_alone": analytics.optimal_strength(analytics.standalone_inputs(inp, 2)),
            "g_type1": analytics.gain_type1(beta2, float(p)),
            "g_type2": analytics.gain_type2(beta2, float(p)),
        })
    return rows, list(rows[0]), {"beta2": beta2, **BASE}


def fig7(**_):
    """Numeric and bounded co-location thresholds for two operators against beta_2."""
    rows = []
    for b in np.concatenate([[1e-3], np.linspace(0.01, 1.0, 100)]):
        b = float(b)
        bound = analytics.threshold_bound_n2(b)
        rows.append({
            "beta2": b,
            "p_star_numeric": analytics.threshold_numeric(lambda p: analytics.gain_type1(b, p)),
            "p_bound_two_operator": bound.value,
            "bound_in_unit_interval": bound.in_unit_interval,
        })
    return rows, list(rows[0]), {}


def fig8(**_):
    """Optimal strength and optimal radius against p for several numbers of operators."""
    rows = []
    for n in (1, 2, 5, 10, 20):
        for p in np.linspace(0.0, 1.0, 21):
            inp = AnalyticInputs.equal(n, float(p), **BASE)
            rows.append({"N": n, "p": float(p),
                         "optimal_strength": analytics.optimal_strength(inp),
                         "optimal_radius": analytics.optimal_radius(inp),
                         "e_log_c": analytics.e_log_c(inp).value})
    return rows, list(rows[0]), dict(BASE)


def _maybe(fn):
    try:
        return fn()
    except NoBenefitError:
        return None


def fig9(n_max: int = 50, **_):
    """Co-location threshold of N equal operators: numeric root vs closed bound."""
    rows = []
    for n in range(2, n_max + 1):
        inp = AnalyticInputs.equal(n, 0.0, **BASE)
        rows.append({
            "N": n,
            "p_star_numeric": _maybe(
                lambda: analytics.threshold_numeric(lambda p: analytics.gain_N(n, p))),
            "p_bound_equal_operators": analytics.threshold_bound_N(n).value,
            "p_star_ratio": _maybe(lambda: analytics.p_star(inp, form="ratio")),
        })
    return rows, list(rows[0]), {"n_max": n_max}


def fig10(theta: float = 0.9, **_):
    """Bandwidth per BS needed for coverage ``theta`` at the optimal radius, against p."""
    rows = []
    for n in (1, 2, 5, 10):
        for p in np.linspace(0.0, 1.0, 21):
            inp = AnalyticInputs.equal(n, float(p), **BASE)
            rows.append({"N": n, "p": float(p),
                         "w_required": analytics.required_bandwidth(theta, inp),
                         "r_min": analytics.coverage_min_radius(theta, inp.lambda_tower)})
    return rows, list(rows[0]), {"theta": theta, **BASE}


def real_world(reps: int = 10, seed: int = 0, inventory=None, area_m2: Optional[float] = None,
               threshold_m: float = 5.0, user_density: float = 1e-5, **_):
    """Per-user strength on a base-station inventory at its own and forced co-location."""
    from . import ingest

    if inventory is None:
        inventory = ingest.parse_bs_csv(ingest.fixture_path())
        source = "synthetic_two_operator.csv"
        if area_m2 is None:
            area_m2 = inventory.source.get("side_m", 39_510.0) ** 2
    else:
        source = inventory.source.get("path", "inventory")
    rows = []
    variants = [("observed", inventory)]
    for forced in (0.5, 1.0):
        rng = np.random.default_rng(seed)
        variants.append((f"p={forced}", ingest.force_colocation(inventory, forced, rng,
                                                                threshold_m)))
    for label, inv in variants:
        for row in ingest.run_real_world(inv, user_density=user_density, seed=seed, reps=reps,
                                         threshold_m=threshold_m, area_m2=area_m2, label=label):
            rows.append(row.to_row())
    params = {"reps": reps, "seed": seed, "source": source, "area_m2": area_m2,
              "threshold_m": threshold_m, "user_density": user_density}
    return rows, list(rows[0]), params


FIGURES = {
    "fig3": fig3, "fig4": fig4, "fig5": fig5, "fig7": fig7, "fig8": fig8, "fig9": fig9,
    "fig10": fig10, "real_world": real_world,
}


def emit_figure(figure_id: str, out_dir, **options) -> Path:
    """Build one figure dataset, write it as CSV and register it in the manifest."""
    if figure_id not in FIGURES:
        raise InvalidSpecError(f"unknown figure {figure_id!r}; choose from {sorted(FIGURES)}")
    rows, columns, params = FIGURES[figure_id](**options)
    out_dir = Path(out_dir)
    path = write_csv(out_dir / f"{figure_id}.csv", rows, columns)
    update_manifest(out_dir, {
        "figure_id": figure_id,
        "spec_hash": spec_hash({"figure_id": figure_id, **params}),
        "seed": params.get("seed"),
        "path": path.name,
    })
    return path
