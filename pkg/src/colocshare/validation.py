"""Self-check suite behind ``colocshare validate``.

Each check returns ``(passed, detail)``.  Checks reach the analytics through the
module attribute, so a fault injected there (``inject_fault``) is observable.
"""

from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager
from pathlib import Path
from unittest import mock

import numpy as np
from scipy import stats

from . import analytics, geometry
from .analytics import AnalyticInputs
from .experiments import run_replications, write_csv
from .metrics import link_strengths
from .network import ScenarioConfig, build_network, place_towers


def check_real_world_radius():
    single = analytics.optimal_radius(AnalyticInputs(1, 0.0, (), 2.78e-7, 1e-5, 1e7))
    shared = analytics.optimal_radius(AnalyticInputs(2, 0.14, (387 / 434,), 2.78e-7, 1e-5, 1e7))
    e1, e2 = abs(single / 4892 - 1), abs(shared / 3951 - 1)
    return e1 <= 0.005 and e2 <= 0.03, f"single {single:.1f} m ({e1:.2%}), shared {shared:.1f} m ({e2:.2%})"


def check_elogc_equivalence():
    worst = 0.0
    for b in np.linspace(0.02, 1.0, 50):
        for p in np.linspace(0.0, 1.0, 50):
            ex = analytics.e_log_c_exact(2, p, (b,))
            cl = analytics.e_log_c_closed_n2(b, p)
            worst = max(worst, abs(ex - cl) / max(abs(cl), 1e-300) if cl else abs(ex))
    taylor_gap = max(abs(analytics.e_log_c_taylor(n, p) - analytics.e_log_c_exact(n, p))
                     for n in (5, 10, 20) for p in np.arange(0.1, 0.95, 0.1))
    ex10, ta10 = analytics.e_log_c_exact(10, 0.5), analytics.e_log_c_taylor(10, 0.5)
    ok = (worst <= 1e-12 and taylor_gap <= 0.03 and abs(ex10 - 0.30227) < 5e-6
          and abs(ta10 - 0.29643) < 5e-6)
    return ok, (f"closed-vs-exact {worst:.2e}, taylor gap {taylor_gap:.4f}, "
                f"N=10 exact {ex10:.5f} taylor {ta10:.5f}")


def check_thresholds():
    p10 = analytics.threshold_numeric(lambda p: analytics.gain_N(10, p))
    p_small = analytics.threshold_numeric(lambda p: analytics.gain_type1(1e-3, p))
    bound = analytics.threshold_bound_N(10).value
    grid = np.linspace(0.0, 1.0, 100)
    g2_min = min(analytics.gain_type2(b, p) for b in np.linspace(0.01, 1.0, 100) for p in grid)
    ok = (abs(p10 - 0.487) <= 0.01 and abs(p_small - 0.620) <= 0.01
          and round(bound, 4) == 0.5954 and g2_min >= 1.0 - 1e-12)
    return ok, f"p*(N=10) {p10:.4f}, p*(beta=1e-3) {p_small:.4f}, bound {bound:.4f}, min G2 {g2_min:.6f}"


def check_scaling():
    exact0 = all(analytics.gain_N(n, 0.0) == n ** (1 / 3) for n in (1, 8, 27))
    gaps = [abs(analytics.gain_N(10_000, p) / 10_000 ** (1 / 3) - (1 - p)) for p in (0.2, 0.5, 0.8)]
    radii = [analytics.optimal_radius(AnalyticInputs.equal(n, 1.0)) for n in (1, 2, 5, 10, 50, 100)]
    spread = max(radii) / min(radii) - 1
    return exact0 and max(gaps) <= 0.01 and spread <= 1e-12, (
        f"G^N(0)=N^(1/3): {exact0}, max limit gap {max(gaps):.4f}, r_opt(p=1) spread {spread:.1e}")


def check_coverage(reps: int = 100):
    cfg = ScenarioConfig(radius_r=600.0)
    s = run_replications(cfg, reps)
    lt = AnalyticInputs.from_config(cfg).lambda_tower
    ana = float(analytics.coverage_probability(600.0, lt))
    gap = abs(s.mean["coverage_fraction"] - ana)
    inp = AnalyticInputs(1, 0.0, (), 1e-6, 1e-3, 1e7)
    w_req = analytics.required_bandwidth(0.9, inp)
    r_back = analytics.optimal_radius(AnalyticInputs(1, 0.0, (), 1e-6, 1e-3, w_req))
    r_min = analytics.coverage_min_radius(0.9, 1e-6)
    self_gap = abs(r_back / r_min - 1)
    ok = gap <= 0.02 and self_gap <= 1e-9 and abs(w_req / 5.36e6 - 1) <= 0.001
    return ok, f"coverage gap {gap:.4f}, r_opt(w_req)/r_min-1 {self_gap:.1e}, w_req {w_req:.4g}"


def check_index_completeness():
    rng = np.random.default_rng(7)
    for mode in (geometry.TORUS, geometry.TRUNCATE):
        region = geometry.Region(1000.0, 700.0, mode)
        pts = geometry.sample_ppp(region, 5e-4, rng)
        index = geometry.build_index(pts, 60.0)
        for _ in range(50):
            c = rng.uniform(0, 1, 2) * [region.width, region.height]
            r = float(rng.uniform(0, 200))
            brute = np.flatnonzero(geometry.distance(pts.points, c, region) <= r).tolist()
            if geometry.neighbors_within(index, c, r) != brute:
                return False, f"mismatch in {mode} mode at r={r:.1f}"
    return True, "index equals brute force on 100 queries"


def check_handshake_and_decomposition():
    net = build_network(ScenarioConfig(n_operators=3, colocation_p=0.4, betas=(0.7, 0.9)))
    hs = int(net.tower_degree.sum()) == int(net.user_degree.sum())
    s = link_strengths(net, 1e7)
    t = net.edge_tower
    parts = (math.log(1e7) + np.log(net.tower_count[t]) - np.log(net.tower_degree[t])
             - np.log(net.edge_dist))
    err = float(np.max(np.abs(s - parts) / np.maximum(np.abs(parts), 1.0)))
    return hs and err <= 1e-12, f"handshake {hs}, decomposition error {err:.1e}"


def check_gain_identities():
    grid = np.linspace(0.01, 1.0, 100)
    worst = max(abs(analytics.gain_type2(b, p) - b ** (-1 / 3) * analytics.gain_type1(b, p))
                for b in grid for p in np.linspace(0, 1, 100))
    decreasing = all(np.all(np.diff([analytics.optimal_strength(AnalyticInputs(2, p, (b,),
                                                                               1e-6, 1e-3, 1e7))
                                     for p in np.linspace(0, 1, 51)]) <= 1e-15)
                     for b in (0.2, 0.5, 0.8, 1.0))
    return worst <= 1e-12 and decreasing, f"G2 identity error {worst:.1e}, S_opt decreasing in p {decreasing}"


def check_analytic_argmax():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        inp = AnalyticInputs(n, float(rng.uniform()), tuple(rng.uniform(0.2, 1.0, n - 1)),
                             float(10 ** rng.uniform(-7, -5)), float(10 ** rng.uniform(-4, -2)),
                             float(10 ** rng.uniform(6, 8)))
        r_opt = analytics.optimal_radius(inp)
        grid = np.linspace(r_opt / 4, 4 * r_opt, 1000)
        best = grid[np.argmax(analytics.expected_strength(grid, inp))]
        if abs(best - r_opt) > grid[1] - grid[0]:
            return False, f"grid argmax {best:.1f} vs r_opt {r_opt:.1f}"
    return True, "r_opt is the grid argmax for 20 random draws"


def check_colocation_law():
    cfg = ScenarioConfig(n_operators=3, colocation_p=0.5, betas=(0.8, 0.6), lambda_bs=1e-6,
                         region=geometry.Region(50_000.0, 50_000.0), seed=3)
    towers = place_towers(cfg, np.random.default_rng(cfg.seed))
    c = towers.count
    anchor = towers.owners[:, 0]
    s = analytics.standalone_tower_share(cfg.colocation_p, cfg.betas)
    pmf = analytics.poisson_binomial_pmf([cfg.colocation_p * b for b in cfg.betas])
    expected = np.concatenate([[s], (1 - s) * pmf])
    observed = np.concatenate([[np.count_nonzero(~anchor)],
                               np.bincount(c[anchor] - 1, minlength=pmf.size)])
    _, pval = stats.chisquare(observed, expected * observed.sum())
    return pval > 0.01, f"chi-square p-value {pval:.3f} on {observed.sum()} towers"


CHECKS = {
    "criterion_1_real_world_radius": check_real_world_radius,
    "criterion_3_elogc_equivalence": check_elogc_equivalence,
    "criterion_5_thresholds": check_thresholds,
    "criterion_6_scaling": check_scaling,
    "criterion_7_coverage": check_coverage,
    "invariant_index_completeness": check_index_completeness,
    "invariant_handshake_decomposition": check_handshake_and_decomposition,
    "invariant_gain_identities": check_gain_identities,
    "invariant_analytic_argmax": check_analytic_argmax,
    "invariant_colocation_law": check_colocation_law,
}


@contextmanager
def inject_fault():
    """Corrupt the two-operator closed form; used as a negative control."""
    with mock.patch.object(analytics, "e_log_c_closed_n2",
                           lambda beta2, p: 1.01 * beta2 * p * math.log(2) / (1 + (1 - p) * beta2)):
        yield


def run_validation(out_dir=None, fault: bool = False) -> list[dict]:
    results = []
    ctx = inject_fault() if fault else mock.patch.dict({})
    with ctx:
        for name, check in CHECKS.items():
            t0 = time.perf_counter()
            try:
                ok, detail = check()
            except Exception as exc:  # a crashing check is a failing check
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            results.append({"check": name, "status": "pass" if ok else "fail",
                            "detail": detail, "seconds": round(time.perf_counter() - t0, 3)})
    if out_dir is not None:
        out = Path(out_dir)
        write_csv(out / "validation_report.csv", results, ["check", "status", "detail", "seconds"])
        (out / "validation_report.json").write_text(json.dumps(results, indent=2) + "\n")
    return results
