import csv
import json

import numpy as np
import pytest

from colocshare import analytics, figures
from colocshare.errors import InvalidSpecError


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_capacity_peaks_far_below_strength_optimum():
    rows, _, params = figures.fig3(reps=3)
    cap = np.array([r["mean_capacity"] for r in rows])
    best = rows[int(np.argmax(cap))]["r"]
    assert best <= 100 and best < rows[0]["strength_optimal_r"]
    assert params["seed"] == 0


def test_strength_curves_track_analytic():
    rows, _, _ = figures.fig4(reps=5)
    near_opt = [r for r in rows if r["regime_flag"] >= 50]
    assert near_opt and max(r["rel_error"] for r in near_opt) < 0.15


def test_two_operator_figures_are_consistent():
    rows, _, _ = figures.fig5()
    for r in rows:
        assert r["g_type1"] == pytest.approx(r["shared"] / r["type1_alone"])
        assert r["g_type2"] >= 1.0 - 1e-12
    rows7, cols7, _ = figures.fig7()
    assert "p_bound_two_operator" in cols7
    assert rows7[0]["p_star_numeric"] == pytest.approx(0.62, abs=0.01)


def test_n_operator_thresholds():
    rows, _, _ = figures.fig9()
    by_n = {r["N"]: r for r in rows}
    assert by_n[10]["p_star_numeric"] == pytest.approx(0.4852, abs=1e-3)
    assert by_n[10]["p_bound_equal_operators"] == pytest.approx(0.5954, abs=1e-4)


def test_bandwidth_figure_matches_helpers():
    rows, _, _ = figures.fig10()
    r0 = rows[0]
    assert r0["w_required"] == pytest.approx(analytics.required_bandwidth(
        0.9, analytics.AnalyticInputs.equal(1, 0.0)))


def test_emit_writes_csv_and_manifest(tmp_path):
    path = figures.emit_figure("fig8", tmp_path)
    rows = read(path)
    assert rows and set(rows[0]) == {"N", "p", "optimal_strength", "optimal_radius", "e_log_c"}
    figures.emit_figure("fig10", tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert [m["figure_id"] for m in manifest] == ["fig10", "fig8"]
    assert all(len(m["spec_hash"]) == 16 for m in manifest)
    with pytest.raises(InvalidSpecError):
        figures.emit_figure("fig99", tmp_path)


def test_emit_is_deterministic(tmp_path):
    a = figures.emit_figure("fig4", tmp_path / "a", reps=2, seed=3).read_bytes()
    b = figures.emit_figure("fig4", tmp_path / "b", reps=2, seed=3).read_bytes()
    assert a == b
