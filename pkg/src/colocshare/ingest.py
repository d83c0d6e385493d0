"""Real base-station inventories: CSV parsing, co-location clustering and parameter estimation.

Input CSV schema (header required)::

    operator_id,x_m,y_m          planar metres
    operator_id,lat,lon          degrees, projected equirectangularly

For lat/lon input the reference latitude is the mean latitude of all rows and the
origin is the south-west corner of the data, so ``x = R * dlon * cos(lat_ref)``
and ``y = R * dlat`` with ``R = 6 371 008.8 m``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import analytics, kernels
from .errors import InvalidParameterError
from .experiments import ComparisonRow, rel_error, replication_seed
from .geometry import TRUNCATE, Region, sample_ppp
from .metrics import user_strengths
from .network import Towers, Users, associate

log = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_008.8
DEFAULT_THRESHOLD_M = 5.0
DATA_DIR = Path(__file__).parent / "data"


class InventoryError(ValueError):
    """Malformed base-station CSV; ``errors`` lists ``(line, message)`` pairs."""

    def __init__(self, message, errors=()):
        self.errors = list(errors)
        detail = "; ".join(f"line {ln}: {msg}" for ln, msg in self.errors[:10])
        super().__init__(f"{message}: {detail}" if detail else message)


@dataclass(frozen=True)
class BsInventory:
    """Base-station locations (planar metres) keyed by operator id."""

    points: dict
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.points:
            raise InvalidParameterError("inventory needs at least one operator")
        for op, pts in self.points.items():
            pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
            if not np.all(np.isfinite(pts)):
                raise InvalidParameterError(f"operator {op} has non-finite coordinates")
            self.points[op] = pts

    @property
    def operator_ids(self) -> list:
        """Operator ids, largest first (ties broken by id)."""
        return sorted(self.points, key=lambda op: (-len(self.points[op]), str(op)))

    def sizes(self) -> dict:
        return {op: len(pts) for op, pts in self.points.items()}

    def stacked(self):
        """All BSs as one array plus the operator rank (1 = largest) of each."""
        ids = self.operator_ids
        xy = np.concatenate([self.points[op] for op in ids])
        rank = np.concatenate([np.full(len(self.points[op]), k, dtype=np.int64)
                               for k, op in enumerate(ids, start=1)])
        return xy, rank

    def bounding_box(self):
        xy, _ = self.stacked()
        return xy.min(axis=0), xy.max(axis=0)

    def translated(self, offset) -> "BsInventory":
        offset = np.asarray(offset, dtype=np.float64)
        return BsInventory({op: pts - offset for op, pts in self.points.items()},
                           dict(self.source))

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["operator_id", "x_m", "y_m"])
            for op in sorted(self.points, key=str):
                for x, y in self.points[op]:
                    w.writerow([op, repr(float(x)), repr(float(y))])
        return path


def parse_bs_csv(path) -> BsInventory:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if not header:
            raise InventoryError(f"{path} is empty")
        cols = {c.strip() for c in header}
        if "operator_id" not in cols:
            raise InventoryError(f"{path} lacks an operator_id column")
        if {"x_m", "y_m"} <= cols:
            kind = "xy"
        elif {"lat", "lon"} <= cols:
            kind = "latlon"
        else:
            raise InventoryError(f"{path} needs x_m,y_m or lat,lon columns")
        a_col, b_col = ("x_m", "y_m") if kind == "xy" else ("lat", "lon")
        rows, errors = [], []
        for line, rec in enumerate(reader, start=2):
            rec = {k.strip(): (v or "").strip() for k, v in rec.items() if k is not None}
            op = rec.get("operator_id", "")
            if not op:
                errors.append((line, "missing operator_id"))
                continue
            try:
                a, b = float(rec[a_col]), float(rec[b_col])
            except (KeyError, ValueError):
                errors.append((line, f"non-numeric {a_col}/{b_col}"))
                continue
            if not (math.isfinite(a) and math.isfinite(b)):
                errors.append((line, "non-finite coordinate"))
                continue
            rows.append((op, a, b))
    if errors:
        raise InventoryError(f"{len(errors)} malformed row(s) in {path}", errors)
    if not rows:
        raise InventoryError(f"{path} has no data rows")

    ops = [r[0] for r in rows]
    a = np.array([r[1] for r in rows])
    b = np.array([r[2] for r in rows])
    source = {"path": str(path), "format": kind}
    if kind == "latlon":
        lat_ref = float(a.mean())
        x = EARTH_RADIUS_M * np.radians(b - b.min()) * math.cos(math.radians(lat_ref))
        y = EARTH_RADIUS_M * np.radians(a - a.min())
        a, b = x, y
        source["reference_latitude"] = lat_ref
    points = {}
    for op in dict.fromkeys(ops):
        mask = np.array([o == op for o in ops])
        points[op] = np.column_stack([a[mask], b[mask]])
    return BsInventory(points, source)


@dataclass(frozen=True)
class Clustering:
    """Towers formed by single-linkage clustering of all BSs.

    ``labels[i]`` is the tower of BS ``i`` in :meth:`BsInventory.stacked` order and
    ``bs_rank[i]`` its operator rank.
    """

    towers: Towers
    labels: np.ndarray
    bs_rank: np.ndarray
    threshold_m: float


def _local_region(xy):
    lo = xy.min(axis=0)
    extent = np.maximum(xy.max(axis=0) - lo, 1.0)
    return lo, Region(float(extent[0]), float(extent[1]), TRUNCATE)


def cluster_colocated(inv: BsInventory, threshold_m: float = DEFAULT_THRESHOLD_M) -> Clustering:
    """Merge every pair of BSs within ``threshold_m`` (transitively) into one tower."""
    if threshold_m < 0:
        raise InvalidParameterError("threshold must be >= 0")
    xy, rank = inv.stacked()
    lo, region = _local_region(xy)
    local = xy - lo
    i, j, _ = kernels.disk_edges(local, local, threshold_m, region.width, region.height,
                                 torus=False)
    n = xy.shape[0]
    graph = coo_matrix((np.ones(i.size), (i, j)), shape=(n, n))
    _, raw = connected_components(graph, directed=False)
    # relabel towers by first BS appearance so labels do not depend on scipy internals
    _, first = np.unique(raw, return_index=True)
    order = np.argsort(first)
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    labels = relabel[raw]
    m = order.size
    counts = np.bincount(labels, minlength=m)
    cx = np.bincount(labels, weights=xy[:, 0], minlength=m) / counts
    cy = np.bincount(labels, weights=xy[:, 1], minlength=m) / counts
    n_ops = len(inv.points)
    owners = np.zeros((m, n_ops), dtype=bool)
    owners[labels, rank - 1] = True
    return Clustering(Towers(np.column_stack([cx, cy]), owners, counts.astype(np.int64)),
                      labels, rank, float(threshold_m))


@dataclass(frozen=True)
class EstimatedParams:
    p_hat: float
    beta_hat: tuple
    lambda_bs_hat: tuple
    area_m2: float
    colocation_threshold_m: float
    operator_ids: tuple
    counts: tuple

    def to_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "beta_hat": list(self.beta_hat),
            "lambda_bs_hat": list(self.lambda_bs_hat),
            "area_m2": self.area_m2,
            "colocation_threshold_m": self.colocation_threshold_m,
            "operator_ids": [str(o) for o in self.operator_ids],
            "counts": list(self.counts),
        }

    def analytic_inputs(self, lambda_u: float, w: float) -> analytics.AnalyticInputs:
        return analytics.AnalyticInputs(len(self.counts), self.p_hat, self.beta_hat[1:],
                                        self.lambda_bs_hat[0], lambda_u, w)


def default_area(inv: BsInventory) -> float:
    lo, hi = inv.bounding_box()
    area = float(np.prod(np.maximum(hi - lo, 1.0)))
    log.warning("no area given; using the bounding-box area %.6g m^2", area)
    return area


def estimate_params(inv: BsInventory, clustering: Clustering,
                    area_m2: Optional[float] = None) -> EstimatedParams:
    """Densities, density ratios and co-location factor, operators ordered largest first."""
    if area_m2 is None:
        area_m2 = default_area(inv)
    if area_m2 <= 0:
        raise InvalidParameterError("area must be > 0")
    ids = inv.operator_ids
    counts = [len(inv.points[op]) for op in ids]
    if min(counts) == 0:
        raise InvalidParameterError("every operator needs at least one BS")
    rank, labels = clustering.bs_rank, clustering.labels
    anchor_tower = clustering.towers.owners[:, 0]
    others = rank >= 2
    n_other = int(others.sum())
    p_hat = float(np.count_nonzero(anchor_tower[labels[others]]) / n_other) if n_other else 0.0
    return EstimatedParams(
        p_hat=p_hat,
        beta_hat=tuple(c / counts[0] for c in counts),
        lambda_bs_hat=tuple(c / area_m2 for c in counts),
        area_m2=float(area_m2),
        colocation_threshold_m=clustering.threshold_m,
        operator_ids=tuple(ids),
        counts=tuple(counts),
    )


def force_colocation(inv: BsInventory, target_p: float, rng: np.random.Generator,
                     threshold_m: float = DEFAULT_THRESHOLD_M) -> BsInventory:
    """Move randomly chosen non-anchor BSs onto anchor towers until p reaches ``target_p``.

    Each moved BS lands exactly on an anchor tower that does not yet host its operator.
    """
    if not 0.0 <= target_p <= 1.0:
        raise InvalidParameterError("target_p must lie in [0, 1]")
    clustering = cluster_colocated(inv, threshold_m)
    ids = inv.operator_ids
    towers = clustering.towers
    anchors = np.flatnonzero(towers.owners[:, 0])
    new_points = {op: inv.points[op].copy() for op in ids}
    offset = 0
    offsets = {}
    for k, op in enumerate(ids, start=1):
        offsets[k] = offset
        offset += len(inv.points[op])
    for k, op in enumerate(ids[1:], start=2):
        n_k = len(inv.points[op])
        idx = offsets[k] + np.arange(n_k)
        on_anchor = towers.owners[clustering.labels[idx], 0]
        need = math.ceil(target_p * n_k - 1e-9) - int(on_anchor.sum())
        if need <= 0:
            continue
        free = anchors[~towers.owners[anchors, k - 1]]
        movable = np.flatnonzero(~on_anchor)
        if need > min(free.size, movable.size):
            raise InvalidParameterError(
                f"cannot reach p={target_p}: not enough anchor towers for operator {op}")
        who = rng.choice(movable, size=need, replace=False)
        where = rng.choice(free, size=need, replace=False)
        new_points[op][who] = towers.xy[where]
    return BsInventory(new_points, {**inv.source, "forced_p": target_p})


def _mean_strength(towers: Towers, users: Users, r: float, region: Region, w: float) -> float:
    if len(users) == 0:
        return math.nan
    net = associate(towers, users, r, region)
    return float(user_strengths(net, w, 1.0).mean())


def run_real_world(inv: BsInventory, user_density: float = 1e-5, w: float = 1e7,
                   seed: int = 0, reps: int = 10, threshold_m: float = DEFAULT_THRESHOLD_M,
                   area_m2: Optional[float] = None, equal_user_density: bool = False,
                   label: str = "") -> list[ComparisonRow]:
    """Simulated vs analytic per-user strength: each operator alone, then all sharing.

    Users are Poisson on the bounding box of the BSs (no wrap-around).  With
    ``equal_user_density`` every operator gets ``user_density`` users per m^2;
    otherwise operator k gets ``beta_k * user_density``.
    """
    clustering = cluster_colocated(inv, threshold_m)
    est = estimate_params(inv, clustering, area_m2)
    xy, rank = inv.stacked()
    lo, region = _local_region(xy)
    local_bs = xy - lo
    tower_xy = clustering.towers.xy - lo
    n_ops = len(est.counts)
    user_betas = np.ones(n_ops) if equal_user_density else np.asarray(est.beta_hat)

    if equal_user_density:
        # rescale lambda_U so the merged user density is n_ops * user_density
        shared_in = est.analytic_inputs(n_ops * user_density / sum(est.beta_hat), w)
    else:
        shared_in = est.analytic_inputs(user_density, w)
    r_shared = analytics.optimal_radius(shared_in)
    s_shared = analytics.optimal_strength(shared_in)

    alone_in = [analytics.AnalyticInputs(1, 0.0, (), est.lambda_bs_hat[k],
                                         user_betas[k] * user_density, w)
                for k in range(n_ops)]
    r_alone = [analytics.optimal_radius(a) for a in alone_in]

    emp_alone = [[] for _ in range(n_ops)]
    emp_shared = []
    for rep in range(reps):
        rng = np.random.default_rng(replication_seed(seed, rep))
        users_xy, users_op = [], []
        for k in range(n_ops):
            pts = sample_ppp(region, user_betas[k] * user_density, rng).points
            users_xy.append(pts)
            users_op.append(np.full(pts.shape[0], k + 1, dtype=np.int64))
        all_users = Users(np.concatenate(users_xy), np.concatenate(users_op))
        for k in range(n_ops):
            mine = rank == k + 1
            own = np.zeros((int(mine.sum()), n_ops), dtype=bool)
            own[:, k] = True
            emp_alone[k].append(_mean_strength(
                Towers(local_bs[mine], own), Users(users_xy[k], users_op[k]),
                r_alone[k], region, w))
        emp_shared.append(_mean_strength(
            Towers(tower_xy, clustering.towers.owners, clustering.towers.resources),
            all_users, r_shared, region, w))

    base = {"label": label, "p_hat": est.p_hat, "threshold_m": threshold_m}
    rows = []

    def _row(name, samples, analytic, r, lam_u):
        a = np.asarray(samples, dtype=np.float64)
        se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else math.nan
        mean, analytic, r = float(a.mean()), float(analytic), float(r)
        rows.append(ComparisonRow({**base, "network": name, "r": r}, "mean_strength", mean, se,
                                  analytic, rel_error(mean, analytic), lam_u * math.pi * r * r))

    for k in range(n_ops):
        _row(f"operator_{k + 1}", emp_alone[k], analytics.optimal_strength(alone_in[k]),
             r_alone[k], alone_in[k].lambda_user)
    lam_u_shared = float(user_betas.sum() * user_density)
    _row("shared", emp_shared, s_shared, r_shared, lam_u_shared)
    return rows


def synthetic_inventory(n1: int = 434, n2: int = 387, n_coloc: int = 54,
                        side_m: float = 39_510.0, offset_m: float = 1.0,
                        min_sep_m: float = 20.0, seed: int = 0) -> BsInventory:
    """Two-operator inventory with exactly ``n_coloc`` operator-2 BSs next to operator-1 BSs.

    Co-located BSs sit ``offset_m`` from a distinct operator-1 BS; all other BSs are
    kept at least ``min_sep_m`` apart so clustering at a few metres is unambiguous.
    """
    if n_coloc > min(n1, n2):
        raise InvalidParameterError("cannot co-locate more BSs than either operator has")
    rng = np.random.default_rng(seed)
    placed = np.empty((0, 2))

    def fresh(count):
        nonlocal placed
        out = []
        while len(out) < count:
            cand = rng.uniform(offset_m, side_m - offset_m, size=2)
            if placed.size and np.min(np.hypot(*(placed - cand).T)) < min_sep_m:
                continue
            out.append(cand)
            placed = np.vstack([placed, cand])
        return np.array(out).reshape(-1, 2)

    op1 = fresh(n1)
    hosts = rng.choice(n1, size=n_coloc, replace=False)
    angle = rng.uniform(0, 2 * math.pi, size=n_coloc)
    coloc = op1[hosts] + offset_m * np.column_stack([np.cos(angle), np.sin(angle)])
    op2 = np.vstack([coloc, fresh(n2 - n_coloc)])
    return BsInventory({"1": op1, "2": op2},
                       {"synthetic": True, "seed": seed, "n_coloc": n_coloc, "side_m": side_m})


def fixture_path(name: str = "synthetic_two_operator.csv") -> Path:
    return DATA_DIR / name
