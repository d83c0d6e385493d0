"""Multi-operator scenario configuration, tower/user realisation and association.

Random draws happen in a fixed order so that a seed fully determines a network:
type-1 towers, then the co-location coin flips for operators 2..N, then the
standalone towers of operators 2..N, then users of operators 1..N.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np

from . import kernels
from .errors import InvalidParameterError
from .geometry import Region, sample_ppp

log = logging.getLogger(__name__)

OPTIMAL = "optimal"


@dataclass(frozen=True)
class ScenarioConfig:
    """Full parameterisation of an N-operator network.

    ``betas`` holds the density ratios of operators 2..N relative to operator 1
    (``None`` means all ones).  ``radius_r`` is a length in metres or the string
    ``"optimal"``, resolved to the analytic optimal radius.
    """

    n_operators: int = 1
    colocation_p: float = 0.0
    lambda_bs: float = 1e-6
    lambda_u: float = 1e-3
    betas: Optional[tuple] = None
    radius_r: Union[float, str] = OPTIMAL
    bandwidth_w: float = 1e7
    region: Region = field(default_factory=lambda: Region(4000.0, 4000.0))
    alpha: float = 1.0
    seed: int = 0

    def __post_init__(self):
        n = self.n_operators
        if int(n) != n or n < 1:
            raise InvalidParameterError(f"n_operators must be an integer >= 1, got {n}")
        object.__setattr__(self, "n_operators", int(n))
        if not 0.0 <= self.colocation_p <= 1.0:
            raise InvalidParameterError(f"colocation_p must lie in [0, 1], got {self.colocation_p}")
        betas = (1.0,) * (self.n_operators - 1) if self.betas is None else tuple(
            float(b) for b in self.betas)
        if len(betas) != self.n_operators - 1:
            raise InvalidParameterError(
                f"expected {self.n_operators - 1} betas for {self.n_operators} operators, "
                f"got {len(betas)}")
        if any(not (0.0 < b <= 1.0) for b in betas):
            raise InvalidParameterError(f"every beta must lie in (0, 1], got {betas}")
        object.__setattr__(self, "betas", betas)
        for name in ("lambda_bs", "lambda_u", "bandwidth_w"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise InvalidParameterError(f"{name} must be finite and > 0, got {v}")
        if self.alpha <= 0:
            raise InvalidParameterError(f"alpha must be > 0, got {self.alpha}")
        r = self.radius_r
        if r != OPTIMAL:
            if isinstance(r, str) or not math.isfinite(r) or r < 0:
                raise InvalidParameterError(f"radius_r must be >= 0 or 'optimal', got {r!r}")
            object.__setattr__(self, "radius_r", float(r))
        if isinstance(self.region, dict):
            object.__setattr__(self, "region", Region.from_dict(self.region))
        if self.lambda_bs > self.lambda_u:
            warnings.warn("lambda_bs exceeds lambda_u; the model assumes many users per tower",
                          stacklevel=3)

    @property
    def all_betas(self) -> np.ndarray:
        """Density ratios of operators 1..N (the first is always 1)."""
        return np.array((1.0,) + self.betas)

    def replace(self, **changes) -> "ScenarioConfig":
        if "n_operators" in changes and "betas" not in changes:
            if self.betas and any(b != 1.0 for b in self.betas):
                raise InvalidParameterError("changing n_operators needs explicit betas")
            changes["betas"] = None
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "n_operators": self.n_operators,
            "colocation_p": self.colocation_p,
            "lambda_bs": self.lambda_bs,
            "lambda_u": self.lambda_u,
            "betas": list(self.betas),
            "radius_r": self.radius_r,
            "bandwidth_w": self.bandwidth_w,
            "region": self.region.to_dict(),
            "alpha": self.alpha,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidParameterError(f"unknown config fields: {sorted(unknown)}")
        d = dict(d)
        if "region" in d:
            d["region"] = Region.from_dict(d["region"])
        if d.get("betas") is not None:
            d["betas"] = tuple(d["betas"])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        return cls.from_dict(json.loads(text))

    def resolved_radius(self) -> float:
        if self.radius_r == OPTIMAL:
            from .analytics import AnalyticInputs, optimal_radius
            return optimal_radius(AnalyticInputs.from_config(self))
        return self.radius_r


def parse_override(cfg: ScenarioConfig, key: str, value: str) -> ScenarioConfig:
    """Apply a ``key=value`` string override (values parsed as JSON when possible)."""
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    if key.startswith("region."):
        sub = key.split(".", 1)[1]
        d = cfg.region.to_dict()
        if sub not in d:
            raise InvalidParameterError(f"unknown region field {sub!r}")
        d[sub] = parsed
        return cfg.replace(region=Region.from_dict(d))
    if key not in {f.name for f in dataclasses.fields(ScenarioConfig)}:
        raise InvalidParameterError(f"unknown config field {key!r}")
    if key == "betas" and parsed is not None:
        parsed = tuple(parsed)
    return cfg.replace(**{key: parsed})


def compose_densities(cfg: ScenarioConfig) -> tuple[float, float]:
    """Effective (tower, user) intensities of the merged network."""
    s = float(sum(cfg.betas))
    return (1.0 + (1.0 - cfg.colocation_p) * s) * cfg.lambda_bs, (1.0 + s) * cfg.lambda_u


@dataclass(frozen=True)
class Tower:
    location: tuple
    resource_count: int
    owner_types: frozenset


@dataclass(frozen=True)
class Towers:
    """Tower sites; ``owners[j, k-1]`` is True when operator k has a BS on site j.

    ``resources`` overrides the BS count per site when an operator can own more
    than one BS on a site (clustered real data); otherwise it is the owner count.
    """

    xy: np.ndarray
    owners: np.ndarray
    resources: Optional[np.ndarray] = None

    @property
    def count(self) -> np.ndarray:
        if self.resources is not None:
            return self.resources
        return self.owners.sum(axis=1)

    def __len__(self):
        return self.xy.shape[0]

    def __getitem__(self, j) -> Tower:
        return Tower(tuple(self.xy[j]), int(self.count[j]),
                     frozenset((np.flatnonzero(self.owners[j]) + 1).tolist()))

    def __iter__(self) -> Iterator[Tower]:
        return (self[j] for j in range(len(self)))


@dataclass(frozen=True)
class Users:
    xy: np.ndarray
    operator: np.ndarray

    def __len__(self):
        return self.xy.shape[0]


@dataclass(frozen=True)
class Network:
    """Disk-model association between users and towers.

    Edges are stored flat and sorted by user: ``edge_user[e]`` links to
    ``edge_tower[e]`` at distance ``edge_dist[e]``.  ``tower_count`` is the number
    of BSs (bandwidth units) available at each tower for this association.
    """

    towers: Towers
    users: Users
    radius: float
    region: Region
    tower_count: np.ndarray
    edge_user: np.ndarray
    edge_tower: np.ndarray
    edge_dist: np.ndarray
    tower_degree: np.ndarray
    user_degree: np.ndarray
    config: Optional[ScenarioConfig] = None

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_towers(self) -> int:
        return len(self.towers)

    def edges_of(self, i: int) -> list[tuple[int, float]]:
        lo, hi = np.searchsorted(self.edge_user, [i, i + 1])
        return list(zip(self.edge_tower[lo:hi].tolist(), self.edge_dist[lo:hi].tolist()))


def place_towers(cfg: ScenarioConfig, rng: np.random.Generator) -> Towers:
    """Type-1 towers as a PPP, Bernoulli(p*beta_k) co-location per operator, plus standalone sites."""
    n_ops, p = cfg.n_operators, cfg.colocation_p
    anchor = sample_ppp(cfg.region, cfg.lambda_bs, rng).points
    owners = np.zeros((anchor.shape[0], n_ops), dtype=bool)
    owners[:, 0] = True
    for k, beta in enumerate(cfg.betas, start=1):
        owners[:, k] = rng.random(anchor.shape[0]) < p * beta
    xy_parts, own_parts = [anchor], [owners]
    for k, beta in enumerate(cfg.betas, start=1):
        alone = sample_ppp(cfg.region, (1.0 - p) * beta * cfg.lambda_bs, rng).points
        o = np.zeros((alone.shape[0], n_ops), dtype=bool)
        o[:, k] = True
        xy_parts.append(alone)
        own_parts.append(o)
    return Towers(np.concatenate(xy_parts), np.concatenate(own_parts))


def place_users(cfg: ScenarioConfig, rng: np.random.Generator) -> Users:
    xy_parts, ops = [], []
    for k, beta in enumerate(cfg.all_betas, start=1):
        pts = sample_ppp(cfg.region, beta * cfg.lambda_u, rng).points
        xy_parts.append(pts)
        ops.append(np.full(pts.shape[0], k, dtype=np.int64))
    return Users(np.concatenate(xy_parts), np.concatenate(ops))


def _link(towers: Towers, users: Users, r: float, region: Region, tower_count,
          config=None) -> Network:
    ui, tj, d = kernels.disk_edges(users.xy, towers.xy, r, region.width, region.height,
                                   torus=region.torus)
    return Network(
        towers=towers, users=users, radius=float(r), region=region,
        tower_count=np.asarray(tower_count, dtype=np.int64),
        edge_user=ui, edge_tower=tj, edge_dist=d,
        tower_degree=np.bincount(tj, minlength=len(towers)),
        user_degree=np.bincount(ui, minlength=len(users)),
        config=config)


def subnetwork(towers: Towers, users: Users, k: int) -> tuple[Towers, Users]:
    """Operator ``k`` alone: its own BS sites (one BS each) and its own users."""
    keep = towers.owners[:, k - 1]
    own = np.zeros((int(keep.sum()), towers.owners.shape[1]), dtype=bool)
    own[:, k - 1] = True
    mine = users.operator == k
    return Towers(towers.xy[keep], own), Users(users.xy[mine], users.operator[mine])


def associate(towers: Towers, users: Users, r: float, region: Region,
              sharing: bool = True, config: Optional[ScenarioConfig] = None) -> Network:
    """Link every user to every tower within ``r``.

    With ``sharing=False`` each co-located BS becomes its own node with one
    bandwidth unit, and users only link to BSs of their own operator.
    """
    if sharing:
        return _link(towers, users, r, region, towers.count, config)
    n_ops = towers.owners.shape[1]
    site, op = np.nonzero(towers.owners)
    own = np.zeros((site.size, n_ops), dtype=bool)
    own[np.arange(site.size), op] = True
    bs = Towers(towers.xy[site], own)
    parts = []
    for k in range(1, n_ops + 1):
        bs_k = np.flatnonzero(op == k - 1)
        u_k = np.flatnonzero(users.operator == k)
        ui, tj, d = kernels.disk_edges(users.xy[u_k], bs.xy[bs_k], r, region.width,
                                       region.height, torus=region.torus)
        parts.append((u_k[ui], bs_k[tj], d))
    ui = np.concatenate([p[0] for p in parts])
    tj = np.concatenate([p[1] for p in parts])
    d = np.concatenate([p[2] for p in parts])
    order = np.lexsort((tj, ui))
    ui, tj, d = ui[order], tj[order], d[order]
    return Network(
        towers=bs, users=users, radius=float(r), region=region,
        tower_count=np.ones(site.size, dtype=np.int64),
        edge_user=ui, edge_tower=tj, edge_dist=d,
        tower_degree=np.bincount(tj, minlength=site.size),
        user_degree=np.bincount(ui, minlength=len(users)),
        config=config)


def build_network(cfg: ScenarioConfig, rng: Optional[np.random.Generator] = None,
                  sharing: bool = True, radius: Optional[float] = None) -> Network:
    """Realise towers and users from ``cfg`` and associate them."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    towers = place_towers(cfg, rng)
    users = place_users(cfg, rng)
    r = cfg.resolved_radius() if radius is None else radius
    return associate(towers, users, r, cfg.region, sharing=sharing, config=cfg)
