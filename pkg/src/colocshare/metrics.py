"""Per-link and per-user quality measures on a realised network.

All logarithms are natural, so strengths are in nats.  Users without any tower
in range contribute zero strength and zero capacity to the averages.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, SingularGeometryError, UndefinedMetricError
from .network import Network

LINEAR = "linear"
DB = "db"


@dataclass(frozen=True)
class RadioParams:
    """SNR scale ``K`` and path-loss exponent for the Shannon capacity.

    ``K = 111`` with ``convention="db"`` means a linear factor of ``10**11.1``.
    """

    k_factor: float
    convention: str = LINEAR
    alpha: float = 2.0

    def __post_init__(self):
        if self.convention not in (LINEAR, DB):
            raise InvalidParameterError(f"unknown K convention {self.convention!r}")
        if self.convention == LINEAR and self.k_factor < 0:
            raise InvalidParameterError("linear K must be >= 0")
        if self.alpha <= 0:
            raise InvalidParameterError("alpha must be > 0")

    @property
    def k_linear(self) -> float:
        if self.convention == DB:
            return 10.0 ** (self.k_factor / 10.0)
        return float(self.k_factor)


def _strength_alpha(network: Network, alpha):
    if alpha is not None:
        return alpha
    return network.config.alpha if network.config is not None else 1.0


def _check_distances(network: Network):
    if network.edge_dist.size and network.edge_dist.min() <= 0.0:
        raise SingularGeometryError("a user coincides with a tower (distance 0)")


def link_strengths(network: Network, w: float, alpha: Optional[float] = None) -> np.ndarray:
    """Per-edge summand ``ln(w C / (D R^alpha))``, aligned with ``network.edge_*``."""
    _check_distances(network)
    a = _strength_alpha(network, alpha)
    t = network.edge_tower
    return (math.log(w) + np.log(network.tower_count[t]) - np.log(network.tower_degree[t])
            - a * np.log(network.edge_dist))


def user_strengths(network: Network, w: float, alpha: Optional[float] = None) -> np.ndarray:
    """Strength of every user (zero when disconnected)."""
    return np.bincount(network.edge_user, weights=link_strengths(network, w, alpha),
                       minlength=network.n_users)


def user_strength(i: int, network: Network, w: float, alpha: Optional[float] = None) -> float:
    lo, hi = np.searchsorted(network.edge_user, [i, i + 1])
    if lo == hi:
        return 0.0
    t = network.edge_tower[lo:hi]
    r = network.edge_dist[lo:hi]
    if (r <= 0).any():
        raise SingularGeometryError(f"user {i} coincides with a tower")
    a = _strength_alpha(network, alpha)
    return float(np.sum(np.log(w * network.tower_count[t] / (network.tower_degree[t] * r ** a))))


def link_capacities(network: Network, w: float, radio: RadioParams) -> np.ndarray:
    """Shannon capacity ``(w C / D) ln(1 + K R^-alpha)`` of every edge."""
    _check_distances(network)
    t = network.edge_tower
    share = w * network.tower_count[t] / network.tower_degree[t]
    return share * np.log1p(radio.k_linear * network.edge_dist ** (-radio.alpha))


def channel_capacity(edge: int, network: Network, w: float, radio: RadioParams) -> float:
    r = network.edge_dist[edge]
    if r <= 0:
        raise SingularGeometryError("a user coincides with a tower (distance 0)")
    t = network.edge_tower[edge]
    return float(w * network.tower_count[t] / network.tower_degree[t]
                 * math.log1p(radio.k_linear * r ** (-radio.alpha)))


def coverage_fraction(network: Network) -> float:
    if network.n_users == 0:
        raise UndefinedMetricError("coverage is undefined without users")
    return float(np.count_nonzero(network.user_degree) / network.n_users)


# One CSV row per summary; per-operator strengths follow as strength_type_<k>.
CSV_COLUMNS = ["n_users", "n_towers", "mean_strength", "mean_capacity", "coverage_fraction",
               "mean_user_degree", "mean_tower_degree"]


@dataclass(frozen=True)
class MetricsSummary:
    mean_strength_per_user: float
    mean_capacity_per_user: float
    coverage_fraction: float
    mean_user_degree: float
    mean_tower_degree: float
    n_users: int
    n_towers: int
    mean_strength_by_type: dict = field(default_factory=dict)

    def to_row(self) -> dict:
        row = {
            "n_users": self.n_users,
            "n_towers": self.n_towers,
            "mean_strength": self.mean_strength_per_user,
            "mean_capacity": self.mean_capacity_per_user,
            "coverage_fraction": self.coverage_fraction,
            "mean_user_degree": self.mean_user_degree,
            "mean_tower_degree": self.mean_tower_degree,
        }
        for k in sorted(self.mean_strength_by_type):
            row[f"strength_type_{k}"] = self.mean_strength_by_type[k]
        return row

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(network: Network, w: float, radio: Optional[RadioParams] = None,
              alpha: Optional[float] = None) -> MetricsSummary:
    """Aggregate strength, capacity, coverage and degrees over all users."""
    if network.n_users == 0:
        raise UndefinedMetricError("cannot summarise a network without users")
    s = user_strengths(network, w, alpha)
    if radio is not None:
        cap = np.bincount(network.edge_user, weights=link_capacities(network, w, radio),
                          minlength=network.n_users).mean()
    else:
        cap = math.nan
    by_type = {}
    ops = network.users.operator
    n_ops = network.towers.owners.shape[1]
    for k in range(1, n_ops + 1):
        mask = ops == k
        by_type[k] = float(s[mask].mean()) if mask.any() else math.nan
    return MetricsSummary(
        mean_strength_per_user=float(s.mean()),
        mean_capacity_per_user=float(cap),
        coverage_fraction=coverage_fraction(network),
        mean_user_degree=float(network.user_degree.mean()),
        mean_tower_degree=float(network.tower_degree.mean()) if network.n_towers else 0.0,
        n_users=network.n_users,
        n_towers=network.n_towers,
        mean_strength_by_type=by_type,
    )
