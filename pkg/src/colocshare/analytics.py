"""Closed-form strength, optimal radius, sharing gains, thresholds and coverage.

Every quantity is in natural-log units.  ``E[ln C]`` (the mean log number of
co-located BSs per tower) is computed exactly from the Poisson-binomial law when
there are at most :data:`EXACT_MAX_OPERATORS` operators and from the
second-order Taylor expansion otherwise; results carry the method used.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from .errors import InvalidParameterError, NoBenefitError, OutOfRegimeWarning

EXACT_MAX_OPERATORS = 30
THRESHOLD_TOL = 1e-6

EXACT = "exact"
TAYLOR = "taylor"
CLOSED_N2 = "closed_n2"
AUTO = "auto"


class ElogC(NamedTuple):
    value: float
    method: str


class Bound(NamedTuple):
    """A threshold bound as printed, plus whether it is a usable probability."""

    value: float
    in_unit_interval: bool


@dataclass(frozen=True)
class AnalyticInputs:
    n_operators: int
    colocation_p: float
    betas: tuple
    lambda_bs: float
    lambda_u: float
    bandwidth_w: float

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        if len(betas) != self.n_operators - 1:
            raise InvalidParameterError("need one beta per operator beyond the first")
        if not 0.0 <= self.colocation_p <= 1.0:
            raise InvalidParameterError("colocation_p must lie in [0, 1]")
        object.__setattr__(self, "betas", betas)

    @classmethod
    def from_config(cls, cfg) -> "AnalyticInputs":
        return cls(cfg.n_operators, cfg.colocation_p, tuple(cfg.betas), cfg.lambda_bs,
                   cfg.lambda_u, cfg.bandwidth_w)

    @classmethod
    def equal(cls, n_operators: int, p: float, lambda_bs=1e-6, lambda_u=1e-3,
              bandwidth_w=1e7) -> "AnalyticInputs":
        """N operators of identical density."""
        return cls(n_operators, p, (1.0,) * (n_operators - 1), lambda_bs, lambda_u, bandwidth_w)

    @property
    def lambda_tower(self) -> float:
        return (1.0 + (1.0 - self.colocation_p) * sum(self.betas)) * self.lambda_bs

    @property
    def lambda_user(self) -> float:
        return (1.0 + sum(self.betas)) * self.lambda_u

    @property
    def equal_densities(self) -> bool:
        return all(b == 1.0 for b in self.betas)

    def replace(self, **changes) -> "AnalyticInputs":
        d = asdict(self)
        d.update(changes)
        if "n_operators" in changes and "betas" not in changes:
            d["betas"] = (1.0,) * (d["n_operators"] - 1)
        return AnalyticInputs(**d)


def poisson_binomial_pmf(probs: Sequence[float]) -> np.ndarray:
    """pmf of a sum of independent Bernoulli(probs[i]) variables, by convolution."""
    pmf = np.array([1.0])
    for q in probs:
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] = pmf * (1.0 - q)
        nxt[1:] += pmf * q
        pmf = nxt
    return pmf


def _betas(n_operators, betas):
    if betas is None:
        return (1.0,) * (n_operators - 1)
    if len(betas) != n_operators - 1:
        raise InvalidParameterError("need one beta per operator beyond the first")
    return tuple(betas)


def standalone_tower_share(p: float, betas: Sequence[float]) -> float:
    """Probability that a typical tower is a standalone (non type-1) site."""
    extra = (1.0 - p) * float(sum(betas))
    return extra / (1.0 + extra)


def e_log_c_exact(n_operators: int, p: float, betas: Optional[Sequence[float]] = None) -> float:
    """Exact ``E[ln C]``: standalone sites have C = 1, type-1 sites 1 + PoissonBinomial(p*beta)."""
    if n_operators > EXACT_MAX_OPERATORS:
        raise InvalidParameterError(
            f"exact E[ln C] is limited to {EXACT_MAX_OPERATORS} operators; use e_log_c_taylor")
    betas = _betas(n_operators, betas)
    pmf = poisson_binomial_pmf([p * b for b in betas])
    s = standalone_tower_share(p, betas)
    return float((1.0 - s) * np.dot(np.log1p(np.arange(pmf.size)), pmf))


def e_log_c_taylor(n_operators: int, p: float) -> float:
    """Second-order expansion of ``E[ln C]`` for equal-density operators."""
    if n_operators < 2:
        raise InvalidParameterError("the expansion needs at least two operators")
    m = n_operators - 1
    mean = 1.0 + p * m
    return (math.log(mean) - p * (1.0 - p) * m / mean ** 2) / (1.0 + (1.0 - p) * m)


def e_log_c_closed_n2(beta2: float, p: float) -> float:
    return beta2 * p * math.log(2.0) / (1.0 + (1.0 - p) * beta2)


def e_log_c(inputs: AnalyticInputs, method: str = AUTO) -> ElogC:
    """``E[ln C]`` by the requested method; ``auto`` prefers the exact sum."""
    n, p = inputs.n_operators, inputs.colocation_p
    if n == 1:
        return ElogC(0.0, EXACT)
    if method == AUTO:
        method = EXACT if n <= EXACT_MAX_OPERATORS else TAYLOR
    if method == EXACT:
        return ElogC(e_log_c_exact(n, p, inputs.betas), EXACT)
    if method == TAYLOR:
        if not inputs.equal_densities:
            raise InvalidParameterError("the Taylor expansion assumes all betas equal 1")
        return ElogC(e_log_c_taylor(n, p), TAYLOR)
    if method == CLOSED_N2:
        if n != 2:
            raise InvalidParameterError("closed form only applies to two operators")
        return ElogC(e_log_c_closed_n2(inputs.betas[0], p), CLOSED_N2)
    raise InvalidParameterError(f"unknown method {method!r}")


def _regime_check(mean_tower_degree):
    if np.any(np.asarray(mean_tower_degree) <= 1.0):
        warnings.warn("mean tower degree lambda_U*pi*r^2 <= 1; large-degree approximation "
                      "does not hold", OutOfRegimeWarning, stacklevel=3)


def e_log_sb_degree(lambda_user_eff: float, r: float) -> float:
    """Mean log of the size-biased tower degree (a Poisson(mu) degree seen from an edge)."""
    mu = lambda_user_eff * math.pi * r * r
    _regime_check(mu)
    return math.log1p(mu) - mu / (2.0 * (1.0 + mu) ** 2)


def e_log_distance(r: float) -> float:
    """Mean log distance from a user to a uniform point of its disk of radius r."""
    return math.log(r) - 0.5


def expected_strength(r, inputs: AnalyticInputs, method: str = AUTO):
    """Approximate mean user strength at connection radius ``r`` (scalar or array)."""
    r = np.asarray(r, dtype=np.float64)
    lt, lu = inputs.lambda_tower, inputs.lambda_user
    _regime_check(lu * math.pi * r ** 2)
    elc = e_log_c(inputs, method).value
    out = lt * math.pi * r ** 2 * (
        math.log(inputs.bandwidth_w) + elc - np.log(lu * math.pi * r ** 3) + 0.5)
    return float(out) if out.ndim == 0 else out


def optimal_radius(inputs: AnalyticInputs, method: str = AUTO) -> float:
    elc = e_log_c(inputs, method).value
    return (inputs.bandwidth_w / (inputs.lambda_user * math.pi) * math.exp(elc - 1.0)) ** (1 / 3)


def optimal_strength(inputs: AnalyticInputs, method: str = AUTO) -> float:
    elc = e_log_c(inputs, method).value
    w, lt, lu = inputs.bandwidth_w, inputs.lambda_tower, inputs.lambda_user
    return 1.5 * math.exp(-2 / 3) * lt * (math.exp(2 * elc) * math.pi * w * w / lu ** 2) ** (1 / 3)


def standalone_inputs(inputs: AnalyticInputs, k: int) -> AnalyticInputs:
    """Operator ``k`` running its own network (k = 1 is the largest operator)."""
    beta = 1.0 if k == 1 else inputs.betas[k - 2]
    return AnalyticInputs(1, 0.0, (), beta * inputs.lambda_bs, beta * inputs.lambda_u,
                          inputs.bandwidth_w)


def gain_for_operator(inputs: AnalyticInputs, k: int = 1, method: str = AUTO) -> float:
    """Shared optimal strength over operator ``k``'s standalone optimal strength."""
    return optimal_strength(inputs, method) / optimal_strength(standalone_inputs(inputs, k))


def gain_type1(beta2: float, p: float) -> float:
    return (1.0 + (1.0 - p) * beta2) * (
        2.0 ** (2.0 * beta2 * p / (1.0 + beta2 * (1.0 - p))) / (1.0 + beta2) ** 2) ** (1 / 3)


def gain_type2(beta2: float, p: float) -> float:
    return beta2 ** (-1 / 3) * gain_type1(beta2, p)


def gain_N(n_operators: int, p: float) -> float:
    """Sharing gain of N equal operators, in closed form.

    The closed form carries ``exp(-2/3 E[ln C])``.  The ratio of optimal
    strengths (:func:`gain_for_operator`) carries ``exp(+2/3 E[ln C])``; the two
    coincide at p = 0 and share the large-N limit, but differ for moderate N and p.
    """
    if n_operators == 1:
        return 1.0
    elc = e_log_c(AnalyticInputs.equal(n_operators, p)).value
    # (1 + (1-p)(N-1)) / N^(2/3), arranged so that p = 0 gives N^(1/3) without round-off
    towers_per_user = (1.0 + (1.0 - p) * (n_operators - 1)) / n_operators
    return n_operators ** (1 / 3) * towers_per_user * math.exp(-2 / 3 * elc)


def threshold_bound_n2(beta2: float) -> Bound:
    """Two-operator sufficient bound on p, evaluated exactly as printed."""
    v = 1.0 - 3.0 * (1.0 + (1.0 + beta2) ** (2 / 3) * 4.0 ** (-beta2 / 3)) / (
        beta2 * ((1.0 + beta2) * math.log(4.0) - 3.0))
    return Bound(v, 0.0 <= v <= 1.0)


def threshold_bound_N(n_operators: int) -> Bound:
    """Bound on p from dropping the E[ln C] factor of the N-operator gain."""
    if n_operators < 2:
        raise InvalidParameterError("the bound needs at least two operators")
    n = n_operators
    v = (n - n ** (2 / 3)) / (n - 1)
    return Bound(v, 0.0 <= v <= 1.0)


def threshold_numeric(gain_fn: Callable[[float], float], tol: float = THRESHOLD_TOL,
                      lo: float = 0.0, hi: float = 1.0) -> Optional[float]:
    """Largest p in [lo, hi] with gain_fn(p) >= 1, or None when the gain never drops below 1.

    Assumes the gain crosses 1 at most once on the interval.
    """
    g_lo = gain_fn(lo)
    if g_lo < 1.0:
        raise NoBenefitError(f"gain is {g_lo:.6g} < 1 already at p = {lo}")
    if gain_fn(hi) >= 1.0:
        return None
    return bisect(lambda p: gain_fn(p) - 1.0, lo, hi, xtol=tol)


def coverage_min_radius(theta: float, lambda_tower_eff: float) -> float:
    """Smallest radius covering a fraction ``theta`` of users; inf for theta = 1."""
    if not 0.0 <= theta <= 1.0:
        raise InvalidParameterError(f"theta must lie in [0, 1], got {theta}")
    if theta == 1.0:
        return math.inf
    return math.sqrt(-math.log1p(-theta) / (math.pi * lambda_tower_eff))


def required_bandwidth(theta: float, inputs: AnalyticInputs, method: str = AUTO) -> float:
    """Bandwidth per BS at which the optimal radius just reaches the coverage radius."""
    if not 0.0 <= theta <= 1.0:
        raise InvalidParameterError(f"theta must lie in [0, 1], got {theta}")
    if theta == 1.0:
        return math.inf
    elc = e_log_c(inputs, method).value
    return ((-math.log1p(-theta) / (math.pi * inputs.lambda_tower)) ** 1.5
            * inputs.lambda_user * math.pi / math.exp(elc - 1.0))


def coverage_probability(r, lambda_tower_eff: float):
    """Probability that a typical user has at least one tower within r."""
    return -np.expm1(-math.pi * lambda_tower_eff * np.asarray(r, dtype=np.float64) ** 2)


def scaling_limits(n_operators: int, p: float, inputs: AnalyticInputs) -> dict:
    """Large-N diagnostics for equal operators, using ``inputs`` for w and lambda_U."""
    eq = AnalyticInputs.equal(n_operators, p, inputs.lambda_bs, inputs.lambda_u,
                              inputs.bandwidth_w)
    cbrt_n = n_operators ** (1 / 3)
    r_limit = (inputs.bandwidth_w / (inputs.lambda_u * math.pi * math.e)) ** (1 / 3)
    scaled_r = cbrt_n * optimal_radius(eq)
    scaled_gain = gain_N(n_operators, p) / cbrt_n
    return {
        "n_operators": n_operators,
        "p": p,
        "scaled_r_opt": scaled_r,
        "r_limit": r_limit,
        "r_gap": scaled_r - r_limit,
        "scaled_gain": scaled_gain,
        "gain_limit": 1.0 - p,
        "gain_gap": scaled_gain - (1.0 - p),
    }


def p_star(inputs: AnalyticInputs, tol: float = THRESHOLD_TOL,
           form: str = "closed") -> Optional[float]:
    """Numeric co-location threshold at which operator 1 stops gaining from sharing.

    ``form="closed"`` bisects the closed-form gains (two-operator or N equal
    operators); ``form="ratio"`` bisects the ratio of optimal strengths directly.
    """
    if inputs.n_operators == 1:
        return None
    if form == "closed" and inputs.n_operators == 2:
        b = inputs.betas[0]
        return threshold_numeric(lambda p: gain_type1(b, p), tol)
    if form == "closed" and inputs.equal_densities:
        return threshold_numeric(lambda p: gain_N(inputs.n_operators, p), tol)
    return threshold_numeric(
        lambda p: gain_for_operator(inputs.replace(colocation_p=p), 1), tol)


REPORT_COLUMNS = ["N", "p", "betas", "e_log_c", "method", "r_opt", "s_opt", "g", "p_star",
                  "r_min", "w_req"]


@dataclass(frozen=True)
class AnalyticReport:
    inputs: AnalyticInputs
    e_log_c: float
    e_log_c_method: str
    r_opt: float
    s_opt: float
    gains: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inputs"]["betas"] = list(self.inputs.betas)
        return d

    def to_row(self) -> dict:
        g = self.gains.get("g_N", self.gains.get("g_type1", 1.0))
        return {
            "N": self.inputs.n_operators,
            "p": self.inputs.colocation_p,
            "betas": ";".join(repr(b) for b in self.inputs.betas),
            "e_log_c": self.e_log_c,
            "method": self.e_log_c_method,
            "r_opt": self.r_opt,
            "s_opt": self.s_opt,
            "g": g,
            "p_star": self.thresholds.get("p_star_numeric"),
            "r_min": self.coverage.get("r_min"),
            "w_req": self.coverage.get("w_required"),
        }


def analyze(inputs: AnalyticInputs, theta: float = 0.9, method: str = AUTO) -> AnalyticReport:
    """All closed-form quantities for one scenario, without simulation."""
    elc = e_log_c(inputs, method)
    n = inputs.n_operators
    gains = {"g_type1": 1.0}
    thresholds = {}
    if n > 1:
        gains = {f"g_type{k}": gain_for_operator(inputs, k, method) for k in range(1, n + 1)}
        if inputs.equal_densities:
            gains["g_N"] = gain_N(n, inputs.colocation_p)
        if n == 2:
            b = threshold_bound_n2(inputs.betas[0])
            thresholds["p_bound_n2"] = b.value
            thresholds["p_bound_n2_in_unit_interval"] = b.in_unit_interval
        if inputs.equal_densities:
            b = threshold_bound_N(n)
            thresholds["p_bound_N"] = b.value
            thresholds["p_bound_N_in_unit_interval"] = b.in_unit_interval
        for key, form in (("p_star_numeric", "closed"), ("p_star_ratio", "ratio")):
            try:
                thresholds[key] = p_star(inputs, form=form)
            except NoBenefitError:
                thresholds[key] = None
    return AnalyticReport(
        inputs=inputs,
        e_log_c=elc.value,
        e_log_c_method=elc.method,
        r_opt=optimal_radius(inputs, method),
        s_opt=optimal_strength(inputs, method),
        gains=gains,
        thresholds=thresholds,
        coverage={
            "theta": theta,
            "r_min": coverage_min_radius(theta, inputs.lambda_tower),
            "w_required": required_bandwidth(theta, inputs, method),
        },
    )
