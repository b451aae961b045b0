"""Closed-form thresholds, bounds and the nu(0) calculator.

All logarithms are natural.  The regular-tree criteria take the degree d;
the Galton-Watson criteria take a ``DegreeDist``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .model import Estimate, ModelParams
from .rng import CounterRNG, derive_key, replicate_seed
from .trees import DegreeDist, Tree

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
THETA_RTOL = 1e-10
THETA_BAR_ATOL = 1e-8


class SingularBaseError(ValueError):
    """mu is not below every degree, so some base (j - mu) / mu is not positive."""


def _check_d(d: int) -> None:
    if int(d) != d or d < 3:
        raise ValueError(f"degree must be an integer >= 3, got {d}")


def beta(d: int) -> float:
    """Probability that two rate-1 walks at distance two on the d-regular tree never meet."""
    _check_d(d)
    return 1.0 - (d - 1) ** -2


def pair_hit_prob(d: int, x: int, *, exact: bool = False) -> float | Fraction:
    """Probability that two walks at distance x on the d-regular tree ever meet: (d-1)^-x."""
    _check_d(d)
    if x < 0:
        raise ValueError("distance must be non-negative")
    h = Fraction(1, (d - 1) ** x)
    return h if exact else float(h)


def survival_margin(params) -> float:
    """gamma = sum_{k>=2} (k-1) p_k - p_0; positive means the zealots survive."""
    return ModelParams.coerce(params).gamma


def extinction_margin(d: int, params) -> float:
    """d beta sum_{k>=2} (k-1) p_k - p_0; negative means the COBRA dies out on the d-regular tree."""
    params = ModelParams.coerce(params)
    growth = sum((k - 1) * v for k, v in enumerate(params.p) if k >= 2)
    return d * beta(d) * growth - params.p0


def local_dieout_bound(d: int, p0: float) -> float:
    """Local die-out holds for mu below (d (1 - p_0) + p_0) / (2 sqrt(d - 1))."""
    _check_d(d)
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must be a probability")
    return (d * (1.0 - p0) + p0) / (2.0 * math.sqrt(d - 1))


def local_survival_bound(d: int) -> float:
    """With p_0 = 0, local survival holds for mu above d / (1 + sqrt(d - 1))."""
    _check_d(d)
    return d / (1.0 + math.sqrt(d - 1))


def gw_local_dieout_bound(M: int) -> float:
    """With p_0 = 0, mu below M / (2 sqrt(M - 1)) forces local die-out on trees of maximal degree M."""
    return local_dieout_bound(M, 0.0)


def loop_count_exact(d: int, n: int) -> int:
    """Number of closed walks of length 2n from a vertex of the d-regular tree."""
    _check_d(d)
    if n < 1:
        raise ValueError("n must be a positive integer")
    counts = [1]
    for step in range(2 * n):
        # distances beyond the remaining steps cannot return
        reach = min(step + 1, 2 * n - step - 1)
        new = [0] * (reach + 1)
        for x, c in enumerate(counts):
            if not c:
                continue
            if x == 0:
                if reach >= 1:
                    new[1] += d * c
                continue
            if x + 1 <= reach:
                new[x + 1] += (d - 1) * c
            if x - 1 <= reach:
                new[x - 1] += c
        counts = new
    return counts[0]


# -- nu(0) on Galton-Watson trees ------------------------------------------


def _terms(dist: DegreeDist, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients q_j (j - 1) and log-bases log((j - mu) / mu)."""
    if not mu > 0:
        raise SingularBaseError(f"mu must be positive, got {mu}")
    if mu >= dist.min_degree:
        raise SingularBaseError(f"mu = {mu} is not below the smallest degree {dist.min_degree}")
    js = np.array(dist.support, dtype=np.float64)
    qs = np.array([dist.atoms[j] for j in dist.support], dtype=np.float64)
    return qs * (js - 1.0), np.log((js - mu) / mu)


def m_theta(dist: DegreeDist, mu: float, theta: float) -> float:
    """m(theta) = sum_j q_j (j - 1) ((j - mu) / mu)^theta."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    c, lr = _terms(dist, mu)
    return float(np.sum(c * np.exp(theta * lr)))


def m_prime(dist: DegreeDist, mu: float, theta: float) -> float:
    c, lr = _terms(dist, mu)
    return float(np.sum(c * lr * np.exp(theta * lr)))


def m_prime0(dist: DegreeDist, mu: float) -> float:
    """m'(0) = sum_j q_j (j - 1) log((j - mu) / mu)."""
    return m_prime(dist, mu, 0.0)


def golden_section(diff, lo: float, hi: float, rtol: float = THETA_RTOL) -> float:
    """Minimizer of a unimodal function on [lo, hi].

    ``diff(a, b)`` must return f(a) - f(b); passing a difference rather than
    f keeps comparisons accurate when f is nearly flat at the minimum.
    """
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    e = a + GOLDEN * (b - a)
    while b - a > rtol * max(1.0, abs(a) + abs(b)) / 2:
        if diff(c, e) < 0:
            b, e = e, c
            c = b - GOLDEN * (b - a)
        else:
            a, c = c, e
            e = a + GOLDEN * (b - a)
    return (a + b) / 2


def theta_bar(dist: DegreeDist, mu: float) -> float | None:
    """Closed-form stationary point of m for degrees {3, 4} and 3/2 < mu < 2.

    theta_bar = (log A - log B) / log((4 - mu) / (3 - mu)) with
    A = 2 q_3 log(mu / (3 - mu)) and B = 3 q_4 log((4 - mu) / mu).
    Returns None when the support is not {3, 4} or A, B are not positive.
    """
    if not set(dist.support) <= {3, 4}:
        return None
    q3, q4 = dist.atoms.get(3, 0.0), dist.atoms.get(4, 0.0)
    if not 0 < mu < 3:
        raise SingularBaseError(f"mu = {mu} is not below the smallest degree 3")
    A = 2 * q3 * math.log(mu / (3 - mu))
    B = 3 * q4 * math.log((4 - mu) / mu)
    if not (A > 0 and B > 0):
        return None
    return (math.log(A) - math.log(B)) / math.log((4 - mu) / (3 - mu))


@dataclass(frozen=True)
class NuReport:
    mu: float
    m0: float
    mprime0: float
    theta_bar: float | None
    nu0: float
    minimizer: float
    local_survival: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        if math.isinf(self.minimizer):
            out["minimizer"] = "inf"
        return out


def nu0(dist: DegreeDist, mu: float) -> NuReport:
    """nu(0) = min over theta >= 0 of m(theta); local survival is certified when it is below 1.

    m is a positive combination of exponentials, hence convex.  If every
    base is at most 1, m is non-increasing and the infimum is the limit
    sum over bases equal to 1; the minimizer is then reported as inf.
    """
    c, lr = _terms(dist, mu)
    m0 = float(c.sum())
    mp0 = float(np.sum(c * lr))
    tb = theta_bar(dist, mu)

    def diff(a, b):
        return float(np.sum(c * np.exp(b * lr) * np.expm1((a - b) * lr)))

    if mp0 >= 0:
        theta, value = 0.0, m0
    elif np.all(lr <= 0):
        theta, value = math.inf, float(c[lr == 0].sum())
    else:
        hi = 1.0
        while float(np.sum(c * lr * np.exp(hi * lr))) <= 0:
            hi *= 2.0
        theta = golden_section(diff, 0.0, hi)
        value = float(np.sum(c * np.exp(theta * lr)))
        if tb is not None and abs(tb - theta) > THETA_BAR_ATOL * max(1.0, tb):
            raise ArithmeticError(f"closed-form theta {tb!r} and search {theta!r} disagree")
    return NuReport(float(mu), m0, mp0, tb, value, theta, value < 1)


def p_crit(mu: float) -> float:
    """q_3 at which m'(0) changes sign on {3, 4} trees; for smaller q_3, m'(0) > 0."""
    if not 1.5 < mu <= 2.0:
        raise ValueError("p_crit needs 3/2 < mu <= 2")
    a = 3 * math.log((4 - mu) / mu)
    return a / (a + 2 * math.log(mu / (3 - mu)))


def harmonic_increments(tree: Tree, mu: float, path: Sequence[int]) -> list[float]:
    """Log-increments log[phi(x_n) - phi(x_{n-1})] of the tagged-walk harmonic function along ``path``.

    The first increment is normalized to phi(x_1) - phi(x_0) = 1, so entry
    n - 1 equals sum_{k=1}^{n-1} log(mu / (d(x_k) - mu)).
    """
    path = [int(v) for v in path]
    if not path or path[0] != tree.root:
        raise ValueError("path must start at the root")
    for a, b in zip(path, path[1:]):
        if b not in tree.neighbors(a):
            raise ValueError(f"vertices {a} and {b} are not adjacent")
    out, acc = [], 0.0
    for n in range(1, len(path)):
        if n > 1:
            d = int(tree.degree[path[n - 1]])
            if mu <= 0 or mu >= d:
                raise SingularBaseError(f"mu = {mu} is not inside (0, {d})")
            acc += math.log(mu / (d - mu))
        out.append(acc)
    return out


# -- perturbation margin -----------------------------------------------------


@dataclass(frozen=True)
class PerturbationInputs:
    """Degree fractions pi_m, mean coalescing survivors mu_{m,k}, and the pick law."""

    pi: Mapping[int, float]
    mu_mk: Mapping[tuple[int, int], float]
    p: ModelParams

    def __post_init__(self):
        object.__setattr__(self, "p", ModelParams.coerce(self.p))
        if abs(sum(self.pi.values()) - 1.0) > 1e-9:
            raise ValueError("degree fractions must sum to 1")
        for (m, k), v in self.mu_mk.items():
            if not 1.0 - 1e-12 <= v <= k + 1e-12:
                raise ValueError(f"mu_({m},{k}) = {v} outside [1, {k}]")
        for m, w in self.pi.items():
            for k in range(1, len(self.p.p)):
                if w > 0 and self.p[k] > 0 and (m, k) not in self.mu_mk and k != 1:
                    raise ValueError(f"missing mu_({m},{k})")


def perturbation_margin(inputs: PerturbationInputs) -> float:
    """sum_m pi_m sum_k k p_k (mu_{m,k} - 1) - p_0."""
    p = inputs.p
    total = 0.0
    for m, w in inputs.pi.items():
        for k in range(1, len(p.p)):
            if p[k] > 0:
                total += w * k * p[k] * (inputs.mu_mk.get((m, k), 1.0) - 1.0)
    return total - p.p0


class _LazyGW:
    """Galton-Watson tree around a degree-m center, grown as walkers explore it."""

    def __init__(self, dist: DegreeDist, m: int, rng: CounterRNG):
        self.dist, self.rng = dist, rng
        self.degree = [m]
        self.nbrs: list[list[int] | None] = [None]
        self.parent = [-1]

    def neighbors(self, v: int) -> list[int]:
        nb = self.nbrs[v]
        if nb is None:
            nb = [] if self.parent[v] < 0 else [self.parent[v]]
            for _ in range(self.degree[v] - len(nb)):
                c = len(self.degree)
                self.degree.append(self.dist.sample(self.rng))
                self.nbrs.append(None)
                self.parent.append(v)
                nb.append(c)
            self.nbrs[v] = nb
        return nb


def estimate_mu_mk(dist: DegreeDist, m: int, k: int, horizon: float, replicas: int, seed: int,
                   *, start: Sequence[int] | None = None) -> Estimate:
    """Mean number of survivors among k coalescing rate-1 walks started on distinct neighbors of a degree-m vertex.

    The tree around the center is a Galton-Watson tree sampled afresh for
    each replica.  A finite horizon misses late coalescences, so the
    estimate is biased upward.  ``start`` fixes the neighbor indices
    instead of drawing them at random.
    """
    if k < 1 or k > m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    if replicas < 1:
        raise ValueError("replicas must be at least 1")
    if start is not None and (len(set(start)) != k or not all(0 <= i < m for i in start)):
        raise ValueError("start must list k distinct neighbor indices")
    values = []
    for r in range(replicas):
        rng = CounterRNG(derive_key(replicate_seed(seed, r), 0x6D6B))
        tree = _LazyGW(dist, m, rng)
        center = tree.neighbors(0)
        idx = list(start) if start is not None else rng.sample_distinct(m, k)
        walkers = [center[i] for i in idx]
        occupied = set(walkers)
        t = 0.0
        while len(walkers) > 1:
            t += rng.exponential(len(walkers))
            if t > horizon:
                break
            i = rng.below(len(walkers))
            nb = tree.neighbors(walkers[i])
            y = nb[rng.below(len(nb))]
            occupied.discard(walkers[i])
            if y in occupied:
                walkers[i] = walkers[-1]
                walkers.pop()
            else:
                walkers[i] = y
                occupied.add(y)
        values.append(float(len(walkers)))
    return Estimate.of_mean(values, seed)


# -- classification ------------------------------------------------------------


SURVIVES, DIES = "survives", "dies"
DIES_LOCALLY, SURVIVES_LOCALLY = "dies-locally", "survives-locally"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Criterion:
    """One sufficient condition: its margin, status and the regime it certifies when satisfied."""

    margin: float | None
    status: str  # satisfied, violated or inapplicable
    regime: str

    def to_dict(self) -> dict:
        return {"margin": self.margin, "status": self.status,
                "regime": self.regime if self.status == "satisfied" else UNDETERMINED}


def _criterion(margin: float | None, regime: str, applicable: bool = True) -> Criterion:
    if not applicable or margin is None:
        return Criterion(margin, "inapplicable", regime)
    return Criterion(margin, "satisfied" if margin > 0 else "violated", regime)


@dataclass(frozen=True)
class ThresholdReport:
    """Every applicable criterion, each reported separately.

    Margins are signed so that a positive margin means the criterion holds.
    ``global_regime`` and ``local_regime`` only report what some criterion
    certifies; anything else stays undetermined.
    """

    gamma: float
    extinction_margin: float | None
    local_dieout_bound: float | None
    local_survival_bound: float | None
    local_interval: tuple[float, float] | None
    mu: float
    criteria: dict[str, Criterion] = field(default_factory=dict)
    nu: NuReport | None = None

    def _regime(self, labels: tuple[str, str]) -> str:
        hits = {c.regime for c in self.criteria.values() if c.status == "satisfied" and c.regime in labels}
        return hits.pop() if len(hits) == 1 else UNDETERMINED

    @property
    def global_regime(self) -> str:
        return self._regime((SURVIVES, DIES))

    @property
    def local_regime(self) -> str:
        return self._regime((SURVIVES_LOCALLY, DIES_LOCALLY))

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "extinction_margin": self.extinction_margin,
            "local_dieout_bound": self.local_dieout_bound,
            "local_survival_bound": self.local_survival_bound,
            "local_interval": list(self.local_interval) if self.local_interval else None,
            "mu": self.mu,
            "global_regime": self.global_regime,
            "local_regime": self.local_regime,
            "criteria": {k: c.to_dict() for k, c in self.criteria.items()},
            "nu": self.nu.to_dict() if self.nu else None,
        }


def classify(tree: int | DegreeDist, params) -> ThresholdReport:
    """Evaluate the survival criteria for a d-regular tree (int) or a Galton-Watson tree (DegreeDist)."""
    params = ModelParams.coerce(params)
    mu, p0, g = params.mu, params.p0, params.gamma
    no_death = p0 == 0.0
    crit = {"global_survival": _criterion(g, SURVIVES)}
    if isinstance(tree, DegreeDist):
        params.check_against(tree.min_degree)
        M = tree.max_degree
        lo = gw_local_dieout_bound(M)
        crit["gw_local_dieout"] = _criterion(lo - mu, DIES_LOCALLY, no_death)
        nu = None
        if no_death and mu < tree.min_degree:
            nu = nu0(tree, mu)
            crit["nu0_local_survival"] = _criterion(1.0 - nu.nu0, SURVIVES_LOCALLY)
        else:
            crit["nu0_local_survival"] = _criterion(None, SURVIVES_LOCALLY, False)
        return ThresholdReport(g, None, lo, None, None, mu, crit, nu)

    d = int(tree)
    _check_d(d)
    params.check_against(d)
    em = extinction_margin(d, params)
    lo, hi = local_dieout_bound(d, p0), local_survival_bound(d)
    crit["cobra_extinction"] = _criterion(-em, DIES)
    crit["local_dieout"] = _criterion(lo - mu, DIES_LOCALLY)
    crit["tagged_recurrence"] = _criterion(mu - d / 2, SURVIVES_LOCALLY, no_death)
    crit["local_survival"] = _criterion(mu - hi, SURVIVES_LOCALLY, no_death)
    interval = (local_dieout_bound(d, 0.0), hi)
    return ThresholdReport(g, em, lo, hi, interval, mu, crit)
