"""Model parameters and Monte Carlo estimates shared by the simulators."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

_SUM_TOL = 1e-12
Z95 = 1.959963984540054


@dataclass(frozen=True)
class ModelParams:
    """Pick distribution p_0..p_K of the zealot voter model.

    At rate p_0 a 1 at x becomes 0; at rate d(x) p_k (k >= 1) the voter at x
    consults k distinct neighbors and becomes 1 iff one of them is 1.
    """

    p: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        while len(p) > 1 and p[-1] == 0.0:
            p = p[:-1]
        if any(v < 0 for v in p):
            raise ValueError(f"negative pick probability in {p}")
        if abs(sum(p) - 1.0) > _SUM_TOL:
            raise ValueError(f"pick probabilities sum to {sum(p)!r}, not 1")
        object.__setattr__(self, "p", p)

    @classmethod
    def from_mapping(cls, p: Mapping[int, float]) -> ModelParams:
        p = {int(k): float(v) for k, v in p.items()}
        if any(k < 0 for k in p):
            raise ValueError("pick sizes must be non-negative")
        out = [0.0] * (max(p) + 1)
        for k, v in p.items():
            out[k] = v
        return cls(tuple(out))

    @classmethod
    def coerce(cls, p) -> ModelParams:
        if isinstance(p, ModelParams):
            return p
        if isinstance(p, Mapping):
            return cls.from_mapping(p)
        return cls(tuple(p))

    def __getitem__(self, k: int) -> float:
        return self.p[k] if 0 <= k < len(self.p) else 0.0

    @property
    def p0(self) -> float:
        return self.p[0]

    @property
    def k_max(self) -> int:
        """Largest k with p_k > 0."""
        return len(self.p) - 1

    @property
    def mu(self) -> float:
        return sum(k * v for k, v in enumerate(self.p))

    @property
    def gamma(self) -> float:
        return sum((k - 1) * v for k, v in enumerate(self.p) if k >= 2) - self.p0

    def alpha(self, d: int) -> float:
        """Total event rate of a particle or voter at a degree-d site."""
        return d * (1.0 - self.p0) + self.p0

    def as_array(self, length: int | None = None) -> np.ndarray:
        n = len(self.p) if length is None else length
        out = np.zeros(n, dtype=np.float64)
        out[:len(self.p)] = self.p
        return out

    def to_dict(self) -> dict[str, float]:
        return {str(k): v for k, v in enumerate(self.p) if v}

    def check_against(self, d_min: int) -> None:
        if self.k_max > d_min:
            raise ValueError(f"p_{self.k_max} > 0 but the tree has a degree-{d_min} vertex")


@dataclass(frozen=True)
class Estimate:
    """Point estimate with a normal-approximation 95% half-width."""

    point: float
    half_width: float
    replicas: int
    seed: int
    boundary_fraction: float = 0.0

    @property
    def degenerate(self) -> bool:
        """A single replica carries no spread information."""
        return self.replicas < 2

    @property
    def truncation_dominated(self) -> bool:
        return self.boundary_fraction > 0.2

    def to_dict(self) -> dict:
        out = asdict(self)
        out["degenerate"] = self.degenerate
        return out

    @classmethod
    def of_proportion(cls, hits: int, replicas: int, seed: int, boundary: int = 0) -> Estimate:
        if replicas < 1:
            raise ValueError("replicas must be at least 1")
        p = hits / replicas
        hw = Z95 * math.sqrt(p * (1 - p) / replicas) if replicas > 1 else 0.0
        return cls(p, hw, replicas, seed, boundary / replicas)

    @classmethod
    def of_mean(cls, values: Sequence[float], seed: int, boundary: int = 0) -> Estimate:
        x = np.sort(np.asarray(values, dtype=np.float64))
        if x.size < 1:
            raise ValueError("replicas must be at least 1")
        hw = Z95 * float(x.std(ddof=1)) / math.sqrt(x.size) if x.size > 1 else 0.0
        return cls(float(x.mean()), hw, int(x.size), seed, boundary / x.size)
