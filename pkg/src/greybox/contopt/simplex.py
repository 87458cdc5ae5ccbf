"""Initial-simplex construction rules and conditioning diagnostics.

Common library implementations build the initial simplex from the starting
point with fixed heuristics.  Two of those heuristics are reproduced here
literally, pitfalls included, so their effect can be measured:

* ``pfeffer``: point i perturbs coordinate i-1 to 1.05 times its value, or
  to 0.00025 when that coordinate is exactly zero (the rule used by
  fminsearch-style implementations).  Starting near the origin yields a tiny,
  ill-conditioned simplex.
* ``nash_optim``: point i offsets coordinate i-1 by 0.1 times the largest
  absolute starting coordinate.  Degenerates only when the whole starting
  point is (close to) zero, in which case all points coincide; the simplex is
  still constructed and flagged by :func:`simplex_quality`.
* ``region_of_interest``: point i offsets coordinate i-1 by a caller-chosen
  step h, the behavior libraries should expose; h = 0.25 on a normalized
  domain is a sound default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class DimensionZero(ValueError):
    """Simplex construction needs at least one dimension."""


class InitRuleKind(str, Enum):
    PFEFFER = "pfeffer"
    NASH_OPTIM = "nash_optim"
    REGION_OF_INTEREST = "region_of_interest"


@dataclass(frozen=True)
class InitRule:
    kind: InitRuleKind
    h: float | None = None

    def __post_init__(self):
        if self.kind is InitRuleKind.REGION_OF_INTEREST:
            if self.h is None or not self.h > 0:
                raise ValueError("region-of-interest rule needs a step h > 0")
        elif self.h is not None:
            raise ValueError(f"rule {self.kind.value} takes no step parameter")

    @classmethod
    def pfeffer(cls) -> "InitRule":
        return cls(InitRuleKind.PFEFFER)

    @classmethod
    def nash_optim(cls) -> "InitRule":
        return cls(InitRuleKind.NASH_OPTIM)

    @classmethod
    def region_of_interest(cls, h: float) -> "InitRule":
        return cls(InitRuleKind.REGION_OF_INTEREST, float(h))

    @property
    def label(self) -> str:
        if self.kind is InitRuleKind.REGION_OF_INTEREST:
            return f"roi(h={self.h!r})"
        return self.kind.value


@dataclass(frozen=True, eq=False)
class Simplex:
    """n+1 points in R^n in construction order; points[0] is the start."""

    points: np.ndarray
    provenance: InitRule | None = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[0] != points.shape[1] + 1:
            raise ValueError("a simplex in R^n has exactly n+1 points")
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return self.points.shape[1]


def build_simplex(rule: InitRule, x1) -> Simplex:
    """Construct the initial simplex for a starting point under a rule.

    Parameters
    ----------
    rule : InitRule
        Construction rule; see the module docstring for the three variants.
    x1 : array_like
        Starting point, kept verbatim as the first simplex point.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    n = x1.size
    if n == 0:
        raise DimensionZero("starting point must have at least one coordinate")
    points = np.tile(x1, (n + 1, 1))
    if rule.kind is InitRuleKind.PFEFFER:
        for i in range(n):
            if x1[i] != 0.0:
                points[i + 1, i] = 1.05 * x1[i]
            else:
                points[i + 1, i] = 0.00025
    elif rule.kind is InitRuleKind.NASH_OPTIM:
        step = 0.1 * np.max(np.abs(x1))
        for i in range(n):
            points[i + 1, i] = x1[i] + step
    else:
        for i in range(n):
            points[i + 1, i] = x1[i] + rule.h
    return Simplex(points=points, provenance=rule)


@dataclass(frozen=True)
class SimplexQuality:
    diameter: float
    min_edge: float
    max_edge: float
    edge_ratio: float
    volume: float
    degenerate: bool


def simplex_quality(s: Simplex) -> SimplexQuality:
    """Conditioning diagnostics for a simplex.

    Edges are measured from points[0]; the volume is |det| of the edge
    matrix over n factorial.  A simplex is degenerate when its volume is zero
    or its edge lengths differ by more than six orders of magnitude.
    """
    pts = s.points
    n = s.n
    edges = pts[1:] - pts[0]
    edge_lengths = np.linalg.norm(edges, axis=1)
    min_edge = float(edge_lengths.min())
    max_edge = float(edge_lengths.max())
    edge_ratio = math.inf if min_edge == 0.0 else max_edge / min_edge
    volume = float(abs(np.linalg.det(edges)) / math.factorial(n))
    diffs = pts[:, None, :] - pts[None, :, :]
    diameter = float(np.sqrt((diffs ** 2).sum(axis=2)).max())
    degenerate = volume == 0.0 or edge_ratio > 1e6
    return SimplexQuality(
        diameter=diameter,
        min_edge=min_edge,
        max_edge=max_edge,
        edge_ratio=edge_ratio,
        volume=volume,
        degenerate=degenerate,
    )
