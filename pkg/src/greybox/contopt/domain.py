"""Box domains and affine normalization to the unit hypercube.

Search-space size assumptions are baked into most optimizers' defaults;
mapping the region of interest to [0, 1]^n before optimizing removes that
mismatch at no cost.  The maps here are componentwise affine and carry their
source box so results can be mapped back.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np


class DomainWarning(UserWarning):
    """A point handed to forward() lies outside the source box."""


@dataclass(frozen=True, eq=False)
class BoxDomain:
    """Axis-aligned box given by finite lower/upper bound vectors."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper bounds must be vectors of equal length")
        if lower.size == 0:
            raise ValueError("domain must have at least one dimension")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise ValueError("domain bounds must be finite")
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    @classmethod
    def cube(cls, lower: float, upper: float, n: int) -> "BoxDomain":
        return cls(np.full(n, float(lower)), np.full(n, float(upper)))


@dataclass(frozen=True, eq=False)
class AffineNormalization:
    """Componentwise affine map from a box onto [0, 1]^n.

    forward(lower) is the zero vector and forward(upper) the all-ones
    vector; inverse undoes forward up to floating rounding (at most a few
    ulps of the box span per component).
    """

    domain: BoxDomain

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.domain.contains(x):
            warnings.warn(
                "point lies outside the source box; mapped value leaves [0, 1]^n",
                DomainWarning,
                stacklevel=2,
            )
        return (x - self.domain.lower) / self.domain.span

    def inverse(self, u) -> np.ndarray:
        # No containment check: optimizers legitimately step outside [0,1]^n.
        u = np.asarray(u, dtype=float)
        return self.domain.lower + u * self.domain.span


def normalization_map(domain: BoxDomain) -> AffineNormalization:
    return AffineNormalization(domain)


class EvalCounter:
    """Wraps an objective and counts calls; one wrapped call is one count."""

    def __init__(self, fn: Callable):
        self.fn = fn
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return float(self.fn(x))


def wrap_objective(f: Callable, mapping: AffineNormalization) -> Callable:
    """Express an objective on the unit hypercube.

    wrapped(u) == f(inverse(u)); each wrapped evaluation costs exactly one
    evaluation of f.
    """

    def wrapped(u):
        return f(mapping.inverse(u))

    wrapped.__name__ = f"normalized_{getattr(f, '__name__', 'objective')}"
    return wrapped
