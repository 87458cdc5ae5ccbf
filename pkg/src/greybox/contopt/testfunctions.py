"""Standard test functions with known optima for exercising the optimizer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True, eq=False)
class TestFunction:
    name: str
    dimension: int
    evaluate: Callable
    optimum: np.ndarray
    optimal_value: float

    def __post_init__(self):
        object.__setattr__(self, "optimum", np.asarray(self.optimum, dtype=float))
        value = float(self.evaluate(self.optimum))
        if abs(value - self.optimal_value) > 1e-12:
            raise ValueError(
                f"{self.name}: evaluate(optimum) = {value}, expected {self.optimal_value}"
            )

    def __call__(self, x):
        return self.evaluate(x)


def _fmt_coords(values) -> str:
    return "_".join(repr(float(v)) for v in values)


def sphere(n: int) -> TestFunction:
    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(x * x))

    return TestFunction("sphere", n, evaluate, np.zeros(n), 0.0)


def shifted_sphere(n: int, center, offset: float = 0.0) -> TestFunction:
    center = np.asarray(center, dtype=float)
    if center.size != n:
        raise ValueError("center must have one coordinate per dimension")

    def evaluate(x):
        d = np.asarray(x, dtype=float) - center
        return float(np.sum(d * d) + offset)

    return TestFunction(f"sphere_at_{_fmt_coords(center)}", n, evaluate, center.copy(), offset)


def rosenbrock(n: int) -> TestFunction:
    if n < 2:
        raise ValueError("rosenbrock needs at least two dimensions")

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))

    return TestFunction("rosenbrock", n, evaluate, np.ones(n), 0.0)


def ellipsoid(n: int, condition: float = 100.0) -> TestFunction:
    """Axis-scaled quadratic with coefficients spanning [1, condition]."""
    if condition <= 1:
        raise ValueError("condition number must exceed 1")
    if n == 1:
        scales = np.array([1.0])
    else:
        scales = condition ** (np.arange(n) / (n - 1))

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(scales * x * x))

    return TestFunction(f"ellipsoid_c{condition:g}", n, evaluate, np.zeros(n), 0.0)
