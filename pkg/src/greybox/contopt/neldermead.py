"""Fixed-coefficient Nelder-Mead simplex search.

The conventional reflect/expand/contract/shrink iteration with the classic
coefficients as defaults.  The optimizer takes an explicit initial simplex
rather than a starting point, so the effect of different construction rules
can be isolated; it is fully deterministic given the objective and the
simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .simplex import Simplex, simplex_quality


class BudgetZero(ValueError):
    """The evaluation budget must be positive."""


class Termination(str, Enum):
    F_TOL = "f_tol"
    X_TOL = "x_tol"
    BUDGET = "budget"
    DEGENERATE_STALL = "degenerate_stall"


@dataclass(frozen=True)
class NMCoefficients:
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5

    def __post_init__(self):
        if not self.reflection > 0:
            raise ValueError("reflection coefficient must be positive")
        if not self.expansion > 1:
            raise ValueError("expansion coefficient must exceed 1")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction coefficient must lie in (0, 1)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink coefficient must lie in (0, 1)")


@dataclass(frozen=True)
class NMConfig:
    max_evals: int
    f_tol: float = 1e-12
    x_tol: float = 1e-12
    coefficients: NMCoefficients = field(default_factory=NMCoefficients)

    def __post_init__(self):
        if self.f_tol < 0 or self.x_tol < 0:
            raise ValueError("tolerances must be nonnegative")


@dataclass(frozen=True)
class NMResult:
    best_x: np.ndarray
    best_f: float
    evals_used: int
    termination: Termination
    history: tuple[tuple[int, float], ...]


class _BudgetExhausted(Exception):
    pass


def nelder_mead(f: Callable, s0: Simplex, cfg: NMConfig) -> NMResult:
    """Minimize f starting from the given simplex.

    Parameters
    ----------
    f : callable
        Objective mapping an n-vector to a float.
    s0 : Simplex
        Initial simplex; its points are evaluated first, in order.
    cfg : NMConfig
        Budget, tolerances, and step coefficients.

    Terminates when the spread of simplex f-values falls to ``f_tol``
    (``f_tol``), the simplex diameter falls to ``x_tol`` (``x_tol``), the
    budget runs out (``budget``), or a zero-volume simplex with zero f-spread
    persists for 2n consecutive iterations (``degenerate_stall``, the
    coincident-points case where no move is possible).
    """
    if cfg.max_evals <= 0:
        raise BudgetZero("max_evals must be positive")
    coeff = cfg.coefficients
    points = [p.copy() for p in s0.points]
    n = s0.n

    evals = 0
    best_f = np.inf
    best_x = points[0].copy()
    history: list[tuple[int, float]] = []

    def evaluate(x: np.ndarray) -> float:
        nonlocal evals, best_f, best_x
        if evals >= cfg.max_evals:
            raise _BudgetExhausted
        value = float(f(x))
        evals += 1
        if value < best_f:
            best_f = value
            best_x = x.copy()
        history.append((evals, best_f))
        return value

    termination = Termination.BUDGET
    try:
        values = [evaluate(p) for p in points]
        stall = 0
        while True:
            order = np.argsort(values, kind="stable")
            points = [points[i] for i in order]
            values = [values[i] for i in order]

            spread = values[-1] - values[0]
            quality = simplex_quality(Simplex(points=np.array(points)))
            if quality.volume == 0.0 and spread == 0.0:
                stall += 1
                if stall >= 2 * n:
                    termination = Termination.DEGENERATE_STALL
                    break
            else:
                stall = 0
                if spread <= cfg.f_tol:
                    termination = Termination.F_TOL
                    break
                if quality.diameter <= cfg.x_tol:
                    termination = Termination.X_TOL
                    break

            centroid = np.mean(points[:-1], axis=0)
            worst = points[-1]
            reflected = centroid + coeff.reflection * (centroid - worst)
            f_reflected = evaluate(reflected)

            if f_reflected < values[0]:
                expanded = centroid + coeff.expansion * (reflected - centroid)
                f_expanded = evaluate(expanded)
                if f_expanded < f_reflected:
                    points[-1], values[-1] = expanded, f_expanded
                else:
                    points[-1], values[-1] = reflected, f_reflected
            elif f_reflected < values[-2]:
                points[-1], values[-1] = reflected, f_reflected
            else:
                if f_reflected < values[-1]:
                    contracted = centroid + coeff.contraction * (reflected - centroid)
                    f_contracted = evaluate(contracted)
                    accept = f_contracted <= f_reflected
                else:
                    contracted = centroid + coeff.contraction * (worst - centroid)
                    f_contracted = evaluate(contracted)
                    accept = f_contracted < values[-1]
                if accept:
                    points[-1], values[-1] = contracted, f_contracted
                else:
                    anchor = points[0]
                    for i in range(1, n + 1):
                        points[i] = anchor + coeff.shrink * (points[i] - anchor)
                        values[i] = evaluate(points[i])
    except _BudgetExhausted:
        termination = Termination.BUDGET

    return NMResult(
        best_x=best_x,
        best_f=best_f,
        evals_used=evals,
        termination=termination,
        history=tuple(history),
    )


def evals_to_target(result: NMResult, target: float) -> int | None:
    """First evaluation index at which best-so-far drops below target."""
    for index, best in result.history:
        if best < target:
            return index
    return None
