"""Derivative-free maximization of eta, I or eta*I over a box of cavity parameters.

A coarse log-spaced grid locates the basin; coordinate descent on a
shrinking log-space stencil then refines it. The objective is smooth but
each evaluation is a full master-equation + correlator solve, so the
evaluation budget is kept small and fixed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np

from .errors import CascadeError, InfeasibleProblem
from .model import SystemParams
from .report import evaluate_point, parallel_map
from .units import SIV_GAMMA, SIV_OMEGA, QFactorSpec, q_to_kappa

OBJECTIVES = ("eta_ind", "ind", "eta")
AXES = ("kappa1", "g2", "kappa2", "g1")


@dataclass(frozen=True)
class Bounds:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 < self.lo <= self.hi) or not math.isfinite(self.hi):
            raise InfeasibleProblem(f"empty or non-positive range [{self.lo}, {self.hi}]")

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def clip(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)


@dataclass(frozen=True)
class Constraints:
    """Search box. Cavity decay bounds usually come from Q limits via :func:`from_q`."""

    kappa1: Bounds
    kappa2: Bounds
    g2: Bounds
    g1: Bounds
    base: SystemParams = field(default_factory=lambda: SystemParams(500.0, 50.0, 100.0, 100.0))

    @classmethod
    def from_q(cls, q1_max: float, q2_max: float, q_min: float = 1e3, g1: float = 500.0,
               g1_max: Optional[float] = None, g2_max: float = 2000.0, g2_min: float = 1.0,
               omega: float = SIV_OMEGA, gamma_lab: float = SIV_GAMMA, **base_kw) -> "Constraints":
        """Q <= q_max means kappa >= omega / (q_max gamma_lab); q_min caps kappa from above."""
        if min(q1_max, q2_max) < q_min:
            raise InfeasibleProblem("q_max below q_min")
        k1 = Bounds(q_to_kappa(QFactorSpec(q1_max, omega, gamma_lab)), q_to_kappa(QFactorSpec(q_min, omega, gamma_lab)))
        k2 = Bounds(q_to_kappa(QFactorSpec(q2_max, omega, gamma_lab)), q_to_kappa(QFactorSpec(q_min, omega, gamma_lab)))
        g1b = Bounds(g1, g1) if g1_max is None else Bounds(min(g1, g1_max), g1_max)
        base = SystemParams(g1, k1.lo, g2_min, k2.lo, **base_kw)
        return cls(k1, k2, Bounds(g2_min, g2_max), g1b, base)

    def bounds(self, axis: str) -> Bounds:
        return getattr(self, axis)


@dataclass(frozen=True)
class OptimizationResult:
    params: SystemParams
    eta: float
    ind: float
    objective: str
    score: float
    evaluations: int

    @property
    def eta_ind(self) -> float:
        return self.eta * self.ind


def _score(objective: str, params: SystemParams) -> tuple[float, float, float]:
    """(score, eta, I); failures and undefined I score -inf."""
    outputs = ("eta",) if objective == "eta" else ("eta", "ind")
    try:
        rep = evaluate_point(params, evaluator="master", outputs=outputs)
    except (CascadeError, ValueError, np.linalg.LinAlgError):
        return -math.inf, math.nan, math.nan
    eta = rep.eta_master
    ind = rep.i_master if rep.i_master is not None else math.nan
    if objective == "eta":
        score = eta
    elif objective == "ind":
        score = ind
    else:
        score = eta * ind
    if score is None or not math.isfinite(score):
        return -math.inf, eta, ind
    return float(score), eta, float(ind)


def _apply(base: SystemParams, axes, x) -> SystemParams:
    return base.with_(**dict(zip(axes, (float(v) for v in x))))


class _Evaluator:
    """Memoized, parallel objective over points in parameter space."""

    def __init__(self, base: SystemParams, axes, objective: str):
        self.base, self.axes, self.objective = base, axes, objective
        self.cache: dict[tuple, tuple[float, float, float]] = {}

    def __call__(self, points) -> list[tuple[float, float, float]]:
        keys = [tuple(float(v) for v in p) for p in points]
        todo = list(dict.fromkeys(k for k in keys if k not in self.cache))
        fn = partial(_score, self.objective)
        for k, r in zip(todo, parallel_map(fn, [_apply(self.base, self.axes, k) for k in todo])):
            self.cache[k] = r
        return [self.cache[k] for k in keys]

    @property
    def count(self) -> int:
        return len(self.cache)


def _best(points, results):
    i = max(range(len(points)), key=lambda n: (results[n][0], -n))
    return points[i], results[i]


def optimize(constraints: Constraints, objective: str = "eta_ind", grid_points: int = 6,
             rounds: int = 3, shrink: float = 4.0, stencil: int = 9) -> OptimizationResult:
    """Coarse log grid over the free axes, then coordinate descent.

    Each round scans every free axis on ``stencil`` log-spaced candidates
    around the incumbent, clipped to the box; the stencil half-width starts
    at one coarse-grid cell and is divided by ``shrink`` after every round.
    Raises :class:`InfeasibleProblem` when no point gives a finite score.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    bounds = {a: constraints.bounds(a) for a in AXES}
    fixed = {a: b.lo for a, b in bounds.items() if b.degenerate}
    free = [a for a in AXES if not bounds[a].degenerate]
    base = constraints.base.with_(**fixed)
    ev = _Evaluator(base, free, objective)

    if not free:
        (score, eta, ind), = ev([()])
        if not math.isfinite(score):
            raise InfeasibleProblem("the only feasible point could not be evaluated")
        return OptimizationResult(base, eta, ind, objective, score, ev.count)

    logs = {a: (math.log(bounds[a].lo), math.log(bounds[a].hi)) for a in free}
    axes_grid = []
    for a in free:
        g = np.exp(np.linspace(*logs[a], grid_points))
        g[0], g[-1] = bounds[a].lo, bounds[a].hi  # exact box corners
        axes_grid.append(g)
    points = [tuple(p) for p in itertools.product(*axes_grid)]
    best_x, best_r = _best(points, ev(points))

    half = {a: (logs[a][1] - logs[a][0]) / max(grid_points - 1, 1) for a in free}
    for _ in range(rounds):
        for n, a in enumerate(free):
            centre = math.log(best_x[n])
            cands = np.exp(centre + half[a] * np.linspace(-1, 1, stencil))
            pts = [best_x[:n] + (bounds[a].clip(float(c)),) + best_x[n + 1:] for c in cands]
            x, r = _best(pts, ev(pts))
            if r[0] > best_r[0]:
                best_x, best_r = x, r
        half = {a: h / shrink for a, h in half.items()}

    if not math.isfinite(best_r[0]):
        raise InfeasibleProblem("no feasible point produced a finite objective")
    best = _apply(base, free, best_x)
    _, eta, ind = best_r if objective != "eta" else _score("eta_ind", best)
    return OptimizationResult(best, eta, ind, objective, best_r[0], ev.count)
