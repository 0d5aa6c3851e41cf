"""Sweep machinery: empirical sample-complexity search and scaling fits.

T_eps(d) or T_eps(epsilon) is the smallest horizon whose seed-averaged final
metric reaches the target, searched on a geometric grid of powers of two with
one bisection refinement. Censored cells (budget exhausted) are reported but
never enter slope fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .optimizer import make_schedule, run_deterministic, run_stochastic
from .problems import Problem

__all__ = [
    "fit_loglog_slope",
    "fit_semilog",
    "SweepCell",
    "find_T_eps",
    "mean_metric",
    "dimension_sweep",
    "precision_sweep",
]


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        raise ValueError("need at least two points to fit a slope")
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)


def fit_semilog(t: Sequence[float], values: Sequence[float]) -> dict:
    """Affine fit of log(values) against t; returns slope, intercept and R^2."""
    t = np.asarray(t, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(t, y, 1)
    pred = slope * t + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


@dataclass
class SweepCell:
    key: float  # the swept value (d or epsilon)
    T_eps: Optional[int]  # None when censored
    metric: Optional[float]
    censored: bool


def mean_metric(problem: Problem, setting: str, T: int, seeds: Sequence[int],
                x1: np.ndarray, c0: float = 1.0, estimator: str = "residual") -> float:
    """Seed-averaged final metric of the schedule built for horizon T."""
    sched = make_schedule(setting, problem, T=T, x1=x1, c0=c0)
    runner = run_stochastic if sched.stochastic else run_deterministic
    vals = [runner(problem, sched, seed, x1, estimator=estimator).final_metric for seed in seeds]
    return float(np.mean(vals))


def find_T_eps(
    metric_at: Callable[[int], float],
    epsilon: float,
    T_max: int = 2**17,
) -> tuple[Optional[int], Optional[float]]:
    """Smallest T with metric_at(T) <= epsilon: powers of two, then one
    midpoint probe between the last failure and the first success."""
    prev_T = None
    T = 1
    while T <= T_max:
        m = metric_at(T)
        if m <= epsilon:
            if prev_T is None or T - prev_T <= 1:
                return T, m
            mid = (prev_T + T) // 2
            m_mid = metric_at(mid)
            return (mid, m_mid) if m_mid <= epsilon else (T, m)
        prev_T = T
        T *= 2
    return None, None


def dimension_sweep(
    problem_factory: Callable[[int], Problem],
    setting: str,
    epsilon: float,
    d_values: Sequence[int],
    seeds: Sequence[int],
    x1_factory: Callable[[Problem], np.ndarray],
    T_max: int = 2**17,
    c0: float = 1.0,
) -> tuple[list[SweepCell], Optional[float]]:
    """T_eps per dimension and the fitted log-log slope over uncensored cells."""
    cells = []
    for d in d_values:
        problem = problem_factory(d)
        x1 = x1_factory(problem)
        T_eps, m = find_T_eps(lambda T: mean_metric(problem, setting, T, seeds, x1, c0), epsilon, T_max)
        cells.append(SweepCell(key=float(d), T_eps=T_eps, metric=m, censored=T_eps is None))
    good = [c for c in cells if not c.censored]
    slope = fit_loglog_slope([c.key for c in good], [c.T_eps for c in good]) if len(good) >= 2 else None
    return cells, slope


def precision_sweep(
    problem: Problem,
    setting: str,
    epsilons: Sequence[float],
    seeds: Sequence[int],
    x1: np.ndarray,
    T_max: int = 2**17,
    c0: float = 1.0,
) -> tuple[list[SweepCell], Optional[float]]:
    """T_eps per precision target and the fitted exponent of T vs epsilon."""
    cells = []
    for eps in epsilons:
        T_eps, m = find_T_eps(lambda T: mean_metric(problem, setting, T, seeds, x1, c0), eps, T_max)
        cells.append(SweepCell(key=float(eps), T_eps=T_eps, metric=m, censored=T_eps is None))
    good = [c for c in cells if not c.censored]
    slope = fit_loglog_slope([c.key for c in good], [c.T_eps for c in good]) if len(good) >= 2 else None
    return cells, slope
