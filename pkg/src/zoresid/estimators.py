"""Zeroth-order gradient estimators.

Five estimators: the sign-perturbation one-point estimator, the naive
sphere one-point estimator, the two-point finite-difference estimator, and
the residual estimator (sphere form, plus a Gaussian ablation mode). The
residual estimator is the only stateful one: it reuses the previous
iteration's perturbed value as its baseline, so a T-step run costs T + 1
oracle queries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .problems import CapabilityError, Problem
from .streams import RandomStream, sample_gaussian, sample_rademacher, sample_sphere

__all__ = [
    "EstimatorState",
    "GradientEstimate",
    "spsa1",
    "bandit_one_point",
    "two_point",
    "residual_step",
    "ESTIMATOR_IDS",
]

ESTIMATOR_IDS = ("spsa1", "one_point", "two_point", "residual", "residual_gaussian")


class ParameterError(ValueError):
    pass


@dataclass
class GradientEstimate:
    vector: np.ndarray
    queries_used: int
    alpha: float


@dataclass
class EstimatorState:
    """One-value memory of the residual estimator.

    Before the first call the state is uninitialized; the first call queries
    the baseline f(x_1 + alpha*u_0) and returns the zero estimate, matching
    the convention g_0 = 0 (equivalently x_1 = x_0).
    """

    prev_value: float = 0.0
    prev_direction: Optional[np.ndarray] = None
    initialized: bool = False
    queries: int = field(default=0)


def _check_alpha(alpha: float) -> None:
    if alpha <= 0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")


def _value(problem: Problem, x: np.ndarray, stream: RandomStream, noisy: bool) -> float:
    if noisy:
        if problem.eval_noisy is None:
            raise CapabilityError(f"problem {problem.name!r} has no stochastic oracle")
        return float(problem.eval_noisy(x[None, :], stream)[0])
    return float(problem.eval(x))


def spsa1(problem: Problem, x: np.ndarray, alpha: float, stream: RandomStream) -> GradientEstimate:
    """G = f(x + alpha*u) / alpha * u with u a Rademacher sign vector."""
    _check_alpha(alpha)
    u = sample_rademacher(stream, problem.dim).vector
    val = float(problem.eval(x + alpha * u))
    return GradientEstimate(vector=(val / alpha) * u, queries_used=1, alpha=alpha)


def bandit_one_point(
    problem: Problem, x: np.ndarray, alpha: float, stream: RandomStream, noisy: bool = False
) -> GradientEstimate:
    """G = d * f(x + alpha*u) / alpha * u with u uniform on the unit sphere."""
    _check_alpha(alpha)
    d = problem.dim
    u = sample_sphere(stream, d).vector
    val = _value(problem, x + alpha * u, stream, noisy)
    return GradientEstimate(vector=(d * val / alpha) * u, queries_used=1, alpha=alpha)


def two_point(problem: Problem, x: np.ndarray, alpha: float, stream: RandomStream) -> GradientEstimate:
    """G = d * (f(x + alpha*u) - f(x)) / alpha * u, u uniform on the sphere."""
    _check_alpha(alpha)
    d = problem.dim
    u = sample_sphere(stream, d).vector
    diff = float(problem.eval(x + alpha * u)) - float(problem.eval(x))
    return GradientEstimate(vector=(d * diff / alpha) * u, queries_used=2, alpha=alpha)


def residual_step(
    problem: Problem,
    x_t: np.ndarray,
    alpha: float,
    state: EstimatorState,
    stream: RandomStream,
    noisy: bool = False,
    gaussian: bool = False,
) -> tuple[GradientEstimate, EstimatorState]:
    """One step of the residual estimator; returns the estimate and new state.

    g_t = d * (f(x_t + alpha*u_t) - prev) / alpha * u_t with u_t on the unit
    sphere, where prev is the perturbed value stored from the previous step.
    In the stochastic case the stored value keeps its original noise draw; it
    is never re-queried, which is what keeps this one-point feedback.

    The `gaussian` ablation uses u_t ~ N(0, I) without the leading d.
    """
    _check_alpha(alpha)
    d = problem.dim
    if gaussian:
        u = sample_gaussian(stream, d).vector
        scale = 1.0 / alpha
    else:
        u = sample_sphere(stream, d).vector
        scale = d / alpha
    val = _value(problem, x_t + alpha * u, stream, noisy)
    if not state.initialized:
        new_state = EstimatorState(prev_value=val, prev_direction=u, initialized=True,
                                   queries=state.queries + 1)
        return GradientEstimate(vector=np.zeros(d), queries_used=1, alpha=alpha), new_state
    g = scale * (val - state.prev_value) * u
    new_state = EstimatorState(prev_value=val, prev_direction=u, initialized=True,
                               queries=state.queries + 1)
    return GradientEstimate(vector=g, queries_used=1, alpha=alpha), new_state
