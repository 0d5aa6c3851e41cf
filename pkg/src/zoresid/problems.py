"""Benchmark objectives with certified constants and stochastic oracles.

Every problem carries the metadata the step-size schedules and the bound
checkers consume: Lipschitz constant L0, smoothness L, strong convexity mu,
the minimizer and minimal value, and (for stochastic problems) the value and
gradient variance levels sigma0, sigma1. Smooth problems are only Lipschitz
on a bounded region, so L0 is certified on the "experiment box"
||x - x*|| <= box_radius; runs that leave the box get flagged, not projected.

Objective callables are vectorized: `eval` maps (..., d) -> (...,) and `grad`
maps (..., d) -> (..., d).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .streams import RandomStream

__all__ = [
    "Problem",
    "ProblemConstants",
    "LeastSquaresData",
    "make_norm_problem",
    "make_quadratic_problem",
    "make_logsumexp_problem",
    "make_nonconvex_problem",
    "make_least_squares",
    "make_constant_problem",
    "add_value_noise",
    "estimate_sigma",
    "make_problem",
    "PROBLEM_IDS",
]


class CapabilityError(RuntimeError):
    """Raised when an operation needs an oracle the problem does not have."""


@dataclass
class ProblemConstants:
    L0: float
    L: float = 0.0
    mu: float = 0.0
    x_star: Optional[np.ndarray] = None
    f_star: float = 0.0
    sigma0: Optional[float] = None
    sigma1: Optional[float] = None
    box_radius: float = 10.0


@dataclass
class LeastSquaresData:
    A: np.ndarray  # (m, d), rows a_i
    b: np.ndarray  # (m,), b_i ~ N(a_i^T x_gen, 1)
    m: int
    x_gen: np.ndarray  # planted parameter used to draw b


@dataclass
class Problem:
    name: str
    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]  # diagnostics only
    constants: ProblemConstants
    class_tags: frozenset = frozenset()
    # Stochastic oracle: (points, stream) -> one independent noisy value per
    # leading index of `points`. None for deterministic problems.
    eval_noisy: Optional[Callable[[np.ndarray, RandomStream], np.ndarray]] = None
    # Analytic structure used by smoothing fast paths: e.g.
    # {"kind": "quadratic", "diag": D} or {"kind": "affine", "c": c, "b": b}.
    structure: dict = field(default_factory=dict)
    lsq_data: Optional[LeastSquaresData] = None

    def gap(self, x: np.ndarray) -> np.ndarray:
        return self.eval(x) - self.constants.f_star

    def in_box(self, x: np.ndarray) -> bool:
        center = self.constants.x_star
        if center is None:
            return True
        return float(np.linalg.norm(x - center)) <= self.constants.box_radius

    @property
    def is_stochastic(self) -> bool:
        return self.eval_noisy is not None

    def noisy_at(self, x: np.ndarray, stream: RandomStream, n: int) -> np.ndarray:
        """n independent noisy evaluations at a single point."""
        if self.eval_noisy is None:
            raise CapabilityError(f"problem {self.name!r} has no stochastic oracle")
        pts = np.broadcast_to(x, (n, self.dim))
        return self.eval_noisy(pts, stream)


def make_norm_problem(d: int) -> Problem:
    """f(x) = ||x||: convex, 1-Lipschitz, nonsmooth at the optimum x* = 0."""
    if d < 1:
        raise ValueError("d must be >= 1")

    def f(x):
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)

    def g(x):
        x = np.asarray(x, dtype=float)
        n = np.linalg.norm(x, axis=-1, keepdims=True)
        return np.where(n > 0, x / np.where(n > 0, n, 1.0), 0.0)

    consts = ProblemConstants(L0=1.0, x_star=np.zeros(d), f_star=0.0, box_radius=10.0)
    return Problem(
        name="norm",
        dim=d,
        eval=f,
        grad=g,
        constants=consts,
        class_tags=frozenset({"convex", "lipschitz"}),
        structure={"kind": "norm"},
    )


def make_quadratic_problem(d: int, mu: float, L: float, box_radius: float = 3.0) -> Problem:
    """f(x) = 1/2 x^T D x with diagonal spectrum spread over [mu, L].

    L0 is the gradient-norm sup over the experiment box: L * box_radius.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if not (0.0 <= mu <= L):
        raise ValueError(f"need 0 <= mu <= L, got mu={mu}, L={L}")
    diag = np.linspace(mu, L, d) if d > 1 else np.array([L])

    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(diag * x * x, axis=-1)

    def g(x):
        return diag * np.asarray(x, dtype=float)

    tags = {"smooth"}
    if mu > 0:
        tags |= {"strongly_convex", "convex"}
    else:
        tags.add("convex")
    consts = ProblemConstants(
        L0=L * box_radius,
        L=L,
        mu=float(diag[0]),
        x_star=np.zeros(d),
        f_star=0.0,
        box_radius=box_radius,
    )
    return Problem(
        name="quadratic",
        dim=d,
        eval=f,
        grad=g,
        constants=consts,
        class_tags=frozenset(tags | {"lipschitz"}),
        structure={"kind": "quadratic", "diag": diag},
    )


def make_logsumexp_problem(d: int, temperature: float = 1.0, box_radius: float = 3.0) -> Problem:
    """f(x) = tau * log(sum_i exp(x_i/tau) + exp(-x_i/tau)).

    Symmetric log-sum-exp over the 2d signed coordinate directions: smooth,
    convex, minimized at x* = 0 with f* = tau*log(2d). Closed-form constants:
    L0 = 1 (the gradient is a signed sub-probability vector) and L = 1/tau.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    tau = float(temperature)

    def f(x):
        x = np.asarray(x, dtype=float) / tau
        m = np.max(np.abs(x), axis=-1, keepdims=True)
        s = np.sum(np.exp(x - m) + np.exp(-x - m), axis=-1)
        return tau * (np.log(s) + m[..., 0])

    def g(x):
        x = np.asarray(x, dtype=float) / tau
        m = np.max(np.abs(x), axis=-1, keepdims=True)
        ep, en = np.exp(x - m), np.exp(-x - m)
        return (ep - en) / np.sum(ep + en, axis=-1, keepdims=True)

    consts = ProblemConstants(
        L0=1.0,
        L=1.0 / tau,
        x_star=np.zeros(d),
        f_star=tau * np.log(2 * d),
        box_radius=box_radius,
    )
    return Problem(
        name="logsumexp",
        dim=d,
        eval=f,
        grad=g,
        constants=consts,
        class_tags=frozenset({"convex", "smooth", "lipschitz"}),
    )


def make_nonconvex_problem(d: int, box_radius: float = 3.0) -> Problem:
    """f(x) = sum_i (x_i^2 + 1 - cos(3 x_i)): smooth, nonconvex, min at 0.

    Both summands are nonnegative and vanish at x_i = 0, so f* = 0 at x* = 0
    by construction at every d. Per-coordinate curvature 2 + 9 cos(3x) is
    indefinite, so the Hessian has negative eigenvalues away from the origin.
    L = 11; L0 on the box is sqrt(d) * (2R + 3).
    """
    if d < 1:
        raise ValueError("d must be >= 1")

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.sum(x * x + 1.0 - np.cos(3.0 * x), axis=-1)

    def g(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * x + 3.0 * np.sin(3.0 * x)

    consts = ProblemConstants(
        L0=np.sqrt(d) * (2.0 * box_radius + 3.0),
        L=11.0,
        x_star=np.zeros(d),
        f_star=0.0,
        box_radius=box_radius,
    )
    return Problem(
        name="nonconvex",
        dim=d,
        eval=f,
        grad=g,
        constants=consts,
        class_tags=frozenset({"nonconvex", "smooth", "lipschitz"}),
    )


def make_constant_problem(d: int, value: float = 1.0) -> Problem:
    """f(x) = value. Degenerate instance used by variance tables and sweeps."""
    if d < 1:
        raise ValueError("d must be >= 1")

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], float(value))

    def g(x):
        return np.zeros_like(np.asarray(x, dtype=float))

    # L0 = 1 is a valid (loose) Lipschitz bound; schedules need L0 > 0.
    consts = ProblemConstants(L0=1.0, L=1.0, x_star=np.zeros(d), f_star=float(value))
    return Problem(
        name="constant",
        dim=d,
        eval=f,
        grad=g,
        constants=consts,
        class_tags=frozenset({"convex", "smooth", "lipschitz"}),
        structure={"kind": "affine", "c": np.zeros(d), "b": float(value)},
    )


def _lsq_problem_from_data(data: LeastSquaresData, box_radius: float) -> Problem:
    A, b, m, d = data.A, data.b, data.m, data.A.shape[1]
    H = 2.0 * (A.T @ A) / m  # Hessian of the mean objective
    eigs = np.linalg.eigvalsh(H)
    x_opt, *_ = np.linalg.lstsq(A, b, rcond=None)

    def f(x):
        x = np.asarray(x, dtype=float)
        r = x @ A.T - b
        return np.mean(r * r, axis=-1)

    def g(x):
        x = np.asarray(x, dtype=float)
        r = x @ A.T - b
        return 2.0 * (r @ A) / m

    def f_noisy(points, stream: RandomStream):
        points = np.asarray(points, dtype=float)
        n = points.shape[0]
        idx = stream.integers(0, m, n)
        r = np.einsum("ij,ij->i", points, A[idx]) - b[idx]
        return r * r

    L = float(eigs[-1])
    mu = float(max(eigs[0], 0.0))
    grad_sup = L * box_radius + 2.0 * np.linalg.norm(A.T @ (A @ x_opt - b)) / m
    consts = ProblemConstants(
        L0=grad_sup,
        L=L,
        mu=mu,
        x_star=x_opt,
        f_star=float(f(x_opt)),
        box_radius=box_radius,
    )
    return Problem(
        name="lsq",
        dim=d,
        eval=f,
        grad=g,
        constants=consts,
        class_tags=frozenset({"convex", "smooth", "lipschitz", "strongly_convex"} if mu > 0 else {"convex", "smooth", "lipschitz"}),
        eval_noisy=f_noisy,
        lsq_data=data,
    )


def make_least_squares(
    d: int,
    m: int,
    mode: str = "rademacher_rows",
    stream: Optional[RandomStream] = None,
    x_gen: Optional[np.ndarray] = None,
    box_radius: float = 3.0,
) -> Problem:
    """Least squares f(x) = (1/m) sum_i (a_i^T x - b_i)^2 with b_i ~ N(a_i^T x*, 1).

    mode "rademacher_rows" gives ||a_i||^2 = d exactly, the regime where the
    value variance is provably at most 1/d of the gradient variance.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if m < d or d < 1:
        raise ValueError(f"need m >= d >= 1, got m={m}, d={d}")
    if mode not in ("rademacher_rows", "gaussian_rows"):
        raise ValueError(f"unknown mode {mode!r}")
    stream = stream if stream is not None else RandomStream(0)
    if x_gen is None:
        x_gen = stream.normal(d) / np.sqrt(d)
    if mode == "rademacher_rows":
        A = stream.signs((m, d))
    else:
        A = stream.normal((m, d))
    b = A @ x_gen + stream.normal(m)
    data = LeastSquaresData(A=A, b=b, m=m, x_gen=np.asarray(x_gen, dtype=float))
    return _lsq_problem_from_data(data, box_radius)


def redraw_lsq_noise(problem: Problem, stream: RandomStream) -> Problem:
    """Fresh b_i ~ N(a_i^T x_gen, 1) on the same design matrix."""
    data = problem.lsq_data
    if data is None:
        raise CapabilityError("not a least-squares problem")
    b = data.A @ data.x_gen + stream.normal(data.m)
    new_data = LeastSquaresData(A=data.A, b=b, m=data.m, x_gen=data.x_gen)
    return _lsq_problem_from_data(new_data, problem.constants.box_radius)


def add_value_noise(problem: Problem, sigma0: float) -> Problem:
    """Additive Gaussian value noise: f(x, xi) = f(x) + sigma0 * z."""
    if sigma0 < 0:
        raise ValueError("sigma0 must be >= 0")
    base_eval = problem.eval

    def f_noisy(points, stream: RandomStream):
        points = np.asarray(points, dtype=float)
        vals = base_eval(points)
        if sigma0 == 0.0:
            return vals
        return vals + sigma0 * stream.normal(vals.shape)

    consts = replace(problem.constants, sigma0=float(sigma0), sigma1=0.0)
    return replace(problem, eval_noisy=f_noisy, constants=consts)


def estimate_sigma(
    problem: Problem,
    n_points: int = 10,
    n_draws: int = 10_000,
    stream: Optional[RandomStream] = None,
) -> dict:
    """Empirical sup over probe points of value / gradient variance.

    sigma1 uses the exact per-sample gradients when the problem exposes them
    (least squares); additive value noise has zero gradient variance. A
    deterministic problem reports zero noise.
    """
    if problem.eval_noisy is None:
        return {"sigma0_hat": 0.0, "sigma1_hat": 0.0}
    stream = stream if stream is not None else RandomStream(0)
    center = problem.constants.x_star if problem.constants.x_star is not None else np.zeros(problem.dim)
    R = problem.constants.box_radius
    probes = center + (stream.uniform((n_points, problem.dim)) * 2.0 - 1.0) * (R / np.sqrt(problem.dim))

    s0_sq = 0.0
    for x in probes:
        draws = problem.noisy_at(x, stream, n_draws)
        s0_sq = max(s0_sq, float(np.var(draws)))

    s1_sq = None
    if problem.lsq_data is not None:
        A, b, m = problem.lsq_data.A, problem.lsq_data.b, problem.lsq_data.m
        s1_sq = 0.0
        for x in probes:
            r = A @ x - b
            grads = 2.0 * r[:, None] * A
            gbar = grads.mean(axis=0)
            s1_sq = max(s1_sq, float(np.mean(np.sum((grads - gbar) ** 2, axis=1))))
    elif problem.constants.sigma1 is not None:
        s1_sq = problem.constants.sigma1 ** 2

    return {
        "sigma0_hat": float(np.sqrt(s0_sq)),
        "sigma1_hat": None if s1_sq is None else float(np.sqrt(s1_sq)),
    }


PROBLEM_IDS = ("norm", "quadratic", "logsumexp", "nonconvex", "lsq", "constant")


def make_problem(problem_id: str, d: int, **params) -> Problem:
    """Build a suite problem by string id."""
    if problem_id == "norm":
        return make_norm_problem(d)
    if problem_id == "quadratic":
        return make_quadratic_problem(d, params.get("mu", 1.0), params.get("L", 4.0),
                                      params.get("box_radius", 3.0))
    if problem_id == "logsumexp":
        return make_logsumexp_problem(d, params.get("temperature", 1.0),
                                      params.get("box_radius", 3.0))
    if problem_id == "nonconvex":
        return make_nonconvex_problem(d, params.get("box_radius", 3.0))
    if problem_id == "lsq":
        return make_least_squares(d, params.get("m", max(4 * d, 50)),
                                  params.get("mode", "rademacher_rows"),
                                  params.get("stream"),
                                  box_radius=params.get("box_radius", 3.0))
    if problem_id == "constant":
        return make_constant_problem(d, params.get("value", 1.0))
    raise ValueError(f"unknown problem id {problem_id!r}; known: {PROBLEM_IDS}")
