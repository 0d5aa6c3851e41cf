"""Plain descent x_{t+1} = x_t - eta * g_t with the residual estimator,
plus the per-setting (eta, alpha, T) schedules and averaging rules.

Ten settings are supported, one per combination of {deterministic,
stochastic} x {nonsmooth convex, nonsmooth strongly convex, smooth convex,
smooth strongly convex, smooth nonconvex}. Each schedule applies the
step-size caps its convergence guarantee requires; iteration floors that the
guarantee assumes but desk-scale runs cannot meet are recorded as warnings
on the schedule, and the run proceeds.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .estimators import EstimatorState, bandit_one_point, residual_step, spsa1, two_point
from .problems import Problem
from .streams import RandomStream

__all__ = [
    "SETTINGS",
    "Schedule",
    "RunRecord",
    "make_schedule",
    "run_deterministic",
    "run_stochastic",
    "weighted_average",
    "ConfigurationError",
]

SETTINGS = (
    "det_nonsmooth_cvx",
    "det_nonsmooth_scvx",
    "det_smooth_cvx",
    "det_smooth_scvx",
    "det_smooth_noncvx",
    "sto_nonsmooth_cvx",
    "sto_nonsmooth_scvx",
    "sto_smooth_cvx",
    "sto_smooth_scvx",
    "sto_smooth_noncvx",
)

_EPSILON_SETTINGS = {"det_nonsmooth_scvx", "det_smooth_scvx", "sto_nonsmooth_scvx", "sto_smooth_scvx"}


class ConfigurationError(ValueError):
    pass


@dataclass
class Schedule:
    setting: str
    eta: float
    alpha: float
    T: int
    averaging: str  # "last" | "uniform_mean" | "rho_weighted"
    rho: Optional[float] = None
    epsilon: Optional[float] = None
    metric: str = "gap"  # "gap" | "grad_sq_mean"
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if self.eta <= 0 or self.alpha <= 0:
            raise ConfigurationError("eta and alpha must be > 0")
        if self.T < 1:
            raise ConfigurationError("T must be >= 1")
        if self.averaging == "rho_weighted" and not (self.rho and 0.0 < self.rho < 1.0):
            raise ConfigurationError("rho_weighted averaging needs rho in (0,1)")

    @property
    def stochastic(self) -> bool:
        return self.setting.startswith("sto_")


def _require(cond: bool, name: str) -> None:
    if not cond:
        raise ConfigurationError(f"missing constant {name}")


def make_schedule(
    setting: str,
    problem: Problem,
    T: Optional[int] = None,
    epsilon: Optional[float] = None,
    x1: Optional[np.ndarray] = None,
    c0: float = 1.0,
) -> Schedule:
    """Derive the per-setting (eta, alpha, T) from problem constants.

    Settings whose guarantee is horizon-driven take T; the strongly convex
    settings are precision-driven and take epsilon (T then comes from the
    setting's sample-complexity formula, with an explicit T overriding it).
    c0 is the empirical fourth-moment constant; 1.0 when unmeasured.
    """
    if setting not in SETTINGS:
        raise ConfigurationError(f"unknown setting {setting!r}")
    c = problem.constants
    d = problem.dim
    L0, L, mu = c.L0, c.L, c.mu
    _require(L0 > 0, "L0")
    warnings: list[str] = []

    needs_eps = setting in _EPSILON_SETTINGS
    if needs_eps:
        if epsilon is None or epsilon <= 0:
            raise ConfigurationError(f"setting {setting!r} needs a target precision epsilon")
    else:
        if T is None or T < 1:
            raise ConfigurationError(f"setting {setting!r} needs an iteration number T")

    if "smooth" in setting and "nonsmooth" not in setting:
        _require(L > 0, "L")
    if setting.endswith("scvx"):
        _require(mu > 0, "mu")
    sigma0 = c.sigma0
    sigma1 = c.sigma1
    if setting.startswith("sto_"):
        _require(sigma0 is not None and sigma0 > 0, "sigma0")
    if setting == "sto_smooth_scvx":
        _require(sigma1 is not None and sigma1 > 0, "sigma1")

    needs_R = setting in (
        "det_nonsmooth_cvx", "det_nonsmooth_scvx", "det_smooth_cvx",
        "sto_nonsmooth_cvx", "sto_nonsmooth_scvx", "sto_smooth_cvx",
    )
    needs_gap1 = setting in ("det_smooth_scvx", "det_smooth_noncvx", "sto_smooth_scvx", "sto_smooth_noncvx")
    R = gap1 = None
    if needs_R or needs_gap1:
        if x1 is None:
            raise ConfigurationError(f"setting {setting!r} needs the start point x1")
        if needs_R:
            _require(c.x_star is not None, "x_star")
            R = float(np.linalg.norm(np.asarray(x1) - c.x_star))
        if needs_gap1:
            _require(np.isfinite(c.f_star), "f_star")
            gap1 = float(problem.eval(np.asarray(x1)) - c.f_star)
            gap1 = max(gap1, np.finfo(float).tiny)

    rho = None
    metric = "gap"
    averaging = "last"

    if setting == "det_nonsmooth_cvx":
        alpha = math.sqrt(d / T)
        eta = 1.0 / (3.0 * math.sqrt(d * T) * L0)
        averaging = "uniform_mean"

    elif setting == "det_nonsmooth_scvx":
        alpha = epsilon / (2.0 * (4.0 * c0 + 1.0) * L0)
        eta = alpha / (3.0 * d * L0)
        rho = 1.0 - mu * eta / 2.0
        if T is None:
            T = math.ceil(6.0 * (4.0 * c0 + 1.0) * L0**2 * d / (mu * epsilon)
                          * math.log(mu * R**2 / epsilon + 1.0))
        averaging = "rho_weighted"

    elif setting == "det_smooth_cvx":
        alpha = R ** (2.0 / 3.0) * (d * L0 / (T * L)) ** (1.0 / 3.0)
        eta = min(alpha / (4.0 * d * L0), 1.0 / (64.0 * d * L))
        floor = 2.0**12 * R**2 * d**4 * (L / L0) ** 2
        if T < floor:
            warnings.append(f"T={T} below guarantee floor {floor:.3g}")
        averaging = "uniform_mean"

    elif setting == "det_smooth_scvx":
        alpha = math.sqrt(epsilon / (9.0 * L))
        eta = min(alpha / (4.0 * d * L0), 1.0 / (56.0 * d * L))
        eps_cap = 9.0 * L0**2 * mu**2 / (14.0**2 * d**2 * L**3)
        if epsilon > eps_cap:
            warnings.append(f"epsilon={epsilon:g} above guarantee cap {eps_cap:.3g}")
        if T is None:
            T = math.ceil(12.0 * d * L0 * math.sqrt(L) / (mu * math.sqrt(epsilon))
                          * math.log(3.0 * gap1 / epsilon))
        averaging = "last"

    elif setting == "det_smooth_noncvx":
        alpha = (d * L0 * gap1 / (L**2 * T)) ** (1.0 / 3.0)
        eta = min(alpha / (4.0 * d * L0), 1.0 / (16.0 * d * L))
        floor = max(
            6.0**1.5 * d * L0 / (math.sqrt(gap1) * math.sqrt(L)),
            5.0**3 * d**4 * gap1 / (L**2 * L0**2),
            4.0**3 * L * d**4 * gap1 / L0**2,
        )
        if T < floor:
            warnings.append(f"T={T} below guarantee floor {floor:.3g}")
        metric = "grad_sq_mean"

    elif setting == "sto_nonsmooth_cvx":
        alpha = (96.0 ** 0.25) * math.sqrt(d) * math.sqrt(sigma0) * math.sqrt(R) / (math.sqrt(L0) * T ** 0.25)
        eta_raw = R * alpha / (math.sqrt(24.0 * d * T) * math.sqrt(c0 * L0**2 * alpha**2 + d * sigma0**2))
        eta = min(eta_raw, alpha / (3.0 * d * L0))
        floor = 3.0 * L0**2 * R**2 / (2.0**11 * c0**2 * sigma0**2)
        if T < floor:
            warnings.append(f"T={T} below guarantee floor {floor:.3g}")
        averaging = "uniform_mean"

    elif setting == "sto_nonsmooth_scvx":
        alpha = min(epsilon / (8.0 * L0), (d * sigma0**2 * epsilon / (4.0 * c0 * L0**3)) ** (1.0 / 3.0))
        eta = min(L0 * alpha**3 / (24.0 * d**2 * sigma0**2), alpha / (3.0 * d * L0))
        rho = 1.0 - mu * eta / 2.0
        eps_cap = 4.0 * math.sqrt(8.0 * d * (8.0 * c0 + 1.0)) * sigma0
        if epsilon >= eps_cap:
            warnings.append(f"epsilon={epsilon:g} at or above guarantee cap {eps_cap:.3g}")
        if T is None:
            T = math.ceil(48.0 * L0**2 / mu
                          * max(8.0**3 * d**2 * sigma0**2 / epsilon**3, 4.0 * c0 * d / epsilon)
                          * math.log(mu * R**2 / epsilon + 1.0))
        averaging = "rho_weighted"

    elif setting == "sto_smooth_cvx":
        alpha = 4.0 * (d * R * sigma0 / L) ** (1.0 / 3.0) / T ** (1.0 / 6.0)
        eta = min(alpha * R / (8.0 * math.sqrt(T) * d * sigma0),
                  alpha / (8.0 * d * L0), 1.0 / (64.0 * d * L))
        floor = max(
            20.0**1.5 * L * R**2 / (sigma0 * d**4),
            L0**2 * R**2 / sigma0**2,
            2.0**3.5 * L * math.sqrt(d) * R**2 / sigma0,
            L0**2 / (4.0 * sigma1**2) if sigma1 else 0.0,
        )
        if T < floor:
            warnings.append(f"T={T} below guarantee floor {floor:.3g}")
        averaging = "uniform_mean"

    elif setting == "sto_smooth_scvx":
        alpha_sq = min(epsilon / (32.0 * L), math.sqrt(d * sigma0**2 * epsilon / (4.0 * L * sigma1**2)))
        alpha = math.sqrt(alpha_sq)
        eta = min(mu * alpha**4 / (48.0 * d**2 * sigma0**2),
                  alpha / (8.0 * d * L0), 1.0 / (112.0 * d * L))
        eps_cap = min(64.0 * sigma0, 16.0 * sigma1**2 / (d * L))
        if epsilon > eps_cap:
            warnings.append(f"epsilon={epsilon:g} above guarantee cap {eps_cap:.3g}")
        if T is None:
            T = math.ceil(max(3.0 * 2.0**14 * L**2 * d**2 * sigma0**2 / (mu**2 * epsilon**2),
                              192.0 * d * L * sigma1**2 / (mu**2 * epsilon))
                          * math.log(3.0 * gap1 / epsilon))
        averaging = "last"

    else:  # sto_smooth_noncvx
        alpha = gap1 ** (1.0 / 6.0) * (d * sigma0) ** (1.0 / 3.0) / (L ** (2.0 / 3.0) * T ** (1.0 / 6.0))
        eta = min(alpha * math.sqrt(gap1) / (4.0 * math.sqrt(T) * d * sigma0),
                  alpha / (8.0 * d * L0), 1.0 / (32.0 * d * L))
        floor = gap1 * L0**2 / (d * sigma0**2)
        if T < floor:
            warnings.append(f"T={T} below guarantee floor {floor:.3g}")
        metric = "grad_sq_mean"

    return Schedule(setting=setting, eta=eta, alpha=alpha, T=int(T), averaging=averaging,
                    rho=rho, epsilon=epsilon, metric=metric, warnings=warnings)


def weighted_average(trajectory: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Convex combination sum w_t x_t / sum w_t, normalized for stability."""
    trajectory = np.asarray(trajectory, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(trajectory):
        raise ValueError(f"length mismatch: {len(weights)} weights, {len(trajectory)} points")
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    w = weights / weights.max()
    return (w[:, None] * trajectory).sum(axis=0) / w.sum()


def _rho_weights(T: int, rho: float) -> np.ndarray:
    # w_t = rho^{-t}, computed in log space and normalized by the max weight.
    t = np.arange(1, T + 1, dtype=float)
    lw = -t * math.log(rho)
    return np.exp(lw - lw.max())


@dataclass
class RunRecord:
    """Per-iteration trajectory rows plus the run summary."""

    t: np.ndarray
    f_value: np.ndarray
    f_gap: np.ndarray
    grad_norm_sq: np.ndarray
    est_norm_sq: np.ndarray
    eta: float
    alpha: float
    seed: int
    setting: str
    problem: str
    estimator: str
    queries: int
    final_metric: float
    averaged_point: np.ndarray
    diverged: bool = False
    exited_box: bool = False
    trajectory: Optional[np.ndarray] = None  # (T+1, d): x_1..x_{T+1}
    baseline_values: Optional[np.ndarray] = None  # residual baselines per step

    @property
    def T(self) -> int:
        return len(self.t)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "f_value", "f_gap", "grad_norm_sq", "est_norm_sq", "eta", "alpha"])
            for i in range(self.T):
                writer.writerow([
                    int(self.t[i]),
                    repr(float(self.f_value[i])),
                    repr(float(self.f_gap[i])),
                    repr(float(self.grad_norm_sq[i])),
                    repr(float(self.est_norm_sq[i])),
                    repr(self.eta),
                    repr(self.alpha),
                ])

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "setting": self.setting,
            "problem": self.problem,
            "estimator": self.estimator,
            "d": None if self.averaged_point is None else int(len(self.averaged_point)),
            "T": self.T,
            "queries": self.queries,
            "eta": self.eta,
            "alpha": self.alpha,
            "final_metric": self.final_metric,
            "diverged": self.diverged,
            "exited_box": self.exited_box,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def _run(
    problem: Problem,
    schedule: Schedule,
    seed: int,
    x1: np.ndarray,
    noisy: bool,
    estimator: str = "residual",
    store_trajectory: bool = False,
) -> RunRecord:
    x1 = np.asarray(x1, dtype=float)
    if x1.shape != (problem.dim,):
        raise ValueError(f"x1 must have shape ({problem.dim},)")
    stream = RandomStream(seed)
    if schedule.averaging == "rho_weighted":
        store_trajectory = True  # the output rule needs the whole trajectory
    T, eta, alpha = schedule.T, schedule.eta, schedule.alpha
    d = problem.dim
    f_star = problem.constants.f_star

    f_value = np.empty(T)
    f_gap = np.empty(T)
    grad_norm_sq = np.empty(T)
    est_norm_sq = np.empty(T)
    X = np.empty((T + 1, d)) if store_trajectory else None
    baselines = np.empty(T) if store_trajectory else None

    gaussian = estimator == "residual_gaussian"
    residual = estimator in ("residual", "residual_gaussian")
    state = EstimatorState()
    queries = 0
    if residual:
        # Initialization call: pre-sample u_0, query f(x_1 + alpha*u_0),
        # return the zero estimate (g_0 = 0 so x_1 = x_0).
        _, state = residual_step(problem, x1, alpha, state, stream, noisy=noisy, gaussian=gaussian)
        queries = 1

    x = x1.copy()
    diverged = False
    exited_box = False
    guard = 1e6 * max(1.0, float(np.linalg.norm(x1)))
    steps_done = 0

    for t in range(1, T + 1):
        if store_trajectory:
            X[t - 1] = x
            if residual:
                baselines[t - 1] = state.prev_value
        fx = float(problem.eval(x))
        gx = problem.grad(x)
        if residual:
            est, state = residual_step(problem, x, alpha, state, stream, noisy=noisy, gaussian=gaussian)
            queries += 1
        elif estimator == "one_point":
            est = bandit_one_point(problem, x, alpha, stream, noisy=noisy)
            queries += est.queries_used
        elif estimator == "two_point":
            est = two_point(problem, x, alpha, stream)
            queries += est.queries_used
        elif estimator == "spsa1":
            est = spsa1(problem, x, alpha, stream)
            queries += est.queries_used
        else:
            raise ValueError(f"unknown estimator {estimator!r}")

        f_value[t - 1] = fx
        f_gap[t - 1] = fx - f_star
        grad_norm_sq[t - 1] = float(np.sum(gx * gx))
        est_norm_sq[t - 1] = float(np.sum(est.vector**2))
        steps_done = t
        if not problem.in_box(x):
            exited_box = True

        x = x - eta * est.vector
        if not np.all(np.isfinite(x)) or float(np.linalg.norm(x)) > guard:
            diverged = True
            break

    if store_trajectory:
        X[steps_done] = x

    n = steps_done
    f_value, f_gap = f_value[:n], f_gap[:n]
    grad_norm_sq, est_norm_sq = grad_norm_sq[:n], est_norm_sq[:n]
    if store_trajectory:
        X = X[: n + 1]
        baselines = baselines[:n]

    # Output rule and final metric, matching each guarantee's left-hand side.
    if schedule.metric == "grad_sq_mean":
        final_metric = float(np.mean(grad_norm_sq)) if n else math.nan
        averaged_point = x
    elif schedule.averaging == "uniform_mean":
        final_metric = float(np.mean(f_gap)) if n else math.nan
        averaged_point = X[:n].mean(axis=0) if store_trajectory and n else x
    elif schedule.averaging == "rho_weighted":
        if store_trajectory and n:
            w = _rho_weights(n, schedule.rho)
            averaged_point = weighted_average(X[:n], w)
            final_metric = float(problem.eval(averaged_point) - f_star)
        else:
            averaged_point = x
            final_metric = float(problem.eval(x) - f_star)
    else:  # last iterate
        averaged_point = x
        final_metric = float(problem.eval(x) - f_star)

    return RunRecord(
        t=np.arange(1, n + 1),
        f_value=f_value,
        f_gap=f_gap,
        grad_norm_sq=grad_norm_sq,
        est_norm_sq=est_norm_sq,
        eta=eta,
        alpha=alpha,
        seed=seed,
        setting=schedule.setting,
        problem=problem.name,
        estimator=estimator,
        queries=queries,
        final_metric=final_metric,
        averaged_point=averaged_point,
        diverged=diverged,
        exited_box=exited_box,
        trajectory=X,
        baseline_values=baselines,
    )


def run_deterministic(problem: Problem, schedule: Schedule, seed: int, x1: np.ndarray,
                      estimator: str = "residual", store_trajectory: bool = False) -> RunRecord:
    return _run(problem, schedule, seed, x1, noisy=False, estimator=estimator,
                store_trajectory=store_trajectory)


def run_stochastic(problem: Problem, schedule: Schedule, seed: int, x1: np.ndarray,
                   estimator: str = "residual", store_trajectory: bool = False) -> RunRecord:
    if problem.eval_noisy is None:
        raise ConfigurationError(f"problem {problem.name!r} has no stochastic oracle")
    return _run(problem, schedule, seed, x1, noisy=True, estimator=estimator,
                store_trajectory=store_trajectory)
