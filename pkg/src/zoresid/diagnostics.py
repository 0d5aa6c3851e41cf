"""Empirical verification of the variance lemmas, moment identities, and the
least-squares value/gradient variance inequality.

Conditional second moments are estimated by freezing a realized run and
resampling only the current direction (and noise draw, in stochastic mode),
holding the trajectory prefix and the stored residual baseline fixed. That is
the quantity the per-iterate variance bounds control. All Monte Carlo
inequality checks carry explicit standard errors and pass/fail with stated
SE slack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optimizer import RunRecord
from .problems import Problem, redraw_lsq_noise
from .reports import BoundCheckReport
from .streams import RandomStream, sample_rademacher_batch, sample_sphere_batch

__all__ = [
    "C0Estimate",
    "estimate_c0",
    "get_cached_c0",
    "cache_c0",
    "check_variance_nonsmooth",
    "check_variance_smooth",
    "check_proposition1",
    "value_gradient_variance_exact",
    "check_pl_inequality",
    "variance_comparison_table",
    "conditional_second_moment",
    "PreconditionError",
]

_CHUNK = 200_000


class PreconditionError(RuntimeError):
    """The schedule violates the precondition of the bound being checked."""


@dataclass
class C0Estimate:
    d: int
    c0_hat: float
    n_draws: int


_C0_CACHE: dict[int, float] = {}


def cache_c0(d: int, c0_hat: float) -> None:
    _C0_CACHE[int(d)] = float(c0_hat)


def get_cached_c0(d: int, default: float = 1.0) -> float:
    return _C0_CACHE.get(int(d), default)


def estimate_c0(
    problem: Problem,
    alpha: float,
    n_draws: int = 1_000_000,
    probe_points: np.ndarray | None = None,
    stream: RandomStream | None = None,
) -> C0Estimate:
    """Empirical fourth-moment constant of sphere-restricted evaluations.

    For g(u) = f(x + alpha*u) with f L0-Lipschitz, the fourth central moment
    obeys sqrt(E[(g - Eg)^4]) <= c0 (alpha*L0)^2 / d; c0_hat is the measured
    ratio, maximized over probe points. It is a surrogate, never asserted
    against a stated value.
    """
    if "lipschitz" not in problem.class_tags:
        raise PreconditionError("c0 estimation needs a Lipschitz-tagged problem")
    stream = stream if stream is not None else RandomStream(0)
    d = problem.dim
    if probe_points is None:
        center = problem.constants.x_star if problem.constants.x_star is not None else np.zeros(d)
        offs = stream.normal((3, d))
        offs /= np.maximum(np.linalg.norm(offs, axis=1, keepdims=True), 1e-12)
        probe_points = center + offs * min(1.0, problem.constants.box_radius / 2.0)
    L0 = problem.constants.L0
    c0_hat = 0.0
    for x in np.atleast_2d(probe_points):
        # two-pass: mean first, then the central fourth moment
        chunks = []
        while sum(len(v) for v in chunks) < n_draws:
            k = min(_CHUNK, n_draws - sum(len(v) for v in chunks))
            u = sample_sphere_batch(stream, k, d)
            chunks.append(problem.eval(x + alpha * u))
        mean = sum(float(np.sum(v)) for v in chunks) / n_draws
        m4 = sum(float(np.sum((v - mean) ** 4)) for v in chunks) / n_draws
        c0_hat = max(c0_hat, d * np.sqrt(m4) / (alpha * L0) ** 2)
    return C0Estimate(d=d, c0_hat=float(c0_hat), n_draws=n_draws)


def conditional_second_moment(
    problem: Problem,
    x: np.ndarray,
    alpha: float,
    baseline: float,
    stream: RandomStream,
    n: int,
    noisy: bool = False,
) -> tuple[float, float]:
    """MC estimate of E||g||^2 for g = d*(f(x+alpha*u) - baseline)/alpha * u
    with u resampled on the unit sphere; returns (mean, std_err)."""
    d = problem.dim
    total, total_sq, seen = 0.0, 0.0, 0
    while seen < n:
        k = min(_CHUNK, n - seen)
        u = sample_sphere_batch(stream, k, d)
        pts = x + alpha * u
        if noisy:
            v = problem.eval_noisy(pts, stream)
        else:
            v = problem.eval(pts)
        s = (d / alpha) ** 2 * (v - baseline) ** 2  # ||u|| = 1
        total += float(np.sum(s))
        total_sq += float(np.sum(s * s))
        seen += k
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return mean, float(np.sqrt(var / n))


def _require_trajectory(record: RunRecord) -> None:
    if record.trajectory is None or record.baseline_values is None:
        raise ValueError("variance checks need a run with store_trajectory=True")


def check_variance_nonsmooth(
    problem: Problem,
    record: RunRecord,
    c0_hat: float,
    n_resample: int = 20_000,
    stream: RandomStream | None = None,
    stochastic: bool = False,
    stride: int = 1,
) -> BoundCheckReport:
    """Per-iterate conditional E||g_t||^2 against the Lipschitz-case bound.

    Deterministic: 12*c0*d*L0^2. Stochastic: 24*c0*d*L0^2 + 24*d^2*sigma0^2/alpha^2.
    Requires the run to have used eta <= alpha/(3*d*L0).
    """
    _require_trajectory(record)
    stream = stream if stream is not None else RandomStream(record.seed + 1)
    d, L0 = problem.dim, problem.constants.L0
    alpha, eta = record.alpha, record.eta
    if eta > alpha / (3.0 * d * L0) * (1.0 + 1e-9):
        raise PreconditionError(f"eta={eta:g} violates the cap alpha/(3dL0)={alpha / (3 * d * L0):g}")
    if stochastic:
        sigma0 = problem.constants.sigma0
        if sigma0 is None:
            raise PreconditionError("stochastic check needs sigma0")
        rhs = 24.0 * c0_hat * d * L0**2 + 24.0 * d**2 * sigma0**2 / alpha**2
    else:
        rhs = 12.0 * c0_hat * d * L0**2
    report = BoundCheckReport(
        name=f"variance_nonsmooth[{problem.name},{'sto' if stochastic else 'det'}]",
        slack_policy="3*SE on the resampled conditional second moment",
        seed=stream.seed,
        n=n_resample,
    )
    for i in range(0, record.T, stride):
        x_t = record.trajectory[i]
        baseline = record.baseline_values[i]
        lhs, se = conditional_second_moment(problem, x_t, alpha, baseline, stream, n_resample, noisy=stochastic)
        report.add(lhs, rhs, 3.0 * se)
    return report


def check_variance_smooth(
    problem: Problem,
    record: RunRecord,
    n_resample: int = 20_000,
    grad_mc_budget: int = 200_000,
    stream: RandomStream | None = None,
    stochastic: bool = False,
    stride: int = 1,
) -> BoundCheckReport:
    """Per-iterate conditional E||g_t||^2 against the smooth-case recursion.

    Deterministic: (1/2)||g_{t-1}||^2 + 8d||grad f_a(x_t)||^2
                   + 8d||grad f_a(x_{t-1})||^2 + 10 d^2 L^2 alpha^2.
    Stochastic: (1/4) carry, 16d gradient terms, plus 64 d^2 sigma0^2/alpha^2
                + 32 d sigma1^2 + 10 d^2 L^2 alpha^2.
    """
    from .smoothing import SmoothedSurrogate, eval_grad_falpha_mc, grad_falpha_exact, has_exact_falpha

    _require_trajectory(record)
    stream = stream if stream is not None else RandomStream(record.seed + 2)
    d, L0, L = problem.dim, problem.constants.L0, problem.constants.L
    alpha, eta = record.alpha, record.eta
    cap = alpha / ((8.0 if stochastic else 4.0) * d * L0)
    if eta > cap * (1.0 + 1e-9):
        raise PreconditionError(f"eta={eta:g} violates the cap {cap:g}")
    if stochastic:
        sigma0, sigma1 = problem.constants.sigma0, problem.constants.sigma1
        if sigma0 is None or sigma1 is None:
            raise PreconditionError("stochastic check needs sigma0 and sigma1")
        carry, gcoef = 0.25, 16.0
        noise_terms = 64.0 * d**2 * sigma0**2 / alpha**2 + 32.0 * d * sigma1**2
    else:
        carry, gcoef = 0.5, 8.0
        noise_terms = 0.0
    base_rhs = 10.0 * d**2 * L**2 * alpha**2 + noise_terms

    surrogate = SmoothedSurrogate(problem, alpha, mc_budget_grad=grad_mc_budget)
    exact = has_exact_falpha(problem)
    grad_cache: dict[int, tuple[np.ndarray, float]] = {}

    def smoothed_grad(i: int) -> tuple[np.ndarray, float]:
        # returns (grad f_alpha at trajectory index i, norm SE)
        if i not in grad_cache:
            x = record.trajectory[i]
            if exact:
                grad_cache[i] = (grad_falpha_exact(surrogate, x), 0.0)
            else:
                est = eval_grad_falpha_mc(surrogate, x, stream, grad_mc_budget)
                grad_cache[i] = (est["mean_vector"], float(np.linalg.norm(est["std_err_vector"])))
        return grad_cache[i]

    report = BoundCheckReport(
        name=f"variance_smooth[{problem.name},{'sto' if stochastic else 'det'}]",
        slack_policy="3*SE on lhs; gradient-MC uncertainty propagated into rhs slack",
        seed=stream.seed,
        n=n_resample,
    )
    for i in range(0, record.T, stride):
        x_t = record.trajectory[i]
        baseline = record.baseline_values[i]
        lhs, se = conditional_second_moment(problem, x_t, alpha, baseline, stream, n_resample, noisy=stochastic)
        g_prev_sq = record.est_norm_sq[i - 1] if i >= 1 else 0.0  # ||g_0|| = 0
        ga_t, se_t = smoothed_grad(i)
        ga_p, se_p = smoothed_grad(max(i - 1, 0))
        rhs = (carry * g_prev_sq
               + gcoef * d * float(np.sum(ga_t**2))
               + gcoef * d * float(np.sum(ga_p**2))
               + base_rhs)
        rhs_slack = gcoef * d * (2.0 * float(np.linalg.norm(ga_t)) * se_t + se_t**2
                                 + 2.0 * float(np.linalg.norm(ga_p)) * se_p + se_p**2)
        report.add(lhs, rhs, 3.0 * se + rhs_slack)
    return report


def value_gradient_variance_exact(lsq_problem: Problem, x: np.ndarray) -> tuple[float, float]:
    """Closed-form noise expectations of the two least-squares variances at x.

    With r_i = a_i^T(x - x_gen) - z_i, z_i iid standard normal, both the value
    variance E[(1/m) sum (f_i - f)^2] and the gradient variance
    E[(1/m) sum ||grad f_i - grad f||^2] are polynomials in c = A(x - x_gen):
    Gaussian moments give E r_i^2 = c_i^2 + 1 and E r_i^4 = c_i^4 + 6c_i^2 + 3.
    """
    data = lsq_problem.lsq_data
    if data is None:
        raise PreconditionError("needs a least-squares problem")
    A, m = data.A, data.m
    c = A @ (np.asarray(x, dtype=float) - data.x_gen)
    row_sq = np.sum(A * A, axis=1)
    e_fi = c * c + 1.0
    e_fi_sq = c**4 + 6.0 * c * c + 3.0
    var_fi = e_fi_sq - e_fi**2  # = 4c^2 + 2
    # E[(1/m) sum f_i^2] - E[fbar^2], fbar the sample mean over i
    value_var = float(np.mean(e_fi_sq) - (np.sum(var_fi) / m**2 + np.mean(e_fi) ** 2))
    e_grad_sq = 4.0 * row_sq * e_fi
    e_gbar_sq = 4.0 / m**2 * (float(np.sum((A.T @ c) ** 2)) + float(np.sum(row_sq)))
    grad_var = float(np.mean(e_grad_sq)) - e_gbar_sq
    return value_var, grad_var


def check_proposition1(
    lsq_problem: Problem,
    n_x: int = 20,
    n_b_redraws: int = 20,
    stream: RandomStream | None = None,
    ratio_slack: float = 0.2,
    probe_scale: float = 0.5,
) -> BoundCheckReport:
    """Value variance <= (1/d) * gradient variance for the least-squares suite.

    Both sides are brute-force sums over the data, averaged over fresh noise
    redraws of b at each probe point; the inequality needs ||a_i||^2 >= d.
    Probes sit near the generating parameter: the value variance carries
    quartic residual terms absent from the gradient side, so the inequality
    degrades (and eventually fails) far from it.
    """
    if lsq_problem.lsq_data is None:
        raise PreconditionError("check_proposition1 needs a least-squares problem")
    stream = stream if stream is not None else RandomStream(0)
    d = lsq_problem.dim
    data = lsq_problem.lsq_data
    notes = ""
    if float(np.min(np.sum(data.A**2, axis=1))) < d - 1e-9:
        notes = "warning: rows violate ||a_i||^2 >= d; hypothesis of the bound unmet"
    center = data.x_gen
    probes = center + probe_scale * stream.normal((n_x, d)) / np.sqrt(d)

    report = BoundCheckReport(
        name="proposition1_value_vs_gradient_variance",
        slack_policy=f"rhs inflated by {ratio_slack:.0%}; both sides exact sums averaged over b redraws",
        seed=stream.seed,
        n=n_b_redraws,
        notes=notes,
    )
    for x in probes:
        lhs_acc, rhs_acc = 0.0, 0.0
        for _ in range(n_b_redraws):
            prob = redraw_lsq_noise(lsq_problem, stream)
            A, b, m = prob.lsq_data.A, prob.lsq_data.b, prob.lsq_data.m
            r = A @ x - b
            f_i = r * r
            f_bar = float(np.mean(f_i))
            lhs_acc += float(np.mean((f_i - f_bar) ** 2))
            grads = 2.0 * r[:, None] * A
            g_bar = grads.mean(axis=0)
            rhs_acc += float(np.mean(np.sum((grads - g_bar) ** 2, axis=1)))
        lhs = lhs_acc / n_b_redraws
        rhs = rhs_acc / (n_b_redraws * d)
        report.add(lhs, rhs, ratio_slack * rhs)
    return report


def check_pl_inequality(problem: Problem, probes: np.ndarray) -> BoundCheckReport:
    """Exact check of 2*mu*(f(x) - f*) <= ||grad f(x)||^2 at each probe."""
    if not {"smooth", "strongly_convex"} <= problem.class_tags:
        raise PreconditionError("PL check needs a smooth, strongly convex problem")
    mu, f_star = problem.constants.mu, problem.constants.f_star
    report = BoundCheckReport(
        name=f"pl_inequality[{problem.name}]",
        slack_policy="exact evaluation; float round-off slack only",
    )
    for x in np.atleast_2d(probes):
        lhs = 2.0 * mu * (float(problem.eval(x)) - f_star)
        rhs = float(np.sum(np.asarray(problem.grad(x)) ** 2))
        report.add(lhs, rhs, 1e-9 * max(1.0, abs(rhs)))
    return report


def variance_comparison_table(
    problem: Problem,
    x: np.ndarray,
    alphas,
    estimators=("one_point", "two_point", "spsa1"),
    n: int = 200_000,
    stream: RandomStream | None = None,
) -> dict:
    """MC E||G||^2 per (estimator, alpha) at a fixed point.

    Shows the (f(x)/alpha)^2 blow-up of the naive one-point estimators versus
    the near alpha-independence of the two-point estimator. The residual
    entry, when requested, is the post-burn-in tail of an actual run.
    """
    stream = stream if stream is not None else RandomStream(0)
    x = np.asarray(x, dtype=float)
    d = problem.dim
    fx = float(problem.eval(x))
    table: dict[str, dict[float, dict]] = {}
    for est in estimators:
        table[est] = {}
        for alpha in alphas:
            if est == "residual":
                table[est][alpha] = {"second_moment": residual_steady_second_moment(problem, x, alpha, stream),
                                     "std_err": None}
                continue
            total, total_sq, seen = 0.0, 0.0, 0
            while seen < n:
                k = min(_CHUNK, n - seen)
                if est == "spsa1":
                    u = sample_rademacher_batch(stream, k, d)
                    v = problem.eval(x + alpha * u)
                    s = (v / alpha) ** 2 * d  # ||u||^2 = d
                elif est == "one_point":
                    u = sample_sphere_batch(stream, k, d)
                    v = problem.eval(x + alpha * u)
                    s = (d * v / alpha) ** 2
                elif est == "two_point":
                    u = sample_sphere_batch(stream, k, d)
                    v = problem.eval(x + alpha * u)
                    s = (d * (v - fx) / alpha) ** 2
                else:
                    raise ValueError(f"unknown estimator {est!r}")
                total += float(np.sum(s))
                total_sq += float(np.sum(s * s))
                seen += k
            mean = total / n
            var = max(total_sq / n - mean * mean, 0.0)
            table[est][alpha] = {"second_moment": mean, "std_err": float(np.sqrt(var / n))}
    return table


def residual_steady_second_moment(
    problem: Problem,
    x1: np.ndarray,
    alpha: float,
    stream: RandomStream,
    T: int = 3000,
    tail_fraction: float = 0.2,
) -> float:
    """Tail-averaged ||g_t||^2 of a residual-feedback run started at x1."""
    from .optimizer import Schedule, run_deterministic

    d, L0 = problem.dim, problem.constants.L0
    sched = Schedule(setting="det_nonsmooth_cvx", eta=alpha / (4.0 * d * L0), alpha=alpha,
                     T=T, averaging="uniform_mean")
    rec = run_deterministic(problem, sched, seed=stream.seed + 17, x1=np.asarray(x1, dtype=float))
    tail = rec.est_norm_sq[int((1.0 - tail_fraction) * rec.T):]
    return float(np.mean(tail))
