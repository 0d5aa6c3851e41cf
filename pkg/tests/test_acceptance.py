"""Acceptance gate: twelve property and rate checks at stated tolerances.

Each test prints one PASS/FAIL line for its criterion before asserting, so a
plain pytest run yields a readable scoreboard. Tolerances are Monte Carlo
standard errors where the quantity is stochastic and fixed windows where the
claim is a scaling law.
"""

import numpy as np
import pytest

from zoresid.cli import main as cli_main
from zoresid.diagnostics import (
    check_proposition1,
    check_variance_nonsmooth,
    check_variance_smooth,
    estimate_c0,
    residual_steady_second_moment,
    variance_comparison_table,
)
from zoresid.optimizer import Schedule, make_schedule, run_deterministic, run_stochastic
from zoresid.problems import (
    add_value_noise,
    make_constant_problem,
    make_least_squares,
    make_logsumexp_problem,
    make_norm_problem,
    make_quadratic_problem,
)
from zoresid.smoothing import SmoothedSurrogate, check_smoothing_bounds
from zoresid.streams import RandomStream, sample_ball_batch, sample_sphere_batch
from zoresid.sweeps import dimension_sweep, fit_loglog_slope, fit_semilog


def verdict(num: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def test_criterion_01_sphere_moment_identity():
    # E||u u^T a||^2 = ||a||^2 / d, MC at N = 1e6, |error| <= 3*SE
    n = 1_000_000
    stream = RandomStream(101)
    worst = 0.0
    ok = True
    for d in (1, 4, 32):
        for a in (np.eye(d)[0], stream.normal(d)):
            u = sample_sphere_batch(stream, n, d)
            vals = np.sum(((u @ a)[:, None] * u) ** 2, axis=1)
            se = vals.std(ddof=1) / np.sqrt(n)
            err = abs(vals.mean() - a @ a / d)
            ok &= err <= 3 * se + 1e-12
            worst = max(worst, err / (3 * se + 1e-12))
    verdict(1, ok, f"sphere projection second moment, worst err/tolerance = {worst:.2f}")


def test_criterion_02_ball_second_moment():
    # E||u_ball||^2 = d/(d+2), MC, <= 3*SE
    n = 1_000_000
    stream = RandomStream(102)
    ok, worst = True, 0.0
    for d in (2, 8, 32):
        u = sample_ball_batch(stream, n, d)
        sq = np.sum(u * u, axis=1)
        se = sq.std(ddof=1) / np.sqrt(n)
        err = abs(sq.mean() - d / (d + 2.0))
        ok &= err <= 3 * se
        worst = max(worst, err / se)
    verdict(2, ok, f"ball second moment d/(d+2), worst |err|/SE = {worst:.2f}")


def test_criterion_03_smoothing_bounds():
    # norm: |f_a - f| <= L0*a; logsumexp: |f_a - f| <= L*a^2/2 and
    # ||grad f_a - grad f|| <= L*a (+5*SE), 20 probes, a in {0.05, 0.2}
    stream = RandomStream(103)
    ok, ratios = True, []
    for alpha in (0.05, 0.2):
        for p in (make_norm_problem(8), make_logsumexp_problem(8)):
            s = SmoothedSurrogate(p, alpha, mc_budget=200_000, mc_budget_grad=200_000)
            probes = 0.5 * stream.normal((20, 8))
            rep = check_smoothing_bounds(s, probes, stream)
            ok &= rep.passed
            ratios.append(rep.worst_ratio)
    verdict(3, ok, f"smoothing bounds at 20 probes x 2 radii, worst ratio = {max(ratios):.3f}")


def test_criterion_04_residual_unbiasedness():
    # conditional mean of the residual estimate equals grad f_alpha, which for
    # a quadratic equals grad f; per-coordinate <= 5*SE at N = 1e6, d = 8
    p = make_quadratic_problem(8, 1.0, 4.0)
    x = RandomStream(104).normal(8) * 0.3
    alpha, n = 0.1, 1_000_000
    baseline = float(p.eval(x)) + 0.37  # stale baseline, as the estimator holds one
    u = sample_sphere_batch(RandomStream(105), n, 8)
    w = 8 * (p.eval(x + alpha * u) - baseline) / alpha
    g = w[:, None] * u
    se = g.std(axis=0, ddof=1) / np.sqrt(n)
    err = np.abs(g.mean(axis=0) - p.grad(x))
    ok = bool(np.all(err <= 5 * se))
    verdict(4, ok, f"residual conditional mean vs smoothed gradient, worst |err|/SE = {np.max(err / se):.2f}")


def test_criterion_05_variance_recursion():
    # smooth recursion on every iterate of a 200-step logsumexp run (d=4);
    # nonsmooth bound on a 200-step norm run with measured c0
    lse = make_logsumexp_problem(4)
    x1 = np.ones(4) / 2
    sched = make_schedule("det_smooth_cvx", lse, T=200, x1=x1)
    rec = run_deterministic(lse, sched, 0, x1, store_trajectory=True)
    rep_s = check_variance_smooth(lse, rec, n_resample=20_000, grad_mc_budget=100_000,
                                  stream=RandomStream(106))

    norm = make_norm_problem(8)
    x1n = np.ones(8) / np.sqrt(8)
    sn = make_schedule("det_nonsmooth_cvx", norm, T=200, x1=x1n)
    recn = run_deterministic(norm, sn, 0, x1n, store_trajectory=True)
    c0 = estimate_c0(norm, sn.alpha, n_draws=400_000, stream=RandomStream(107)).c0_hat
    rep_n = check_variance_nonsmooth(norm, recn, c0, n_resample=20_000, stream=RandomStream(108))
    ok = rep_s.passed and rep_n.passed
    verdict(5, ok, f"variance recursion: smooth ratio {rep_s.worst_ratio:.3f}, "
                   f"nonsmooth ratio {rep_n.worst_ratio:.3f} (c0 = {c0:.2f})")


def test_criterion_06_least_squares_variance_inequality():
    # value variance <= (1/d) * gradient variance * 1.2; d=16, m=200,
    # 20 probes x 20 target-noise redraws
    p = make_least_squares(16, 200, mode="rademacher_rows", stream=RandomStream(109))
    rep = check_proposition1(p, n_x=20, n_b_redraws=20, stream=RandomStream(110))
    verdict(6, rep.passed, f"value/gradient variance worst ratio = {rep.worst_ratio:.3f} (limit 1.2)")


def test_criterion_07_nonsmooth_convex_rate():
    # norm d=8, T in {1e3, 4e3, 1.6e4}, 50 seeds; log-log slope in [-0.7, -0.3]
    p = make_norm_problem(8)
    x1 = np.ones(8) / np.sqrt(8)
    Ts = [1000, 4000, 16000]
    means = []
    for T in Ts:
        sched = make_schedule("det_nonsmooth_cvx", p, T=T, x1=x1)
        means.append(np.mean([run_deterministic(p, sched, s, x1).final_metric for s in range(50)]))
    slope = fit_loglog_slope(Ts, means)
    ok = -0.7 <= slope <= -0.3
    verdict(7, ok, f"nonsmooth convex rate slope = {slope:.3f} (target -0.5, window [-0.7, -0.3])")


def test_criterion_08_dimension_scaling():
    # T_eps vs d in {2,...,32} on the norm problem; log-log slope in [0.7, 1.3]
    cells, slope = dimension_sweep(
        make_norm_problem, "det_nonsmooth_cvx", 0.25, [2, 4, 8, 16, 32], [0, 1, 2],
        lambda p: np.ones(p.dim) / np.sqrt(p.dim), T_max=2**17)
    ok = slope is not None and 0.7 <= slope <= 1.3 and not any(c.censored for c in cells)
    verdict(8, ok, f"dimension scaling slope = {slope:.3f} (target 1, window [0.7, 1.3])")


def test_criterion_09_strongly_convex_linear_phase():
    # quadratic mu=1, L=4, d=8: semilog gap affine (R^2 >= 0.95) above the
    # floor, and the floor <= 9*L*alpha^2
    p = make_quadratic_problem(8, 1.0, 4.0)
    x1 = np.ones(8) / np.sqrt(8)
    sched = make_schedule("det_smooth_scvx", p, epsilon=0.05, x1=x1)
    rec = run_deterministic(p, sched, 0, x1)
    floor = float(np.mean(rec.f_gap[-rec.T // 10:]))
    floor_ok = floor <= 9 * p.constants.L * sched.alpha**2
    idx = np.nonzero(rec.f_gap > 10 * floor)[0]
    cut = int(idx[-1]) + 1 if len(idx) else rec.T
    fit = fit_semilog(rec.t[:cut], rec.f_gap[:cut])
    ok = floor_ok and fit["r2"] >= 0.95
    verdict(9, ok, f"linear phase R^2 = {fit['r2']:.4f} over {cut} steps, "
                   f"floor {floor:.2e} <= 9*L*alpha^2 = {9 * p.constants.L * sched.alpha**2:.2e}")


def test_criterion_10_stochastic_variance_scaling():
    # steady E||g||^2 noise component scales as sigma0^2/alpha^2: quadrupling
    # sigma0 multiplies it by 16 within +-30% (frozen step so x barely moves)
    x1 = np.ones(8) / np.sqrt(8)

    def steady(sigma0):
        vals = []
        for seed in (0, 1, 2):
            if sigma0 == 0.0:
                sched = Schedule(setting="det_nonsmooth_cvx", eta=1e-6, alpha=0.05,
                                 T=4000, averaging="uniform_mean")
                rec = run_deterministic(make_norm_problem(8), sched, seed, x1)
            else:
                sched = Schedule(setting="sto_nonsmooth_cvx", eta=1e-6, alpha=0.05,
                                 T=4000, averaging="uniform_mean")
                rec = run_stochastic(add_value_noise(make_norm_problem(8), sigma0), sched, seed, x1)
            vals.append(np.mean(rec.est_norm_sq[400:]))
        return float(np.mean(vals))

    m0, m1, m4 = steady(0.0), steady(0.1), steady(0.4)
    ratio = (m4 - m0) / (m1 - m0)
    ok = 16 * 0.7 <= ratio <= 16 * 1.3
    verdict(10, ok, f"noise-variance ratio for 4x sigma0 = {ratio:.2f} (target 16 +-30%)")


def test_criterion_11_estimator_variance_comparison():
    # f = 1: halving alpha quadruples the one-point second moment (+-20%)
    # while the two-point stays flat; residual tail <= one-point/10 on the
    # quadratic at alpha = 0.01, d = 8
    const = make_constant_problem(8, value=1.0)
    t = variance_comparison_table(const, np.zeros(8), [0.02, 0.01], n=100_000,
                                  stream=RandomStream(111))
    op_ratio = t["one_point"][0.01]["second_moment"] / t["one_point"][0.02]["second_moment"]
    tp_a, tp_b = t["two_point"][0.02]["second_moment"], t["two_point"][0.01]["second_moment"]
    tp_flat = abs(tp_b - tp_a) <= 0.2 * max(tp_a, 1e-12)

    quad = make_quadratic_problem(8, 1.0, 4.0)
    steady = residual_steady_second_moment(quad, np.zeros(8), 0.01, RandomStream(112))
    tq = variance_comparison_table(quad, np.zeros(8), [0.01], estimators=("one_point",),
                                   n=200_000, stream=RandomStream(113))
    op = tq["one_point"][0.01]["second_moment"]
    ok = abs(op_ratio - 4.0) <= 0.8 and tp_flat and steady <= op / 10
    verdict(11, ok, f"one-point alpha-halving ratio = {op_ratio:.3f}, two-point flat = {tp_flat}, "
                    f"residual/one-point = {steady / op:.4f} (limit 0.1)")


def test_criterion_12_negative_control(tmp_path):
    # halving the declared smoothness constant must break a diagnostics check
    # and make the CLI exit nonzero; the clean run must pass
    clean = cli_main(["diagnose", "smoothing", "--out", str(tmp_path / "clean"),
                      "--data-seed", "3", "--no-figures"])
    corrupt = cli_main(["diagnose", "smoothing", "--out", str(tmp_path / "bad"),
                        "--corrupt", "L=0.5", "--data-seed", "3", "--no-figures"])
    ok = clean == 0 and corrupt != 0
    verdict(12, ok, f"negative control: clean exit {clean}, corrupted-L exit {corrupt}")
