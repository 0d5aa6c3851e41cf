"""Command-line front end: single runs, sweeps, and diagnostics suites.

Outputs are delimited files (CSV rows per iteration, JSON summaries) plus
rendered matplotlib figures next to them. All commands are pure functions of
(config, seeds): re-running overwrites identical artifacts. The env var
ZO_THREADS caps the worker pool for seed-parallel runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import diagnostics, figures, smoothing, sweeps
from .optimizer import ConfigurationError, make_schedule, run_deterministic, run_stochastic
from .problems import PROBLEM_IDS, add_value_noise, estimate_sigma, make_problem
from .reports import BoundCheckReport
from .streams import RandomStream, sample_ball_batch, sample_sphere_batch

DIAGNOSE_SUITES = ("moments", "smoothing", "variance", "proposition1", "all")


def default_x1(problem, radius: float = 1.0) -> np.ndarray:
    center = problem.constants.x_star if problem.constants.x_star is not None else np.zeros(problem.dim)
    return center + radius * np.ones(problem.dim) / np.sqrt(problem.dim)


def _build_problem(args) -> "object":
    params = {}
    if args.problem == "quadratic":
        params = {"mu": args.mu, "L": args.L}
    elif args.problem == "lsq":
        params = {"m": args.m, "stream": RandomStream(args.data_seed)}
    problem = make_problem(args.problem, args.d, **params)
    if args.sigma0 is not None and args.problem != "lsq":
        problem = add_value_noise(problem, args.sigma0)
    if args.problem == "lsq" and problem.constants.sigma0 is None:
        est = estimate_sigma(problem, n_points=5, n_draws=20_000, stream=RandomStream(args.data_seed + 1))
        problem = replace(problem, constants=replace(problem.constants,
                                                     sigma0=est["sigma0_hat"],
                                                     sigma1=est["sigma1_hat"]))
    return problem


def _run_one_seed(payload: dict) -> dict:
    """Worker for seed-parallel runs; rebuilds the problem in the child."""
    ns = argparse.Namespace(**payload["args"])
    problem = _build_problem(ns)
    x1 = default_x1(problem, payload["radius"])
    sched = make_schedule(payload["setting"], problem, T=payload.get("T"),
                          epsilon=payload.get("eps"), x1=x1, c0=payload["c0"])
    if payload.get("eta_override"):
        sched = replace(sched, eta=payload["eta_override"])
    if payload.get("alpha_override"):
        sched = replace(sched, alpha=payload["alpha_override"])
    runner = run_stochastic if sched.stochastic else run_deterministic
    rec = runner(problem, sched, payload["seed"], x1, estimator=payload["estimator"])
    out_dir = Path(payload["out"])
    rec.to_csv(out_dir / f"run_{payload['seed']}.csv")
    summary = rec.summary()
    summary["schedule_warnings"] = sched.warnings
    summary["_curve"] = {"t": rec.t.tolist(), "f_gap": rec.f_gap.tolist(),
                         "grad_norm_sq": rec.grad_norm_sq.tolist()}
    return summary


def _pool_size() -> int:
    try:
        return max(1, int(os.environ.get("ZO_THREADS", "1")))
    except ValueError:
        return 1


def cmd_run(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = _build_problem(args)
    x1 = default_x1(problem, args.radius)
    sched = make_schedule(args.setting, problem, T=args.T, epsilon=args.eps, x1=x1, c0=args.c0)

    payloads = [{
        "args": vars(args), "setting": args.setting, "T": args.T, "eps": args.eps,
        "seed": seed, "estimator": args.estimator, "out": str(out_dir), "radius": args.radius,
        "c0": args.c0, "eta_override": args.eta, "alpha_override": args.alpha,
    } for seed in args.seeds]

    workers = _pool_size()
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_run_one_seed, payloads))
    else:
        summaries = [_run_one_seed(p) for p in payloads]

    curves = [s.pop("_curve") for s in summaries]
    metrics = [s["final_metric"] for s in summaries]
    aggregate = {
        "problem": problem.name,
        "setting": args.setting,
        "d": problem.dim,
        "T": sched.T,
        "eta": sched.eta,
        "alpha": sched.alpha,
        "seeds": list(args.seeds),
        "mean_final_metric": float(np.mean(metrics)),
        "std_final_metric": float(np.std(metrics)),
        "any_diverged": any(s["diverged"] for s in summaries),
        "any_exited_box": any(s["exited_box"] for s in summaries),
        "schedule_warnings": sched.warnings,
        "runs": summaries,
    }
    (out_dir / "summary.json").write_text(json.dumps(aggregate, indent=2))

    if not args.no_figures:
        class _Curve:  # minimal record view for plotting
            def __init__(self, seed, c):
                self.seed = seed
                self.t = np.asarray(c["t"])
                self.f_gap = np.asarray(c["f_gap"])
                self.grad_norm_sq = np.asarray(c["grad_norm_sq"])
                self.grad_metric = sched.metric == "grad_sq_mean"

        recs = [_Curve(s["seed"], c) for s, c in zip(summaries, curves)]
        figures.plot_gap_curves(recs, out_dir / "run_gap.png",
                                title=f"{problem.name} / {args.setting}")
    print(f"wrote {len(summaries)} runs to {out_dir}; mean final metric "
          f"{aggregate['mean_final_metric']:.4g}")
    return 0


def _write_sweep(out_dir: Path, cells, slope, key_name: str, no_figures: bool, target=None) -> None:
    with open(out_dir / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([key_name, "T_eps", "metric", "censored"])
        for c in cells:
            writer.writerow([c.key, "" if c.T_eps is None else c.T_eps,
                             "" if c.metric is None else repr(c.metric), int(c.censored)])
    summary = {
        key_name: [c.key for c in cells],
        "T_eps": [c.T_eps for c in cells],
        "censored": [c.censored for c in cells],
        "fitted_slope": slope,
        "target_epsilon": target,
    }
    (out_dir / "sweep_summary.json").write_text(json.dumps(summary, indent=2))
    good = [c for c in cells if not c.censored]
    if not no_figures and len(good) >= 2:
        figures.plot_sweep([c.key for c in good], [c.T_eps for c in good],
                           out_dir / "sweep.png", xlabel=key_name, slope=slope)


def cmd_sweep_dimension(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if len(args.d_sweep) < 3:
        print("error: d_sweep needs at least 3 values", file=sys.stderr)
        return 2
    if args.eps is None:
        print("error: missing target precision eps", file=sys.stderr)
        return 2

    def factory(d):
        sub = argparse.Namespace(**{**vars(args), "d": d})
        return _build_problem(sub)

    cells, slope = sweeps.dimension_sweep(
        factory, args.setting, args.eps, args.d_sweep, args.seeds,
        lambda p: default_x1(p, args.radius), T_max=args.T_max, c0=args.c0)
    _write_sweep(out_dir, cells, slope, "d", args.no_figures, target=args.eps)
    print(f"dimension sweep slope: {slope}")
    return 0


def cmd_sweep_precision(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if len(args.eps_list) < 3:
        print("error: eps_list needs at least 3 values", file=sys.stderr)
        return 2
    problem = _build_problem(args)
    x1 = default_x1(problem, args.radius)
    cells, slope = sweeps.precision_sweep(problem, args.setting, args.eps_list,
                                          args.seeds, x1, T_max=args.T_max, c0=args.c0)
    _write_sweep(out_dir, cells, slope, "epsilon", args.no_figures)
    print(f"precision sweep exponent: {slope}")
    return 0


def _corruption(args) -> dict:
    out = {}
    for item in args.corrupt or []:
        name, _, factor = item.partition("=")
        out[name] = float(factor)
    return out


def _apply_corruption(problem, corruption: dict):
    c = problem.constants
    updates = {}
    for name, factor in corruption.items():
        if name not in ("L", "L0", "mu"):
            raise ConfigurationError(f"cannot corrupt constant {name!r}")
        updates[name] = getattr(c, name) * factor
    return replace(problem, constants=replace(c, **updates))


def _suite_moments(stream: RandomStream, n: int = 1_000_000) -> list[BoundCheckReport]:
    reports = []
    rep = BoundCheckReport(name="sphere_projection_second_moment",
                           slack_policy="3*SE Monte Carlo", seed=stream.seed, n=n)
    for d in (1, 4, 32):
        for label in ("e1", "random"):
            a = np.zeros(d)
            if label == "e1":
                a[0] = 1.0
            else:
                a = stream.normal(d)
            u = sample_sphere_batch(stream, n, d)
            proj = (u @ a)[:, None] * u
            vals = np.sum(proj * proj, axis=1)
            est, se = float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n))
            target = float(np.dot(a, a)) / d
            # d = 1 draws are exact up to round-off, so SE alone can be 0
            rep.add(abs(est - target), 0.0, 3.0 * se + 1e-12 * max(1.0, target))
    reports.append(rep)

    rep = BoundCheckReport(name="ball_radial_second_moment",
                           slack_policy="3*SE Monte Carlo", seed=stream.seed, n=n)
    for d in (2, 8, 32):
        u = sample_ball_batch(stream, n, d)
        vals = np.sum(u * u, axis=1)
        est, se = float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n))
        rep.add(abs(est - d / (d + 2.0)), 0.0, 3.0 * se)
    reports.append(rep)
    return reports


def _suite_smoothing(stream: RandomStream, corruption: dict) -> list[BoundCheckReport]:
    reports = []
    norm = _apply_corruption(make_problem("norm", 8), corruption)
    quad = _apply_corruption(make_problem("quadratic", 8, mu=4.0, L=4.0), corruption)
    lse = _apply_corruption(make_problem("logsumexp", 4), corruption)
    probes = {p.name: default_x1(p, 0.8) + 0.1 * stream.normal((5, p.dim))
              for p in (norm, quad, lse)}
    for problem, alpha in ((norm, 0.1), (quad, 0.1), (lse, 0.1)):
        s = smoothing.SmoothedSurrogate(problem, alpha, mc_budget=50_000, mc_budget_grad=200_000)
        reports.append(smoothing.check_smoothing_bounds(s, probes[problem.name], stream))
    return reports


def _suite_variance(stream: RandomStream, corruption: dict) -> list[BoundCheckReport]:
    reports = []
    norm = _apply_corruption(make_problem("norm", 8), corruption)
    x1 = default_x1(norm)
    sched = make_schedule("det_nonsmooth_cvx", norm, T=200, x1=x1)
    rec = run_deterministic(norm, sched, seed=stream.seed, x1=x1, store_trajectory=True)
    c0 = diagnostics.estimate_c0(norm, sched.alpha, n_draws=200_000, stream=stream).c0_hat
    diagnostics.cache_c0(norm.dim, c0)
    reports.append(diagnostics.check_variance_nonsmooth(norm, rec, c0, n_resample=5_000,
                                                        stream=stream, stride=4))

    quad = _apply_corruption(make_problem("quadratic", 4, mu=1.0, L=4.0), corruption)
    x1q = default_x1(quad)
    schedq = make_schedule("det_smooth_cvx", quad, T=200, x1=x1q)
    recq = run_deterministic(quad, schedq, seed=stream.seed, x1=x1q, store_trajectory=True)
    reports.append(diagnostics.check_variance_smooth(quad, recq, n_resample=5_000,
                                                     stream=stream, stride=4))
    return reports


def _suite_proposition1(stream: RandomStream) -> list[BoundCheckReport]:
    lsq = make_problem("lsq", 16, m=200, stream=RandomStream(stream.seed + 5))
    return [diagnostics.check_proposition1(lsq, n_x=20, n_b_redraws=20, stream=stream)]


def cmd_diagnose(args) -> int:
    if args.suite not in DIAGNOSE_SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from {DIAGNOSE_SUITES}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    corruption = _corruption(args)
    stream = RandomStream(args.data_seed)

    suites = [args.suite] if args.suite != "all" else ["moments", "smoothing", "variance", "proposition1"]
    all_pass = True
    for suite in suites:
        if suite == "moments":
            reports = _suite_moments(stream)
        elif suite == "smoothing":
            reports = _suite_smoothing(stream, corruption)
        elif suite == "variance":
            reports = _suite_variance(stream, corruption)
        else:
            reports = _suite_proposition1(stream)
        payload = [r.to_dict() for r in reports]
        (out_dir / f"diagnose_{suite}.json").write_text(json.dumps(payload, indent=2))
        for r in reports:
            print(r.summary_line())
            all_pass &= r.passed
    return 0 if all_pass else 1


def cmd_estimate_constants(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = _build_problem(args)
    stream = RandomStream(args.data_seed)
    out = {"problem": problem.name, "d": problem.dim}
    if "lipschitz" in problem.class_tags:
        est = diagnostics.estimate_c0(problem, args.alpha or 0.1, n_draws=args.n_draws, stream=stream)
        diagnostics.cache_c0(est.d, est.c0_hat)
        out["c0_hat"] = est.c0_hat
        out["c0_alpha"] = args.alpha or 0.1
    if problem.is_stochastic:
        out.update(estimate_sigma(problem, n_points=5, n_draws=min(args.n_draws, 100_000), stream=stream))
    (out_dir / "constants.json").write_text(json.dumps(out, indent=2))
    print(json.dumps(out, indent=2))
    return 0


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zoresid",
                                     description="One-point residual feedback zeroth-order optimization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="flat JSON config; CLI flags win")
        p.add_argument("--problem", choices=PROBLEM_IDS, default="norm")
        p.add_argument("--d", type=int, default=8)
        p.add_argument("--setting", default="det_nonsmooth_cvx")
        p.add_argument("--estimator", default="residual")
        p.add_argument("--T", type=int, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--seeds", type=_int_list, default=[0])
        p.add_argument("--out", type=Path, default=Path("zo_out"))
        p.add_argument("--eta", type=float, default=None, help="explicit step-size override")
        p.add_argument("--alpha", type=float, default=None, help="explicit smoothing-radius override")
        p.add_argument("--sigma0", type=float, default=None, help="additive value-noise level")
        p.add_argument("--radius", type=float, default=1.0, help="||x1 - x*|| of the start point")
        p.add_argument("--c0", type=float, default=1.0)
        p.add_argument("--mu", type=float, default=1.0)
        p.add_argument("--L", type=float, default=4.0)
        p.add_argument("--m", type=int, default=200, help="least-squares sample count")
        p.add_argument("--data-seed", type=int, default=0)
        p.add_argument("--no-figures", action="store_true")

    p_run = sub.add_parser("run", help="single configuration, one run per seed")
    common(p_run)

    p_sd = sub.add_parser("sweep-d", help="dimension sweep of the empirical sample complexity")
    common(p_sd)
    p_sd.add_argument("--d-sweep", type=_int_list, default=[2, 4, 8, 16, 32])
    p_sd.add_argument("--T-max", type=int, default=2**17)

    p_se = sub.add_parser("sweep-eps", help="precision sweep of the empirical sample complexity")
    common(p_se)
    p_se.add_argument("--eps-list", type=_float_list, default=[0.4, 0.2, 0.1])
    p_se.add_argument("--T-max", type=int, default=2**17)

    p_diag = sub.add_parser("diagnose", help="run a diagnostics suite")
    common(p_diag)
    p_diag.add_argument("suite", nargs="?", default="all")
    p_diag.add_argument("--corrupt", action="append", default=None,
                        metavar="NAME=FACTOR", help="scale a declared constant (negative control)")

    p_est = sub.add_parser("estimate-constants", help="measure c0 and noise levels")
    common(p_est)
    p_est.add_argument("--n-draws", type=int, default=500_000)
    return parser


def _merge_config(args: argparse.Namespace, argv: list[str]) -> argparse.Namespace:
    if args.config is None:
        return args
    cfg = json.loads(Path(args.config).read_text())
    explicit = {tok.lstrip("-").replace("-", "_").split("=")[0] for tok in argv if tok.startswith("--")}
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            print(f"error: unknown config field {key!r}", file=sys.stderr)
            raise SystemExit(2)
        if attr in explicit:
            continue  # command line wins
        if attr in ("seeds", "d_sweep") and isinstance(value, str):
            value = _int_list(value)
        if attr == "eps_list" and isinstance(value, str):
            value = _float_list(value)
        setattr(args, attr, value)
    return args


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args, argv)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep-d":
            return cmd_sweep_dimension(args)
        if args.command == "sweep-eps":
            return cmd_sweep_precision(args)
        if args.command == "diagnose":
            return cmd_diagnose(args)
        if args.command == "estimate-constants":
            return cmd_estimate_constants(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
