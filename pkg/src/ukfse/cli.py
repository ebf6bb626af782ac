"""Command-line interface.

Subcommands:
  benchmark     Monte Carlo comparison of the selected filters -> CSV outputs
  simulate      single run with a full state dump for inspection
  alpha-check   embedding-constant feasibility conditions and error band
  backend-bench timing comparison of the compiled and pure kernels
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from ._pykernels import PROJECT_NONE
from .backend import available_backends, get_backend, have_native
from .bench import (
    ALL_FILTERS,
    SimConfig,
    build_config,
    config_from_file,
    override_config,
    run_monte_carlo,
    run_single,
    write_outputs,
)
from .errors import UkfseError
from .filters import FilterKind, make_filter
from .guideline import GuidelineInput, check_conditions, verify_attractor
from .numerics import Rng
from .satellite import SatParams


def _add_shared_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--filters", default=None,
                   help="comma list: " + ",".join(k.value for k in ALL_FILTERS))
    p.add_argument("--alpha", type=float, default=None, help="stable-embedding constant")
    p.add_argument("--duration", type=float, default=None, help="simulated seconds per run")
    p.add_argument("--h-truth", type=float, default=None, help="truth integrator substep [s]")
    p.add_argument("--out-dir", default=None, help="directory for CSV outputs")
    p.add_argument("--noise-free", action="store_true", default=None,
                   help="disable process and sensor noise")
    p.add_argument("--truth-noise", choices=("none", "brownian"), default=None,
                   help="rate-noise realization inside the truth integrator")
    p.add_argument("--backend", choices=("auto", "pure", "native"), default=None)
    p.add_argument("--workers", type=int, default=None, help="parallel Monte Carlo workers")


def _config_from_args(args) -> SimConfig:
    values = config_from_file(args.config) if args.config else {}
    cfg = build_config(values)
    filters = None
    if args.filters:
        filters = tuple(FilterKind.from_name(s.strip()) for s in args.filters.split(","))
    return override_config(
        cfg,
        master_seed=args.seed,
        n_runs=getattr(args, "runs", None),
        filters=filters,
        alpha=args.alpha,
        duration=args.duration,
        h_truth=args.h_truth,
        out_dir=args.out_dir,
        noise_free=args.noise_free,
        truth_noise=args.truth_noise,
        backend=args.backend,
        workers=args.workers,
    )


def _cmd_benchmark(args) -> int:
    cfg = _config_from_args(args)
    table = run_monte_carlo(cfg)
    header = f"{'filter':<14} {'avg_mse_q':>12} {'avg_md_q':>12} {'wall_s':>9} {'fail':>5} {'sigma':>6}"
    print(f"backend: {table.backend}   runs: {cfg.n_runs}   steps/run: {cfg.n_steps}")
    print(header)
    for row in table.rows:
        print(
            f"{row.kind.value:<14} {row.avg_mse_q:>12.4e} {row.avg_md_q:>12.4e} "
            f"{row.wall_clock_s:>9.2f} {row.failures:>5d} {row.sigma_points:>6d}"
        )
    if cfg.out_dir:
        paths = write_outputs(table, cfg, cfg.out_dir)
        print(f"wrote {paths['curves']}, {paths['summary']}, {paths['manifest']}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    cfg = override_config(cfg, n_runs=1)
    times, states, meas, records = run_single(cfg, args.run_index, keep_states=True)
    failed = {k.value: r.fail_reason for k, r in records.items() if r.failed}
    for name, reason in failed.items():
        print(f"{name}: FAILED ({reason})", file=sys.stderr)
    out_dir = cfg.out_dir or "."
    from pathlib import Path

    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    dump = path / "state_dump.csv"
    with dump.open("w") as fh:
        fh.write("t,series,qw,qx,qy,qz,wx,wy,wz\n")
        for k, t in enumerate(times):
            row = ",".join(repr(v) for v in states[k])
            fh.write(f"{t!r},truth,{row}\n")
        for kind in cfg.filters:
            rec = records[kind]
            if rec.failed or rec.states is None:
                continue
            for k, t in enumerate(times):
                row = ",".join(repr(v) for v in rec.states[k])
                fh.write(f"{t!r},{kind.value},{row}\n")
    print(f"wrote {dump}")
    return 1 if failed else 0


def _cmd_alpha_check(args) -> int:
    alpha_max = (2.0 / 3.0) / args.h
    print(f"h = {args.h!r}")
    print(f"feasible alpha interval from the step-size condition: 0 < alpha < {alpha_max!r}")
    if args.alpha is None:
        return 0
    inp = GuidelineInput(
        epsilon=args.epsilon, U=args.U, h=args.h, alpha=args.alpha, beta=args.beta
    )
    res = check_conditions(inp)
    print(f"alpha = {args.alpha!r}  (alpha*h = {inp.alpha_h!r})")
    print(f"condition 1 (0 < alpha*h < 2/3):            {'PASS' if res.cond1_ok else 'FAIL'}")
    print(f"condition 2 (0 < beta < margin < 1):        {'PASS' if res.cond2_ok else 'FAIL'}"
          f"  [margin = {res.margin!r}]")
    print(f"condition 3 (delta < epsilon):              {'PASS' if res.cond3_ok else 'FAIL'}")
    print(f"delta  = {res.delta!r}")
    print(f"delta0 = {res.delta0!r}")
    print(f"note: {res.note}")
    if args.verify:
        if not res.feasible:
            print("verification skipped: conditions do not hold", file=sys.stderr)
            return 1
        report = verify_attractor(
            inp, args.trajectories, args.steps, Rng(args.seed).substream(0)
        )
        print(
            f"verifier: {report.n_trajectories} trajectories x {report.n_steps} steps, "
            f"violations = {report.violations}, never_entered = {report.never_entered}, "
            f"max_entry_step = {report.max_entry_step}, "
            f"max_post_entry_abs_e = {report.max_post_entry_abs_e!r}"
        )
        for ex in report.examples:
            print(f"  counterexample: {ex}")
        if not report.ok:
            return 1
    return 0


def _cmd_backend_bench(args) -> int:
    sat = SatParams()
    h = 1.0 / sat.f_sample
    rng = Rng(args.seed).substream(9)
    n_steps = args.steps
    n_sub = args.substeps
    x0 = np.array([np.cos(np.pi / 4), np.sin(np.pi / 4), 0.0, 0.0, -0.01, 0.01, 0.01])
    noise = sat.sigma_omega_c * np.sqrt(h / n_sub) * rng.standard_normal((n_steps * n_sub, 3))

    results = {}
    for name in available_backends():
        be = get_backend(name)
        t0 = time.perf_counter()
        states = be.truth_rollout(x0, h / n_sub, n_sub, n_steps, noise, sat)
        t_truth = time.perf_counter() - t0

        inst = make_filter(FilterKind.UKF_SE, sat=sat, h=h)
        from .satellite import measure_clean, measurement_noise_std

        times = np.arange(1, n_steps + 1) * h
        meas = measure_clean(states[1:], times, sat)
        meas = meas + measurement_noise_std(sat) * rng.standard_normal(meas.shape)
        t0 = time.perf_counter()
        be.filter_rollout(x0, inst.est.P, meas, h, 2.0, PROJECT_NONE,
                          sat, inst.P_w, inst.P_v, inst.params)
        t_filter = time.perf_counter() - t0
        results[name] = (t_truth, t_filter)

    print(f"workload: {args.steps} filter steps, {args.substeps} truth substeps each")
    print(f"{'backend':<8} {'truth_s':>10} {'filter_s':>10} {'us/step':>10}")
    for name, (t_truth, t_filter) in results.items():
        print(f"{name:<8} {t_truth:>10.4f} {t_filter:>10.4f} {1e6 * t_filter / n_steps:>10.1f}")
    if "native" in results and "pure" in results:
        speedup = results["pure"][1] / results["native"][1]
        print(f"native speedup on the filter kernel: {speedup:.1f}x")
    elif not have_native():
        print("native backend not built; showing pure only")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ukfse", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("benchmark", help="Monte Carlo filter comparison")
    _add_shared_run_flags(p)
    p.add_argument("--runs", type=int, default=None, help="number of Monte Carlo runs")
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("simulate", help="single run with a full state dump")
    _add_shared_run_flags(p)
    p.add_argument("--run-index", type=int, default=0, help="which run's streams to use")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("alpha-check", help="embedding-constant selection conditions")
    p.add_argument("--h", type=float, required=True, help="discretization step [s]")
    p.add_argument("--alpha", type=float, default=None, help="embedding constant to test")
    p.add_argument("--epsilon", type=float, default=0.5, help="error-band radius in (0,1)")
    p.add_argument("--U", type=float, default=0.2, help="angular-rate bound [rad/s]")
    p.add_argument("--beta", type=float, default=0.01, help="decay margin in (0,1)")
    p.add_argument("--verify", action="store_true", help="simulate the attractor claim")
    p.add_argument("--trajectories", type=int, default=10_000)
    p.add_argument("--steps", type=int, default=1_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_alpha_check)

    p = sub.add_parser("backend-bench", help="compare compiled vs pure kernels")
    p.add_argument("--steps", type=int, default=500, help="filter steps to time")
    p.add_argument("--substeps", type=int, default=100, help="truth substeps per filter step")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_backend_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UkfseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
