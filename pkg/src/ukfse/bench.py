"""Monte Carlo benchmark: truth generation, filter runs, metrics, outputs.

Each run owns RNG streams derived from (master_seed, run_index, channel), so
serial and parallel execution produce identical numbers.  Per-run curves are
reduced into per-filter averages; only wall-clock columns vary between
re-runs of the same configuration.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from ._pykernels import PROJECT_FORMULA, PROJECT_NONE, PROJECT_OPTIMIZE
from .backend import get_backend
from .errors import ConfigError, UkfseError
from .filters import (
    AMBIENT_KINDS,
    P0_TRUTH_DIAG,
    X0_MEAN,
    FilterKind,
    make_filter,
    sigma_point_count,
    step_filter,
)
from .numerics import Rng, sample_gaussian
from .satellite import SatParams, measure_clean, measurement_noise_std
from .ukf import UkfParams

ALL_FILTERS = tuple(FilterKind)

_PROJECT_MODE = {
    FilterKind.STANDARD: PROJECT_NONE,
    FilterKind.UKF_SE: PROJECT_NONE,
    FilterKind.PROJ_FORMULA: PROJECT_FORMULA,
    FilterKind.PROJ_OPTIM: PROJECT_OPTIMIZE,
}


@dataclass(frozen=True)
class SimConfig:
    sat: SatParams = field(default_factory=SatParams)
    duration: float = 200.0
    h_truth: float = 1e-3
    n_runs: int = 1000
    master_seed: int = 0
    filters: tuple[FilterKind, ...] = ALL_FILTERS
    alpha: float = 2.0
    window: tuple[float, float] = (150.0, 200.0)
    out_dir: str | None = None
    noise_free: bool = False
    rescale_pv: bool = False
    truth_noise: str = "none"  # "none" (drift-only truth) or "brownian"
    workers: int = 1
    backend: str = "auto"
    ukf: UkfParams = field(default_factory=UkfParams)

    def __post_init__(self):
        if self.h_truth <= 0.0 or self.h_truth > self.h_filter + 1e-15:
            raise ConfigError("h_truth must be positive and at most the filter step")
        n_sub = self.h_filter / self.h_truth
        if abs(n_sub - round(n_sub)) > 1e-9:
            raise ConfigError("the filter step must be an integer multiple of h_truth")
        t0, t1 = self.window
        if not 0.0 <= t0 < t1 <= self.duration + 1e-12:
            raise ConfigError("metrics window must satisfy 0 <= t0 < t1 <= duration")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be at least 1")
        if self.duration <= 0.0:
            raise ConfigError("duration must be positive")
        if self.truth_noise not in ("none", "brownian"):
            raise ConfigError("truth_noise must be 'none' or 'brownian'")

    @property
    def h_filter(self) -> float:
        return 1.0 / self.sat.f_sample

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.h_filter))

    @property
    def n_substeps(self) -> int:
        return int(round(self.h_filter / self.h_truth))

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.h_filter


@dataclass
class RunRecord:
    """Per-(run, filter) curves; estimates retained only when requested."""

    err2: np.ndarray           # squared attitude error per step, (K+1,)
    md: np.ndarray             # |  ||q_hat|| - 1 | per step, (K+1,)
    wall: float
    failed: bool = False
    fail_reason: str = ""
    states: np.ndarray | None = None


@dataclass
class FilterSummary:
    kind: FilterKind
    avg_mse_q: float
    avg_md_q: float
    wall_clock_s: float
    per_step_wall_s: float
    failures: int
    n_ok: int
    sigma_points: int


@dataclass
class MetricsTable:
    times: np.ndarray
    mse_curves: dict
    md_curves: dict
    rows: list
    backend: str


def mse_q(q_true: np.ndarray, q_est: np.ndarray) -> np.ndarray:
    """Per-step mean over runs of squared attitude error ||q - q_hat||^2.

    Inputs are (runs, steps, 4); a (steps, 4) pair is treated as one run.
    """
    q_true = _as_runs(q_true)
    q_est = _as_runs(q_est)
    return np.mean(np.sum((q_true - q_est) ** 2, axis=-1), axis=0)


def md_q(q_est: np.ndarray) -> np.ndarray:
    """Per-step mean over runs of | ||q_hat|| - 1 |."""
    q_est = _as_runs(q_est)
    return np.mean(np.abs(np.linalg.norm(q_est, axis=-1) - 1.0), axis=0)


def _as_runs(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q[None] if q.ndim == 2 else q


def window_average(curve: np.ndarray, times: np.ndarray, window: tuple[float, float]) -> float:
    t0, t1 = window
    mask = (times >= t0 - 1e-12) & (times <= t1 + 1e-12)
    return float(np.mean(curve[mask]))


def generate_truth(cfg: SimConfig, run_index: int):
    """Truth trajectory at filter steps plus the measurement sequence.

    Returns (times (K+1,), states (K+1, 7), measurements (K, 6)).  The truth
    integrates the on-manifold dynamics with Euler substeps and per-substep
    quaternion renormalization; measurements carry fresh sensor noise at
    every filter step.  With truth_noise="brownian" the rate equation gets
    sqrt(h_truth)-scaled process-noise increments each substep; the default
    is a drift-only truth, which is what the reference results imply (see
    the benchmark notes in the README).
    """
    sat = cfg.sat
    k_steps = cfg.n_steps
    n_sub = cfg.n_substeps
    init_rng = Rng(cfg.master_seed).substream(run_index, 0)
    proc_rng = Rng(cfg.master_seed).substream(run_index, 1)
    meas_rng = Rng(cfg.master_seed).substream(run_index, 2)

    if cfg.noise_free:
        x0 = X0_MEAN.copy()
    else:
        x0 = sample_gaussian(X0_MEAN, np.diag(P0_TRUTH_DIAG), init_rng)
    x0[:4] /= np.linalg.norm(x0[:4])

    if cfg.noise_free or cfg.truth_noise == "none":
        noise = np.zeros((k_steps * n_sub, 3))
    else:
        noise = (
            sat.sigma_omega_c
            * np.sqrt(cfg.h_truth)
            * proc_rng.standard_normal((k_steps * n_sub, 3))
        )
    be = get_backend(cfg.backend)
    states = be.truth_rollout(x0, cfg.h_truth, n_sub, k_steps, noise, sat)

    times = cfg.times()
    clean = measure_clean(states[1:], times[1:], sat)
    if cfg.noise_free:
        meas = clean
    else:
        meas = clean + measurement_noise_std(sat) * meas_rng.standard_normal((k_steps, 6))
    return times, states, meas


def _run_filter_once(cfg: SimConfig, kind: FilterKind, states, meas) -> RunRecord:
    be = get_backend(cfg.backend)
    h = cfg.h_filter
    x0 = X0_MEAN.copy()
    start = time.perf_counter()
    try:
        if kind in AMBIENT_KINDS:
            inst = make_filter(kind, sat=cfg.sat, h=h, alpha=cfg.alpha,
                               params=cfg.ukf, rescale_pv=cfg.rescale_pv)
            alpha = cfg.alpha if kind is FilterKind.UKF_SE else 0.0
            est_states = be.filter_rollout(
                x0, inst.est.P, meas, h, alpha, _PROJECT_MODE[kind],
                cfg.sat, inst.P_w, inst.P_v, cfg.ukf,
            )
        else:
            inst = make_filter(kind, sat=cfg.sat, h=h, alpha=cfg.alpha,
                               params=cfg.ukf, rescale_pv=cfg.rescale_pv)
            est_states = np.empty((meas.shape[0] + 1, 7))
            est_states[0] = inst.est.x
            for k in range(meas.shape[0]):
                inst = step_filter(inst, meas[k], (k + 1) * h)
                est_states[k + 1] = inst.est.x
    except UkfseError as exc:
        wall = time.perf_counter() - start
        n = meas.shape[0] + 1
        return RunRecord(
            err2=np.full(n, np.nan), md=np.full(n, np.nan), wall=wall,
            failed=True, fail_reason=f"{type(exc).__name__}: {exc}",
        )
    wall = time.perf_counter() - start
    err2 = np.sum((states[:, :4] - est_states[:, :4]) ** 2, axis=1)
    md = np.abs(np.linalg.norm(est_states[:, :4], axis=1) - 1.0)
    return RunRecord(err2=err2, md=md, wall=wall, states=est_states)


def run_single(cfg: SimConfig, run_index: int, keep_states: bool = False):
    """One truth trajectory shared by all selected filters."""
    times, states, meas = generate_truth(cfg, run_index)
    records = {}
    for kind in cfg.filters:
        rec = _run_filter_once(cfg, kind, states, meas)
        if not keep_states:
            rec.states = None
        records[kind] = rec
    if keep_states:
        return times, states, meas, records
    return records


def run_monte_carlo(cfg: SimConfig) -> MetricsTable:
    """All runs, reduced to per-filter curves and window averages."""
    runner = partial(run_single, cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            all_records = list(pool.map(runner, range(cfg.n_runs), chunksize=1))
    else:
        all_records = [runner(i) for i in range(cfg.n_runs)]

    times = cfg.times()
    n = times.size
    mse_curves, md_curves, rows = {}, {}, []
    for kind in cfg.filters:
        err2_sum = np.zeros(n)
        md_sum = np.zeros(n)
        wall_total = 0.0
        n_ok = 0
        failures = 0
        for records in all_records:
            rec = records[kind]
            wall_total += rec.wall
            if rec.failed:
                failures += 1
                continue
            err2_sum += rec.err2
            md_sum += rec.md
            n_ok += 1
        mse = err2_sum / n_ok if n_ok else np.full(n, np.nan)
        md = md_sum / n_ok if n_ok else np.full(n, np.nan)
        mse_curves[kind] = mse
        md_curves[kind] = md
        rows.append(
            FilterSummary(
                kind=kind,
                avg_mse_q=window_average(mse, times, cfg.window),
                avg_md_q=window_average(md, times, cfg.window),
                wall_clock_s=wall_total,
                per_step_wall_s=wall_total / (cfg.n_runs * cfg.n_steps),
                failures=failures,
                n_ok=n_ok,
                sigma_points=sigma_point_count(kind),
            )
        )
    return MetricsTable(
        times=times,
        mse_curves=mse_curves,
        md_curves=md_curves,
        rows=rows,
        backend=get_backend(cfg.backend).name,
    )


def config_as_dict(cfg: SimConfig) -> dict:
    sat = cfg.sat
    return {
        "inertia": [float(v) for v in sat.inertia_diag],
        "sigma_omega_c": sat.sigma_omega_c,
        "mu_earth": sat.mu_earth,
        "r0": sat.r0,
        "M_e": sat.M_e,
        "epsilon_deg": float(np.degrees(sat.epsilon)),
        "inclination_deg": float(np.degrees(sat.inclination)),
        "omega_e": sat.omega_e,
        "sigma_mag_nT": sat.sigma_mag * 1e9,
        "sigma_rate_c": sat.sigma_rate,
        "f_sample_hz": sat.f_sample,
        "duration": cfg.duration,
        "h_filter": cfg.h_filter,
        "h_truth": cfg.h_truth,
        "n_runs": cfg.n_runs,
        "master_seed": cfg.master_seed,
        "filters": [k.value for k in cfg.filters],
        "alpha": cfg.alpha,
        "window": list(cfg.window),
        "noise_free": cfg.noise_free,
        "rescale_pv": cfg.rescale_pv,
        "truth_noise": cfg.truth_noise,
        "workers": cfg.workers,
        "backend": cfg.backend,
        "ukf_gamma": cfg.ukf.gamma,
        "ukf_kappa": cfg.ukf.kappa,
        "ukf_beta": cfg.ukf.beta,
    }


def write_outputs(table: MetricsTable, cfg: SimConfig, out_dir) -> dict:
    """Write curves.csv, summary.csv, and manifest.json; returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        curves_path = out / "curves.csv"
        with curves_path.open("w") as fh:
            fh.write("t,filter,mse_q,md_q\n")
            for kind in cfg.filters:
                mse = table.mse_curves[kind]
                md = table.md_curves[kind]
                for k, t in enumerate(table.times):
                    fh.write(f"{t!r},{kind.value},{mse[k]!r},{md[k]!r}\n")

        summary_path = out / "summary.csv"
        with summary_path.open("w") as fh:
            fh.write("filter,avg_mse_q,avg_md_q,wall_clock_s,failures,sigma_points\n")
            for row in table.rows:
                fh.write(
                    f"{row.kind.value},{row.avg_mse_q!r},{row.avg_md_q!r},"
                    f"{row.wall_clock_s!r},{row.failures},{row.sigma_points}\n"
                )

        manifest_path = out / "manifest.json"
        manifest = {
            "artifact": "ukfse",
            "version": __version__,
            "backend": table.backend,
            "master_seed": cfg.master_seed,
            "config": config_as_dict(cfg),
            "sigma_points": {k.value: sigma_point_count(k) for k in cfg.filters},
        }
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write outputs under '{out}': {exc}") from exc
    return {"curves": curves_path, "summary": summary_path, "manifest": manifest_path}


def config_from_file(path) -> dict:
    """Flat key = value config format; '#' starts a comment."""
    values: dict = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def build_config(values: dict) -> SimConfig:
    """SimConfig from string-valued config entries (file or CLI merged)."""
    sat_keys = {}
    for key in SatParams.CONFIG_KEYS:
        if key in values:
            v = values.pop(key)
            sat_keys[key] = [p for p in str(v).split(",")] if key == "inertia" else v
    sat = SatParams.from_config(sat_keys)

    def fget(key, default):
        return float(values.pop(key)) if key in values else default

    def iget(key, default):
        return int(values.pop(key)) if key in values else default

    def bget(key, default):
        if key not in values:
            return default
        v = str(values.pop(key)).lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got '{v}'")

    filters = ALL_FILTERS
    if "filters" in values:
        names = [s.strip() for s in str(values.pop("filters")).split(",") if s.strip()]
        filters = tuple(FilterKind.from_name(n) for n in names)
    window = (150.0, 200.0)
    if "window" in values:
        parts = [float(p) for p in str(values.pop("window")).split(",")]
        if len(parts) != 2:
            raise ConfigError("window expects 't0,t1'")
        window = (parts[0], parts[1])
    ukf = UkfParams(
        gamma=fget("ukf_gamma", 0.01),
        kappa=fget("ukf_kappa", 0.0),
        beta=fget("ukf_beta", 2.0),
    )
    cfg = SimConfig(
        sat=sat,
        duration=fget("duration", 200.0),
        h_truth=fget("h_truth", 1e-3),
        n_runs=iget("n_runs", 1000),
        master_seed=iget("master_seed", 0),
        filters=filters,
        alpha=fget("alpha", 2.0),
        window=window,
        out_dir=str(values.pop("out_dir")) if "out_dir" in values else None,
        noise_free=bget("noise_free", False),
        rescale_pv=bget("rescale_pv", False),
        truth_noise=str(values.pop("truth_noise", "none")),
        workers=iget("workers", 1),
        backend=str(values.pop("backend", "auto")),
        ukf=ukf,
    )
    if values:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(values))}")
    return cfg


def override_config(cfg: SimConfig, **kwargs) -> SimConfig:
    kwargs = {k: v for k, v in kwargs.items() if v is not None}
    return replace(cfg, **kwargs)
