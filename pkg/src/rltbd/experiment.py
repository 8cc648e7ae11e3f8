"""Scenario generation, Monte Carlo batches, RMSE and diversity metrics."""
import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLikelihoodError, NumericalError, ScenarioError
from .filters import ParticleCloud, distinct_count, run_filter  # noqa: F401  (re-export)
from .sensor import predicted_image, simulate_measurement

log = logging.getLogger(__name__)

SCENARIO_STREAM = 0
INIT_STREAM = 1
FILTER_STREAM = 2


@dataclass
class Scenario:
    trajectory: np.ndarray  # (K + 1, 4), includes the initial state
    measurements: np.ndarray  # (K, J)
    seed: tuple = ()

    @property
    def K(self):
        return self.measurements.shape[0]

    def to_bytes(self):
        return self.trajectory.tobytes() + self.measurements.tobytes()


def initial_state(start_range, start_bearing, heading, speed):
    return np.array([
        start_range * math.cos(start_bearing),
        speed * math.cos(heading),
        start_range * math.sin(start_bearing),
        speed * math.sin(heading),
    ])


def straight_line(x0, steps, dt):
    """Noiseless constant-velocity trajectory with ``steps + 1`` states."""
    t = np.arange(steps + 1) * dt
    traj = np.repeat(x0[None, :], steps + 1, axis=0)
    traj[:, 0] = x0[0] + t * x0[1]
    traj[:, 2] = x0[2] + t * x0[3]
    return traj


def generate_scenario(scfg, sensor, dt, rng, seed=(), noiseless=False):
    """Straight-line trajectory and its TBD frames.

    ``scfg`` provides ``steps``, ``speed``, ``start_range``, ``start_bearing``
    and ``heading``. Raises :class:`ScenarioError` if any state leaves the
    sensor grid.
    """
    x0 = initial_state(scfg.start_range, scfg.start_bearing, scfg.heading, scfg.speed)
    traj = straight_line(x0, scfg.steps, dt)
    for k, s in enumerate(traj):
        if not sensor.in_view(s):
            raise ScenarioError(f"trajectory leaves the field of view at step {k}")
    if noiseless:
        frames = [predicted_image(sensor, s) for s in traj[1:]]
    else:
        frames = [simulate_measurement(sensor, s, rng) for s in traj[1:]]
    meas = np.array(frames).reshape(scfg.steps, sensor.J)
    return Scenario(traj, meas, tuple(seed))


def init_particles(truth, n, position_side, velocity_side, rng):
    """Uniform boxes centred on the true position and velocity."""
    out = np.empty((n, 4))
    out[:, [0, 2]] = truth[[0, 2]] + rng.uniform(-0.5, 0.5, (n, 2)) * position_side
    out[:, [1, 3]] = truth[[1, 3]] + rng.uniform(-0.5, 0.5, (n, 2)) * velocity_side
    return ParticleCloud(out)


def stream(master_seed, *key):
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


@dataclass
class FilterRun:
    estimates: np.ndarray = None  # (K, 4)
    distinct: np.ndarray = None  # (K,)
    joint_rate: np.ndarray = None
    refine_rate: np.ndarray = None
    error: str = None

    @property
    def ok(self):
        return self.error is None


@dataclass
class RunResult:
    run: int
    truth: np.ndarray  # (K, 4), states at the measurement times
    filters: dict = field(default_factory=dict)  # name -> FilterRun


def simulate_run(cfg, run, master_seed, names=None):
    """One Monte Carlo run: a fresh scenario and every selected filter on it."""
    sensor, motion = cfg.build_sensor(), cfg.build_motion()
    scfg = cfg.scenario
    scenario = generate_scenario(scfg, sensor, motion.dt, stream(master_seed, run, SCENARIO_STREAM),
                                 seed=(master_seed, run))
    result = RunResult(run, scenario.trajectory[1:].copy())
    pos_side = math.sqrt(scfg.position_area)
    vel_side = math.sqrt(scfg.velocity_area)
    for index, fcfg in enumerate(cfg.filter_configs()):
        if names is not None and fcfg.kind not in names:
            continue
        init_rng = stream(master_seed, run, INIT_STREAM, index)
        cloud = init_particles(scenario.trajectory[0], fcfg.n_particles, pos_side, vel_side, init_rng)
        try:
            trace = run_filter(fcfg, cloud, scenario.measurements, sensor, motion,
                               stream(master_seed, run, FILTER_STREAM + index))
        except (DegenerateLikelihoodError, NumericalError) as exc:
            log.warning("run %d, filter %s failed: %s", run, fcfg.kind, exc)
            result.filters[fcfg.kind] = FilterRun(error=f"{type(exc).__name__}: {exc}")
            continue
        result.filters[fcfg.kind] = FilterRun(trace.estimates, trace.distinct,
                                              trace.joint_rate, trace.refine_rate)
    return result


def rmse(estimates, truth):
    """Per-step RMSE of x and y over runs.

    ``estimates`` and ``truth`` have shape ``(runs, K, 4)``; returns ``(K, 2)``.
    """
    err = np.asarray(estimates)[..., [0, 2]] - np.asarray(truth)[..., [0, 2]]
    return np.sqrt(np.mean(err * err, axis=0))


def time_averaged_rmse(rmse_xy, first_step=1):
    """Mean over steps ``k >= first_step`` (1-based) of the position RMSE."""
    pos = np.hypot(rmse_xy[:, 0], rmse_xy[:, 1])[first_step - 1:]
    return float(np.mean(pos)) if pos.size else float("nan")


@dataclass
class BatchMetrics:
    n_runs: int
    rmse: dict  # name -> (K, 2)
    distinct_min: dict
    distinct_max: dict
    completed: dict
    failed: dict

    def summary_rows(self, first_step=1):
        rows = []
        for name, r in self.rmse.items():
            avg = time_averaged_rmse(r, first_step) if r.size else float("nan")
            rows.append((name, self.completed[name], self.failed[name], avg,
                         self.distinct_min[name], self.distinct_max[name]))
        return rows


def batch_metrics(runs, names):
    """Aggregate completed runs into per-filter RMSE and final diversity."""
    runs = sorted(runs, key=lambda r: r.run)
    rm, dmin, dmax, done, failed = {}, {}, {}, {}, {}
    for name in names:
        good = [r for r in runs if name in r.filters and r.filters[name].ok]
        failed[name] = sum(1 for r in runs if name in r.filters and not r.filters[name].ok)
        done[name] = len(good)
        if good:
            rm[name] = rmse([r.filters[name].estimates for r in good], [r.truth for r in good])
            finals = [int(r.filters[name].distinct[-1]) for r in good if r.filters[name].distinct.size]
            dmin[name] = min(finals) if finals else None
            dmax[name] = max(finals) if finals else None
        else:
            rm[name] = np.empty((0, 2))
            dmin[name] = dmax[name] = None
    return BatchMetrics(len(runs), rm, dmin, dmax, done, failed)


def run_batch(cfg, n_runs=None, master_seed=None, names=None, workers=1):
    """Run ``n_runs`` independent Monte Carlo runs and aggregate metrics.

    Returns ``(metrics, runs)``. Aggregation is independent of completion order.
    """
    n_runs = cfg.scenario.n_runs if n_runs is None else n_runs
    master_seed = cfg.scenario.seed if master_seed is None else master_seed
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    all_names = [f.kind for f in cfg.filter_configs()]
    names = all_names if names is None else [n for n in all_names if n in names]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(simulate_run, cfg, r, master_seed, names) for r in range(n_runs)]
            runs = [f.result() for f in futures]
    else:
        runs = [simulate_run(cfg, r, master_seed, names) for r in range(n_runs)]
    return batch_metrics(runs, names), runs


def _f(v):
    return repr(float(v))


def write_outputs(out_dir, metrics, runs):
    """Write ``metrics.csv``, ``diversity.csv`` and per-run estimate files."""
    os.makedirs(out_dir, exist_ok=True)
    runs = sorted(runs, key=lambda r: r.run)
    names = list(metrics.rmse)
    with open(os.path.join(out_dir, "metrics.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "filter", "rmse_x", "rmse_y"])
        for name in names:
            for k, (rx, ry) in enumerate(metrics.rmse[name], start=1):
                w.writerow([k, name, _f(rx), _f(ry)])
    with open(os.path.join(out_dir, "diversity.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "filter", "step", "distinct_count"])
        for r in runs:
            for name in names:
                fr = r.filters.get(name)
                if fr is None or not fr.ok:
                    continue
                for k, d in enumerate(fr.distinct, start=1):
                    w.writerow([r.run, name, k, int(d)])
    for r in runs:
        run_dir = os.path.join(out_dir, "runs", f"{r.run:04d}")
        os.makedirs(run_dir, exist_ok=True)
        with open(os.path.join(run_dir, "estimates.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "filter", "x", "vx", "y", "vy",
                        "true_x", "true_vx", "true_y", "true_vy", "joint_rate", "refine_rate"])
            for name in names:
                fr = r.filters.get(name)
                if fr is None or not fr.ok:
                    continue
                for k in range(fr.estimates.shape[0]):
                    w.writerow([k + 1, name, *map(_f, fr.estimates[k]), *map(_f, r.truth[k]),
                                _f(fr.joint_rate[k]), _f(fr.refine_rate[k])])
        failures = {n: fr.error for n, fr in r.filters.items() if not fr.ok}
        if failures:
            with open(os.path.join(run_dir, "failures.txt"), "w") as fh:
                for n, msg in sorted(failures.items()):
                    fh.write(f"{n}: {msg}\n")


def read_estimates(path):
    """Load a per-run ``estimates.csv`` into ``{filter: (estimates, truth)}``."""
    rows = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            est = [float(row[c]) for c in ("x", "vx", "y", "vy")]
            tru = [float(row[c]) for c in ("true_x", "true_vx", "true_y", "true_vy")]
            rows.setdefault(row["filter"], ([], []))
            rows[row["filter"]][0].append(est)
            rows[row["filter"]][1].append(tru)
    return {k: (np.array(e), np.array(t)) for k, (e, t) in rows.items()}
