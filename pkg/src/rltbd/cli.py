"""Command-line interface: ``rltbd simulate | run | selftest``."""
import argparse
import logging
import os
import shutil
import sys
import tempfile

from . import kernels
from .config import dumps, load_config
from .errors import ConfigError, ScenarioError
from .experiment import generate_scenario, run_batch, stream, SCENARIO_STREAM, write_outputs
from .sensor import write_frame_csv

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2
EXIT_FAILED = 3

log = logging.getLogger("rltbd")


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.scenario.seed = args.seed
    if getattr(args, "runs", None) is not None:
        if args.runs < 1:
            raise ConfigError("--runs", "must be at least 1")
        cfg.scenario.n_runs = args.runs
    if args.out is not None:
        cfg.output.directory = args.out
    return cfg


def _publish(tmp, out_dir):
    """Move a completed staging directory's contents into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    for name in sorted(os.listdir(tmp)):
        dst = os.path.join(out_dir, name)
        if os.path.isdir(dst):
            shutil.rmtree(dst)
        shutil.move(os.path.join(tmp, name), dst)


def cmd_simulate(args):
    cfg = _load(args)
    sensor, motion = cfg.build_sensor(), cfg.build_motion()
    n_r, n_b = sensor.shape
    print(f"grid: {n_r} x {n_b} cells (J = {sensor.J})")
    print(f"amplitude: {sensor.amplitude!r} (sigma_w = {sensor.sigma_w!r}, SNR = {cfg.sensor.snr_db!r} dB)")
    seed = cfg.scenario.seed
    scenario = generate_scenario(cfg.scenario, sensor, motion.dt, stream(seed, 0, SCENARIO_STREAM),
                                 seed=(seed, 0))
    out_dir = cfg.output.directory
    os.makedirs(os.path.dirname(os.path.abspath(out_dir)), exist_ok=True)
    with tempfile.TemporaryDirectory(dir=os.path.dirname(os.path.abspath(out_dir))) as tmp:
        with open(os.path.join(tmp, "trajectory.csv"), "w") as fh:
            fh.write("step,x,vx,y,vy\n")
            for k, s in enumerate(scenario.trajectory):
                fh.write(",".join([str(k), *(repr(float(v)) for v in s)]) + "\n")
        frames = os.path.join(tmp, "frames")
        os.makedirs(frames)
        for k, z in enumerate(scenario.measurements, start=1):
            write_frame_csv(os.path.join(frames, f"frame_{k:04d}.csv"), sensor, z)
        with open(os.path.join(tmp, "config.toml"), "w") as fh:
            fh.write(dumps(cfg))
        _publish(tmp, out_dir)
    print(f"wrote {scenario.K} frames to {out_dir}")
    return EXIT_OK


def cmd_run(args):
    cfg = _load(args)
    names = args.filter
    known = [f.name for f in cfg.filters]
    if names:
        for n in names:
            if n not in known:
                raise ConfigError("--filter", f"{n!r} is not configured (have {known})")
    metrics, runs = run_batch(cfg, names=names, workers=args.workers)
    out_dir = cfg.output.directory
    os.makedirs(os.path.dirname(os.path.abspath(out_dir)), exist_ok=True)
    with tempfile.TemporaryDirectory(dir=os.path.dirname(os.path.abspath(out_dir))) as tmp:
        write_outputs(tmp, metrics, runs)
        with open(os.path.join(tmp, "config.toml"), "w") as fh:
            fh.write(dumps(cfg))
        _publish(tmp, out_dir)

    print(f"{metrics.n_runs} runs, kernels: {kernels.BACKEND}")
    print(f"{'filter':<12} {'runs ok':>7} {'failed':>6} {'RMSE avg [m]':>13} {'RMSE k>=5 [m]':>14} {'distinct final':>15}")
    late = {row[0]: row[3] for row in metrics.summary_rows(first_step=5)}
    for name, done, failed, avg, dmin, dmax in metrics.summary_rows():
        late_avg = late[name]
        rng_txt = f"{dmin}-{dmax}" if dmin is not None else "-"
        print(f"{name:<12} {done:>7} {failed:>6} {avg:>13.3f} {late_avg:>14.3f} {rng_txt:>15}")
    total_failed = sum(metrics.failed.values())
    if total_failed and all(v == 0 for v in metrics.completed.values()):
        return EXIT_FAILED
    return EXIT_PARTIAL if total_failed else EXIT_OK


def cmd_selftest(args):
    from .selftest import run_selftest

    print(f"kernels: {kernels.BACKEND}")
    results = run_selftest()
    ok = all(r.passed for r in results)
    print("selftest", "passed" if ok else "FAILED")
    return EXIT_OK if ok else EXIT_FAILED


def build_parser():
    p = argparse.ArgumentParser(prog="rltbd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML experiment config (default: packaged config)")
        sp.add_argument("--out", help="output directory (overrides output.directory)")
        sp.add_argument("--seed", type=int, help="master seed (overrides scenario.seed)")

    sp = sub.add_parser("simulate", help="write a simulated trajectory and its measurement frames")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("run", help="run the Monte Carlo comparison and write metrics")
    common(sp)
    sp.add_argument("--runs", type=int, help="number of Monte Carlo runs (overrides scenario.n_runs)")
    sp.add_argument("--filter", action="append", help="run only this filter (repeatable)")
    sp.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("selftest", help="run the oracle checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
