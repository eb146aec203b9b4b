"""Command-line entry point.

Exit status: 0 success, 2 configuration error, 3 verification failures,
4 inconclusive bound series.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .bounds import InconclusiveSeries, bounds_report, format_table
from .config import build_model, describe_keys, echo, load_config, parse_config
from .exceptions import ConfigError, DirectSamplerRequired, HorizonError, LawError, SupercriticalError
from .experiments import (
    RunManifest,
    default_horizon,
    default_threads,
    explore_report,
    profile_for,
    sample_batch,
    sweep_p,
    tail_experiment,
    verify_couplings,
    write_csv,
)
from .gw import XiLaw, total_size_tail
from .rng import replicate_generator
from .stats import standard_error

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_INCONCLUSIVE = 4

COMMANDS = {
    "bounds": "analytic bounds: p_c lower bound, subcriticality and decay conditions",
    "sample": "direct samples of the wet set (|W|, |W_rho|, escape flag, component count)",
    "explore": "one layered exploration with its coupled Galton-Watson sizes and audits",
    "gw": "total-size tail of the dominating Galton-Watson process",
    "tail": "tail curve P(|W_rho| > n) with censoring report and optional decay fit",
    "sweep": "frequency of W_rho reaching the window boundary along a p grid",
    "verify": "batch audit of the point-process couplings (exact per replicate)",
}
GW_TAG = 23


def _key_help() -> str:
    rows = describe_keys()
    width = max(len(k) for k, _ in rows)
    return "config keys:\n" + "\n".join(f"  {k.ljust(width)}  {v}" for k, v in rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="JSON config file")
    common.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
    common.add_argument("--seed", type=int, metavar="N", help="override model.seed")
    common.add_argument("--trials", type=int, metavar="N", help="override experiment.trials")
    common.add_argument("--threads", type=int, metavar="N", help="worker processes (default: available CPUs)")
    common.add_argument("--window-half-width", type=int, metavar="N", help="override the window size")
    common.add_argument("--cap", type=int, metavar="N", help="override law.cap")
    commands = "\n".join(f"  {k.ljust(8)} {v}" for k, v in COMMANDS.items())
    parser = argparse.ArgumentParser(
        prog="boolperc",
        description="Boolean percolation on bounded-degree graphs.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"subcommands:\n{commands}\n\n{_key_help()}\n\n"
        "exit status: 0 ok, 2 configuration error, 3 verification failures, 4 inconclusive series",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, text in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _apply_overrides(args, path: Path):
    cfg = load_config(path)
    data = cfg.model_dump(mode="json", exclude_none=True)
    if args.seed is not None:
        data["model"]["seed"] = args.seed
    if args.trials is not None:
        data.setdefault("experiment", {})["trials"] = args.trials
    if args.cap is not None:
        data["law"]["cap"] = args.cap
    if args.window_half_width is not None:
        kind = data["graph"]["kind"]
        key = {"z_window": "half_width", "oriented_tree_ball": "depth"}.get(kind)
        if key is None:
            raise ConfigError("--window-half-width", f"graph kind {kind!r} has no window size")
        data["graph"][key] = args.window_half_width
    return parse_config(data)


def _require_ppp(model):
    if model.p >= 1.0:
        raise ConfigError("model.p", "the point-process coupling requires p < 1 (lambda_1 is infinite at p = 1)")
    if model.law.support_max is None:
        raise ConfigError("law.cap", "the point-process coupling requires a capped radius law")


class Run:
    def __init__(self, args, cfg, model):
        self.args, self.cfg, self.model = args, cfg, model
        self.exp = cfg.experiment
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.threads = args.threads or self.exp.threads or default_threads()
        self.manifest = RunManifest(
            command=args.command,
            config=echo(cfg, model.seed),
            seed=model.seed,
            replicates=self.exp.trials,
            truncated_mass=model.law.truncated_mass,
        )
        self.t0 = time.perf_counter()

    def csv(self, name, header, rows):
        write_csv(self.out / name, header, rows)
        self.manifest.data_files.append(name)

    def json(self, name, obj):
        (self.out / name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        self.manifest.data_files.append(name)

    def finish(self, status: int) -> int:
        self.manifest.wall_clock_seconds = round(time.perf_counter() - self.t0, 3)
        self.manifest.write(self.out / f"{self.args.command}_manifest.json")
        return status

    def profile(self, cap_needed: bool = True):
        r_max = default_horizon(self.model, self.exp.r_max)
        if cap_needed and self.model.law.support_max and r_max < self.model.law.support_max:
            raise ConfigError("experiment.r_max", f"horizon {r_max} is below the law cap {self.model.law.support_max}")
        return profile_for(self.model, r_max)


def cmd_bounds(run: Run) -> int:
    report = bounds_report(run.profile(), run.model.law, run.model.p, run.exp.t, run.exp.pc_site)
    flat = report.to_dict()
    run.json("bounds.json", flat)
    run.manifest.results = flat
    print(json.dumps(flat, sort_keys=True))
    print(format_table(report))
    return run.finish(EXIT_INCONCLUSIVE if report.inconclusive else EXIT_OK)


def cmd_sample(run: Run) -> int:
    stats = sample_batch(run.model, run.exp.trials, run.threads, components=True)
    run.csv("samples.csv", ("seed", "replicate", "size_w", "size_wrho", "escaped", "n_components"), stats.rows(run.model.seed))
    run.manifest.censored = int(stats.escaped.sum())
    run.manifest.results = {"mean_size_w": float(stats.size_w.mean()), "mean_size_wrho": float(stats.size_wrho.mean())}
    return run.finish(EXIT_OK)


def cmd_explore(run: Run) -> int:
    _require_ppp(run.model)
    report = explore_report(run.model, run.profile(), run.exp.replicate)
    run.json("explore.json", report)
    run.manifest.replicates = 1
    run.manifest.results = {"status": report["status"], "layer_sizes": report["layer_sizes"]}
    run.manifest.tallies = {k: v for k, v in report["audits"].items()}
    print(json.dumps(report, sort_keys=True))
    failed = any(report["audits"][k] is False for k in ("inclusion", "domination", "mark_uniqueness", "omega2_consistency"))
    return run.finish(EXIT_VERIFY if failed else EXIT_OK)


def cmd_gw(run: Run) -> int:
    if run.model.law.support_max is None:
        raise ConfigError("law.cap", "the offspring law needs a capped radius law")
    xi = XiLaw.build(run.profile(), run.model.law, run.model.p)
    grid = run.exp.n_grid or list(range(0, 51))
    rng = replicate_generator(run.model.seed, 0, GW_TAG)
    try:
        curve, sizes, trunc = total_size_tail(xi, grid, run.exp.trials, rng)
    except SupercriticalError as exc:
        raise ConfigError("model.p", str(exc)) from None
    run.csv("gw.csv", ("n", "tail_estimate", "ci_low", "ci_high"), (r[:4] for r in curve.rows()))
    draws = xi.sample(replicate_generator(run.model.seed, 1, GW_TAG), run.exp.trials)
    mgf = []
    for t in run.exp.t_grid:
        e = np.exp(t * draws)
        emp = float(np.log(e.mean()))
        mgf.append({"t": t, "empirical_log_mgf": emp, "se": standard_error(e) / e.mean(), "exact_log_mgf": xi.log_mgf(t)})
    run.manifest.censored = int(trunc.sum())
    run.manifest.results = {
        "xi_mean": xi.mean, "xi_empirical_mean": float(draws.mean()), "xi_se": standard_error(draws), "mgf": mgf,
    }
    return run.finish(EXIT_OK)


def cmd_tail(run: Run) -> int:
    grid = run.exp.n_grid or list(range(0, 51))
    res = tail_experiment(run.model, grid, run.exp.trials, run.threads)
    run.csv("tail.csv", ("n", "estimate", "ci_low", "ci_high", "censored_count"), res.curve.rows())
    run.manifest.censored = int(res.escaped.sum())
    results = {"censoring_fraction": res.censoring_fraction, "unreliable": res.unreliable}
    if run.exp.fit_range is not None:
        try:
            results["fit"] = res.fit(tuple(run.exp.fit_range), rng=replicate_generator(run.model.seed, 0, GW_TAG)).to_dict()
        except ValueError as exc:
            results["fit"] = {"error": str(exc)}
    run.manifest.results = results
    if res.unreliable:
        print(f"warning: censoring fraction {res.censoring_fraction:.3f} exceeds 20%; enlarge the window", file=sys.stderr)
    return run.finish(EXIT_OK)


def cmd_sweep(run: Run) -> int:
    grid = run.exp.p_grid or [round(0.05 * i, 10) for i in range(21)]
    profile = None
    status = EXIT_OK
    try:
        profile = run.profile()
    except (HorizonError, ConfigError) as exc:
        print(f"note: no p_c lower bound ({exc})", file=sys.stderr)
    try:
        res = sweep_p(run.model, grid, run.exp.trials, run.threads, profile)
    except InconclusiveSeries:
        res, status = sweep_p(run.model, grid, run.exp.trials, run.threads, None), EXIT_INCONCLUSIVE
    run.csv("sweep.csv", ("p", "reach_freq", "ci_low", "ci_high"), res.rows())
    run.manifest.results = {"pc_lower_bound": res.pc_lower}
    return run.finish(status)


def cmd_verify(run: Run) -> int:
    _require_ppp(run.model)
    report = verify_couplings(run.model, run.exp.trials, run.threads, run.profile())
    run.csv("verify.csv", ("check_name", "trials", "failures"), report.rows())
    run.manifest.tallies = dict(report.failures)
    run.manifest.results = {
        "passed": report.passed, "overshoot_balls": report.overshoot_balls, "dead_end_keys": report.dead_end_keys,
    }
    if not report.passed:
        print("verification failures: " + json.dumps(report.failures), file=sys.stderr)
    return run.finish(EXIT_OK if report.passed else EXIT_VERIFY)


HANDLERS = {
    "bounds": cmd_bounds,
    "sample": cmd_sample,
    "explore": cmd_explore,
    "gw": cmd_gw,
    "tail": cmd_tail,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(args, Path(args.config))
        model = build_model(cfg)
        return HANDLERS[args.command](Run(args, cfg, model))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DirectSamplerRequired as exc:
        print(f"configuration error: model.p: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InconclusiveSeries as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (LawError, HorizonError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
