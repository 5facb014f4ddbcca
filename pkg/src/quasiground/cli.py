"""Command-line front end: ``solve``, ``verify``, ``level`` and ``sweep-export``.

Exit codes: 0 success, 1 a verified property or the level bound fails,
2 configuration error, 3 non-convergence / PS-bound violation / unresolved
scale, 4 a model assumption fails.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config, parse_config, write_field_csv
from .critical import InstantonParams, check_resolution, default_sweep, eps_sweep, level_sweep, margin_vs_mu
from .exceptions import AssumptionFailure, ConfigError, PSBoundViolation, ResolutionError
from .nonlinearity import TransformedPower
from .solver import level_certificate, minimize_ground_state
from .suites import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUN, EXIT_ASSUMPTION = 0, 1, 2, 3, 4


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def _write(path: Path, text: str, outputs: list):
    path.write_text(text, encoding="utf-8")
    outputs.append(str(path))


class RunManifest:
    """One JSON line per run, appended to ``manifest.jsonl`` in the output directory."""

    def __init__(self, command, cfg: RunConfig | None, out: Path):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.outputs: list[str] = []
        self.t0 = time.perf_counter()
        self.summary = {}

    def write(self, exit_code):
        rec = {
            "command": self.command,
            "version": __version__,
            "config": None if self.cfg is None else self.cfg.to_dict(),
            "grid": self.summary.pop("grid", None),
            "wall_time": round(time.perf_counter() - self.t0, 3),
            "outputs": self.outputs,
            "exit_code": exit_code,
            "passed": exit_code == EXIT_OK,
            "summary": self.summary,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        with open(self.out / "manifest.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, sort_keys=True, default=_default) + "\n")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config({})
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg = RunConfig(cfg.model, cfg.solver, cfg.sweep, int(args.seed))
    return cfg


def _eps_list(args, cfg):
    if args.eps:
        try:
            eps = [float(x) for x in args.eps.replace(";", ",").split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --eps list: {exc}") from exc
        if not eps or not all(e > 0 for e in eps):
            raise ConfigError("--eps needs positive values")
        return eps
    if cfg.sweep.eps is not None:
        return list(cfg.sweep.eps)
    return default_sweep(cfg.model.dimension)


# -- commands ------------------------------------------------------------------------


def cmd_solve(args, cfg, man):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = minimize_ground_state(cfg.model, cfg.solver)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    cert = level_certificate(report, cfg.model) if report.converged else None
    doc = report.to_dict()
    doc["certificate"] = None if cert is None else cert.to_dict()
    doc["seed"] = cfg.seed
    _write(man.out / "solve_report.json", dumps(doc), man.outputs)
    write_field_csv(man.out / "fields.csv", report.v_star.grid, {"v": report.v_star.values, "u": report.u_star.values})
    man.outputs.append(str(man.out / "fields.csv"))
    man.summary.update(level=report.level, converged=report.converged, grid=report.grid)
    print(f"level c = {report.level:.12g}  threshold = {report.threshold:.12g}  iterations = {report.iterations}")
    if cert is not None:
        print(cert.format_table())
    if not report.converged:
        print(f"not converged: {report.reason}", file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_verify(args, cfg, man):
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.solver.make_grid(cfg.model.dimension)
    reports = run_suite(args.suite, cfg.model, grid, rng)
    for r in reports:
        print(r.format_table())
    ok = all(r.passed for r in reports)
    doc = {"suite": args.suite, "seed": cfg.seed, "passed": ok, "reports": [r.to_dict() for r in reports]}
    _write(man.out / f"verify_{args.suite}.json", dumps(doc), man.outputs)
    man.summary.update(suite=args.suite, passed=ok, grid=grid.fingerprint())
    return EXIT_OK if ok else EXIT_FAIL


def _sweep(args, cfg, man):
    N = cfg.model.dimension
    eps = _eps_list(args, cfg)
    grid = cfg.sweep.grid(N)
    for e in eps:
        check_resolution(grid, e)
    rep = None
    if len(eps) >= 5:
        rep = eps_sweep(cfg.model, sorted(eps, reverse=True), grid, cfg.sweep.rho)
        rep.to_csv(man.out / "sweep.csv")
        man.outputs.append(str(man.out / "sweep.csv"))
        _write(man.out / "sweep.json", rep.to_json(), man.outputs)
        print(f"N={N} fit window {rep.fit_window}")
        for k, v in rep.fits.items():
            if not isinstance(v, list):
                print(f"  {k:<22} {v:.6g}  expected {rep.expected.get(k, float('nan')):.6g}")
    man.summary["grid"] = grid.fingerprint()
    return eps, grid, rep


def cmd_sweep_export(args, cfg, man):
    eps, grid, rep = _sweep(args, cfg, man)
    if rep is None:
        raise ConfigError("a sweep needs at least 5 scales")
    man.summary.update(fits=rep.fits)
    return EXIT_OK


def cmd_level(args, cfg, man):
    eps, grid, rep = _sweep(args, cfg, man)
    model = cfg.model
    ls = level_sweep(model, sorted(eps, reverse=True), grid, cfg.sweep.rho)
    smallest = min(ls.bounds, key=lambda b: b.eps)
    doc = {"seed": cfg.seed, "level": ls.to_dict(), "smallest_eps": smallest.to_dict()}
    if isinstance(model.nonlinearity, TransformedPower):
        params = InstantonParams(smallest.eps, cfg.sweep.rho, model.dimension)
        mus = list(cfg.sweep.mus)
        doc["margin_vs_mu"] = {"mu": mus, "margin": margin_vs_mu(model, mus, params, grid)}
    _write(man.out / "level.json", dumps(doc), man.outputs)
    for b in ls.bounds:
        print(f"  eps={b.eps:<12.6g} max_t I(t v)={b.max_value:.10g}  margin={b.margin:+.6g}  t*={b.t_star:.6g}")
    if not smallest.divergence_holds:
        print("warning: the divergence condition fails; the bound is not guaranteed", file=sys.stderr)
    ok = smallest.margin > 0
    man.summary.update(margin=smallest.margin, eps=smallest.eps)
    print(f"threshold {smallest.threshold:.10g}: margin at eps={smallest.eps:g} is {smallest.margin:+.6g}")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "level": cmd_level, "sweep-export": cmd_sweep_export}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quasiground", description="Ground states of critical quasilinear problems")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config (defaults apply when omitted)")
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--seed", type=int, default=None)
        if name == "verify":
            s.add_argument("--suite", default="all", help="one of " + ", ".join(SUITES))
        if name in ("level", "sweep-export"):
            s.add_argument("--eps", default=None, help="comma separated scales")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    man = RunManifest(args.command, None, out)
    try:
        if args.command == "verify" and args.suite not in SUITES:
            raise ConfigError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
        cfg = _config(args)
        man.cfg = cfg
        out.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[args.command](args, cfg, man)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except (ResolutionError, PSBoundViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_RUN
    except AssumptionFailure as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        if exc.report is not None:
            print(exc.report.format_table(), file=sys.stderr)
        code = EXIT_ASSUMPTION
    man.write(code)
    return code


if __name__ == "__main__":
    sys.exit(main())
