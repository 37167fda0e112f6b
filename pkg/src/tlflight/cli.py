"""Command-line driver: ``tlflight <command> [--config PATH] [options]``.

Exit codes: 0 success, 1 validation error, 2 numeric failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, acceptance, config as cfgmod, estimator, walk_theory
from .cumulants import QuadratureError, cumulants, oracle_cumulants
from .deformation import DeformationError
from .distribution import (DivergentIntegralError, stable_pdf, tail_mass_b, tail_series)
from .sampler import SamplingError, WalkEnsemble, generate_walks

log = logging.getLogger("tlflight")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class Context:
    def __init__(self, cfg: cfgmod.ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.hash = cfg.hash()
        self.theory = None

    @property
    def formats(self) -> tuple[str, ...]:
        return self.cfg.output.formats

    def meta(self, command: str) -> dict:
        return {"command": command, "config_hash": self.hash, "version": __version__,
                "config": self.cfg.canonical()}

    def header(self, command: str) -> tuple[str, ...]:
        return (f"command: {command}", f"config_hash: {self.hash}", f"version: {__version__}")

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name

    def write_json(self, name: str, command: str, body: dict) -> Path:
        doc = self.meta(command)
        doc.update(body)
        p = self.path(name)
        p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return p

    def write_csv(self, name: str, command: str, header: list[str], rows) -> Path:
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            for line in self.header(command):
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        return p


# -- commands ---------------------------------------------------------------------

def cmd_cumulants(ctx: Context) -> list[Path]:
    c = ctx.cfg
    J = c.analysis.max_order
    exp = cumulants(c.deformation, c.stable, J, c.analysis.rtol)
    orc = oracle_cumulants(c.deformation, c.stable, J)
    written = []
    if "json" in ctx.formats:
        written.append(ctx.write_json("cumulants.json", "cumulants",
                                      {"expansion": exp.to_dict(), "oracle": orc.to_dict()}))
    if "csv" in ctx.formats:
        rows = []
        for j in range(1, J + 1):
            ke, ko = exp.kappa_j(j), orc.kappa_j(j)
            le = exp.lambda_j(j) if j >= 2 else math.nan
            lo = orc.lambda_j(j) if j >= 2 else math.nan
            rows.append([j, ke, ko, le, lo])
        written.append(ctx.write_csv("cumulants.csv", "cumulants",
                                     ["j", "kappa_expansion", "kappa_oracle",
                                      "lambda_expansion", "lambda_oracle"], rows))
    return written


def _simulate(ctx: Context) -> WalkEnsemble:
    r = ctx.cfg.run
    return generate_walks(ctx.cfg.deformation, ctx.cfg.stable, r.M, r.N, r.seed, threads=r.threads)


def cmd_simulate(ctx: Context) -> list[Path]:
    ens = _simulate(ctx)
    written = []
    if "binary" in ctx.formats or not {"csv", "binary"} & set(ctx.formats):
        p = ctx.path("ensemble.bin")
        ens.to_binary(p, ctx.hash, __version__)
        written.append(p)
    if "csv" in ctx.formats:
        p = ctx.path("ensemble.csv")
        ens.to_csv(p, ctx.header("simulate"))
        written.append(p)
    if "json" in ctx.formats:
        written.append(ctx.write_json("ensemble.json", "simulate", {
            "M": ens.M, "N": ens.N, "seed": ens.seed, "acceptance_rate": ens.acceptance_rate,
            "increments_sha256": ens.digest()}))
    return written


def _theory_cumulants(ctx: Context):
    if ctx.theory is None:
        c = ctx.cfg
        if c.analysis.theory == "oracle":
            ctx.theory = oracle_cumulants(c.deformation, c.stable, c.analysis.max_order)
        else:
            ctx.theory = cumulants(c.deformation, c.stable, c.analysis.max_order, c.analysis.rtol)
    return ctx.theory


def correlation_reports(ensemble: WalkEnsemble, ctx: Context) -> list[estimator.CorrelationReport]:
    need = max((len(q) for q in ctx.cfg.analysis.queries), default=2)
    cset = _theory_cumulants(ctx) if need >= 3 else None
    return [estimator.correlation_coefficient(ensemble, q, cset, n_boot=ctx.cfg.analysis.bootstrap)
            for q in ctx.cfg.analysis.queries]


def cmd_correlate(ctx: Context, ensemble_path: str | None = None) -> list[Path]:
    ens = WalkEnsemble.from_binary(ensemble_path) if ensemble_path else _simulate(ctx)
    reports = correlation_reports(ens, ctx)
    written = []
    if "json" in ctx.formats:
        written.append(ctx.write_json("correlation.json", "correlate",
                                      {"reports": [r.to_dict() for r in reports]}))
    if "csv" in ctx.formats:
        p = ctx.path("correlation.csv")
        estimator.reports_to_csv(reports, p, ctx.header("correlate"))
        written.append(p)

    # plot-ready threefold surface and isoline for the configured anchor
    a = ctx.cfg.analysis
    m = a.surface_m
    lam3 = _theory_cumulants(ctx).lambda_j(3) if a.max_order >= 3 else 1.0
    grid = np.linspace(-m, 4 * m, a.surface_points)
    rows = walk_theory.correlation_surface(lam3, m, grid, grid)
    p = ctx.path("surface_R3.csv")
    walk_theory.write_surface_csv(rows, p, ctx.header("correlate") + (f"m: {m}", f"lambda3: {lam3!r}"))
    written.append(p)
    iso = walk_theory.threefold_isoline(m, lam3)
    iso_rows = [[piece.name, t2, t3] for piece in iso.pieces
                for t2, t3 in piece.sample(200).tolist()]
    written.append(ctx.write_csv("isoline_R3.csv", "correlate", ["piece", "tau2", "tau3"], iso_rows))
    return written


def cmd_regime(ctx: Context) -> list[Path]:
    c = ctx.cfg
    cset = cumulants(c.deformation, c.stable, 4, c.analysis.rtol)
    scale = (c.deformation.l / c.stable.gamma) ** c.stable.alpha
    rows = []
    for n in c.analysis.n_values:
        rows.append([n, walk_theory.classify_regime(c.stable, c.deformation, n).value, n / scale,
                     walk_theory.one_point_standardized(cset, n, 3),
                     walk_theory.one_point_standardized(cset, n, 4)])
    header = ["n", "regime", "n_over_crossover", "Lambda3", "Lambda4"]
    written = []
    if "json" in ctx.formats:
        written.append(ctx.write_json("regime.json", "regime", {
            "crossover_n": scale, "rows": [dict(zip(header, r)) for r in rows]}))
    if "csv" in ctx.formats:
        written.append(ctx.write_csv("regime.csv", "regime", header, rows))
    return written


def cmd_tailcheck(ctx: Context) -> list[Path]:
    c = ctx.cfg
    st = c.stable
    xs = np.array(c.analysis.tail_x) * st.gamma
    quad = stable_pdf(st, xs, c.analysis.rtol)
    lead = tail_series(st, xs, 1)
    multi = tail_series(st, xs, 4)
    rows = [[float(x), float(q), float(a), float(b), float(a / q - 1), float(b / q - 1)]
            for x, q, a, b in zip(xs, quad, lead, multi)]
    header = ["x", "pdf", "tail_1term", "tail_4term", "rel_err_1term", "rel_err_4term"]
    body = {"rows": [dict(zip(header, r)) for r in rows]}
    try:
        body["b_expansion"] = tail_mass_b(c.deformation, st, "expansion", c.analysis.rtol)
    except DivergentIntegralError as exc:
        body["b_expansion"] = None
        body["b_expansion_note"] = str(exc)
    body["b_exact"] = tail_mass_b(c.deformation, st, "exact", c.analysis.rtol)
    written = []
    if "json" in ctx.formats:
        written.append(ctx.write_json("tailcheck.json", "tailcheck", body))
    if "csv" in ctx.formats:
        written.append(ctx.write_csv("tailcheck.csv", "tailcheck", header, rows))
    return written


def cmd_reproduce(out: Path, formats, criteria=None) -> tuple[list[Path], bool]:
    rows = acceptance.run_all(criteria)
    flags = acceptance.summary(rows)
    for c, ok in flags.items():
        print(f"criterion {c:>2}: {'PASS' if ok else 'FAIL'}")
    out.mkdir(parents=True, exist_ok=True)
    meta = {"command": "reproduce-paper", "version": __version__, "base_seed": acceptance.BASE_SEED}
    written = []
    if "json" in formats:
        p = out / "acceptance.json"
        doc = dict(meta, rows=acceptance.rows_to_dicts(rows),
                   criteria={str(k): v for k, v in flags.items()})
        p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        written.append(p)
    if "csv" in formats:
        p = out / "acceptance.csv"
        with open(p, "w", newline="") as fh:
            fh.write(f"# version: {__version__}\n# base_seed: {acceptance.BASE_SEED}\n")
            w = csv.writer(fh)
            w.writerow(["criterion", "label", "value", "target", "passed", "gating", "detail"])
            for r in rows:
                w.writerow([r.criterion, r.label, r.value, r.target, r.passed, r.gating, r.detail])
        written.append(p)
    return written, all(flags.values())


# -- argument handling -------------------------------------------------------------

COMMANDS = ("cumulants", "simulate", "correlate", "regime", "tailcheck", "reproduce-paper")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment file (see tlflight.config)")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--seed", type=int, help="run seed (overrides [run] seed)")
    common.add_argument("--threads", type=int, help="worker processes for simulation")
    common.add_argument("--format", choices=("csv", "json", "binary"), action="append",
                        help="output format; repeat for several (overrides [output] formats)")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override any config key")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tlflight", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("cumulants", parents=[common], help="expansion and oracle cumulants")
    sub.add_parser("simulate", parents=[common], help="simulate a walk ensemble")
    c = sub.add_parser("correlate", parents=[common], help="correlation reports and R3 surface grids")
    c.add_argument("--ensemble", help="binary ensemble from 'simulate' (default: simulate in-process)")
    sub.add_parser("regime", parents=[common], help="Levy/crossover/Gaussian table over n")
    sub.add_parser("tailcheck", parents=[common], help="tail series vs density, removed mass")
    r = sub.add_parser("reproduce-paper", parents=[common],
                       help="run the full acceptance suite and write a pass/fail report")
    r.add_argument("--criteria", type=int, nargs="+", help="subset of criteria 1..10")
    return p


def _overrides(args) -> list[str]:
    out = list(args.set)
    if args.seed is not None:
        out.append(f"run.seed={args.seed}")
    if args.threads is not None:
        out.append(f"run.threads={args.threads}")
    if args.out is not None:
        out.append(f"output.directory={args.out}")
    if args.format:
        out.append(f"output.formats={','.join(args.format)}")
    return out


def run(args) -> int:
    if args.command == "reproduce-paper":
        out = Path(args.out or "reproduction")
        formats = tuple(args.format or ("csv", "json"))
        written, _ = cmd_reproduce(out, formats, args.criteria)
    else:
        cfg = cfgmod.load(args.config, _overrides(args))
        ctx = Context(cfg, Path(cfg.output.directory))
        fn = {"cumulants": cmd_cumulants, "simulate": cmd_simulate, "regime": cmd_regime,
              "tailcheck": cmd_tailcheck}.get(args.command)
        written = fn(ctx) if fn else cmd_correlate(ctx, args.ensemble)
    for p in written:
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except (cfgmod.ConfigError, DeformationError, configparser.Error, MemoryError) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_VALIDATION
    except (QuadratureError, DivergentIntegralError, SamplingError, ArithmeticError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
