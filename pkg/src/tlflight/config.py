"""Experiment configuration: an INI file read with ``configparser``.

Grammar (every section optional except [stable] and [deformation])::

    [stable]
    alpha = 1.0            ; 0 < alpha < 2
    gamma = 1.0

    [deformation]
    kind = mantegna_stanley ; or exponential, tabulated
    beta = 1.0             ; asymmetry coefficient, or give
    delta = 0.2            ; beta = 1 + delta (never both)
    l = 100
    table = shape.csv      ; tabulated only; relative to the config file

    [run]
    M = 10000
    N = 64
    seed = 7
    threads = 1

    [analysis]
    queries = 2:8,32; 3:5,10,20   ; time tuples for correlate
    max_order = 6
    bootstrap = 200
    rtol = 1e-9
    theory = expansion     ; or oracle: cumulants used as theory in correlate
    n_values = 1, 10, 100, 1000, 10000, 100000
    tail_x = 10, 20, 50, 100      ; tailcheck abscissae in units of gamma
    surface_m = 8
    surface_points = 41

    [output]
    directory = out
    formats = csv, json, binary

Any key can be overridden as ``section.key=value``. The config hash is the
SHA-256 of the canonical (sorted-key) JSON of the stable, deformation, run
and analysis sections; output location, formats and thread count do not
change results and are left out.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .cumulants import StableParams
from .deformation import DeformationSpec, load_table_csv

FORMATS = ("csv", "json", "binary")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    M: int = 10_000
    N: int = 64
    seed: int = 0
    threads: int = 1


@dataclass(frozen=True)
class AnalysisConfig:
    queries: tuple[tuple[int, ...], ...] = ((8, 32),)
    max_order: int = 6
    bootstrap: int = 200
    rtol: float = 1e-9
    theory: str = "expansion"
    n_values: tuple[int, ...] = (1, 10, 100, 1000, 10_000, 100_000)
    tail_x: tuple[float, ...] = (10.0, 20.0, 50.0, 100.0)
    surface_m: int = 8
    surface_points: int = 41


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple[str, ...] = FORMATS


@dataclass(frozen=True)
class ExperimentConfig:
    stable: StableParams
    deformation: DeformationSpec
    run: RunConfig = field(default_factory=RunConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    table_path: str | None = None

    def canonical(self) -> dict:
        """Result-determining content, as plain JSON types."""
        run = asdict(self.run)
        run.pop("threads")
        analysis = asdict(self.analysis)
        analysis["queries"] = [list(q) for q in self.analysis.queries]
        analysis["n_values"] = list(self.analysis.n_values)
        analysis["tail_x"] = list(self.analysis.tail_x)
        return {
            "stable": {"alpha": self.stable.alpha, "gamma": self.stable.gamma},
            "deformation": self.deformation.to_dict(),
            "run": run,
            "analysis": analysis,
        }

    def hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


_KEYS = {
    "stable": {"alpha", "gamma"},
    "deformation": {"kind", "beta", "delta", "l", "table"},
    "run": {"M", "N", "seed", "threads"},
    "analysis": {"queries", "max_order", "bootstrap", "rtol", "theory", "n_values", "tail_x",
                 "surface_m", "surface_points"},
    "output": {"directory", "formats"},
}


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    p.optionxform = str  # keep M and N case-sensitive
    return p


def parse_queries(text: str) -> tuple[tuple[int, ...], ...]:
    """'2:8,32; 3:5,10,20' -> ((8, 32), (5, 10, 20)); the order prefix is optional but checked."""
    out = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        order, _, times = chunk.rpartition(":")
        t = tuple(int(v) for v in times.split(","))
        if order and int(order) != len(t):
            raise ConfigError(f"query {chunk!r}: order {order} but {len(t)} times")
        out.append(t)
    return tuple(out)


def _list(text: str, cast) -> tuple:
    return tuple(cast(v) for v in text.replace(",", " ").split())


def apply_overrides(parser: configparser.ConfigParser, overrides) -> None:
    for item in overrides or ():
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, value.strip())


def _get(p, section, key, cast, default):
    if not p.has_option(section, key):
        return default
    raw = p.get(section, key)
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None


def from_parser(p: configparser.ConfigParser, base_dir: Path = Path(".")) -> ExperimentConfig:
    found = []
    for section in p.sections():
        if section not in _KEYS:
            found.append(f"unknown section [{section}]")
            continue
        found += [f"unknown key [{section}] {k}" for k in p[section] if k not in _KEYS[section]]
    for section in ("stable", "deformation"):
        if not p.has_section(section):
            found.append(f"missing section [{section}]")
    if found:
        raise ConfigError("; ".join(found))

    try:
        stable = StableParams(_get(p, "stable", "alpha", float, None),
                              _get(p, "stable", "gamma", float, 1.0))
    except TypeError:
        raise ConfigError("[stable] alpha is required") from None

    d = p["deformation"]
    if "beta" in d and "delta" in d:
        raise ConfigError("[deformation] beta and delta are mutually exclusive")
    beta = _get(p, "deformation", "beta", float, 1.0)
    if "delta" in d:
        beta = 1.0 + _get(p, "deformation", "delta", float, 0.0)
    kind = d.get("kind", "").strip()
    table, table_path = None, None
    if "table" in d:
        path = Path(d["table"].strip())
        path = path if path.is_absolute() else base_dir / path
        if not path.exists():
            raise FileNotFoundError(f"deformation table {path} does not exist")
        table, table_path = load_table_csv(path), str(path)
    spec = DeformationSpec(kind, beta, _get(p, "deformation", "l", float, 1.0), table)

    run = RunConfig(_get(p, "run", "M", int, RunConfig.M), _get(p, "run", "N", int, RunConfig.N),
                    _get(p, "run", "seed", int, RunConfig.seed),
                    _get(p, "run", "threads", int, RunConfig.threads))
    if run.M < 1 or run.N < 1:
        raise ConfigError("[run] M and N must be >= 1")
    if not 0 <= run.seed < 2**64:
        raise ConfigError("[run] seed must be an unsigned 64-bit integer")

    A = AnalysisConfig
    analysis = AnalysisConfig(
        _get(p, "analysis", "queries", parse_queries, A.queries),
        _get(p, "analysis", "max_order", int, A.max_order),
        _get(p, "analysis", "bootstrap", int, A.bootstrap),
        _get(p, "analysis", "rtol", float, A.rtol),
        _get(p, "analysis", "theory", str.strip, A.theory),
        _get(p, "analysis", "n_values", lambda s: _list(s, int), A.n_values),
        _get(p, "analysis", "tail_x", lambda s: _list(s, float), A.tail_x),
        _get(p, "analysis", "surface_m", int, A.surface_m),
        _get(p, "analysis", "surface_points", int, A.surface_points),
    )
    if analysis.theory not in ("expansion", "oracle"):
        raise ConfigError("[analysis] theory must be 'expansion' or 'oracle'")

    formats = _get(p, "output", "formats", lambda s: _list(s, str), OutputConfig.formats)
    bad = set(formats) - set(FORMATS)
    if bad:
        raise ConfigError(f"[output] unknown formats {sorted(bad)}")
    output = OutputConfig(_get(p, "output", "directory", str.strip, OutputConfig.directory),
                          formats)
    return ExperimentConfig(stable, spec, run, analysis, output, table_path)


def load(path: str | Path | None, overrides=()) -> ExperimentConfig:
    """Read ``path`` (or start empty when None) and apply ``section.key=value`` overrides."""
    p = _parser()
    base = Path(".")
    if path is not None:
        path = Path(path)
        with open(path) as fh:  # OSError propagates as an I/O failure
            p.read_file(fh)
        base = path.parent
    apply_overrides(p, overrides)
    return from_parser(p, base)
