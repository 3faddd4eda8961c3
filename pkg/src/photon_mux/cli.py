"""Command-line front end: ``photon-mux {dist,optimize,sweep,mc-validate,reproduce}``.

Settings are resolved in three layers: built-in defaults, then the JSON file
given with ``--config``, then explicit flags.  Exit codes: 0 success, 2 bad
configuration, 3 Monte Carlo validation failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import render
from .analytic import DEFAULT_N_MAX, distribution
from .arch import (
    SCHEME_ALIASES,
    ArchitectureError,
    Efficiencies,
    from_dict,
    to_dict,
)
from .figures import DEFAULT_PAIRS, DELTA_LEVELS, P1_LEVELS, reproduce
from .optimize import best_symmetric, p1_max
from .simulate import default_workers, run_validation, validate_case
from .sweep import METRICS, axis, contour_grid, curve_csv, fmt, scalability_curve

EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_IO = 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scheme: Any = None  # scheme name or full architecture document
    m: int | None = None
    k: int | None = None
    pump: float | None = None
    channels: list | None = None
    eta: float = 1.0
    gamma: float = 1.0
    theta: float = 10.0
    n_max: int = DEFAULT_N_MAX
    best: bool = False
    kind: str = "contour"
    metric: str = "p1_asymmetric"
    grid: int = 101
    m_values: list | None = None
    pairs: list | None = None
    trials: int = 10**6
    seed: int = 20130401
    out: str | None = None
    svg: str | None = None
    format: str = "table"

    @classmethod
    def keys(cls) -> set[str]:
        return {f.name for f in dataclasses.fields(cls)}


_INT_KEYS = {"m", "k", "n_max", "grid", "trials", "seed"}
_FLOAT_KEYS = {"pump", "eta", "gamma", "theta"}


def _coerce(key: str, value):
    if value is None:
        return None
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
    elif key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        value = float(value)
    return value


def load_config_file(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return doc


def build_config(file_doc: dict | None, flags: dict) -> RunConfig:
    """Merge defaults, config-file keys and explicit flags (later wins)."""
    merged: dict = {}
    for source in (file_doc or {}, flags):
        unknown = set(source) - RunConfig.keys()
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update({k: _coerce(k, v) for k, v in source.items() if v is not None})
    cfg = RunConfig(**merged)
    if cfg.format not in ("table", "json"):
        raise ConfigError("format must be 'table' or 'json'")
    try:
        Efficiencies(cfg.eta, cfg.gamma)
    except ArchitectureError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _parse_scheme(value):
    if isinstance(value, str) and value.lstrip().startswith("{"):
        try:
            return json.loads(value)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--scheme is not valid JSON: {exc}") from None
    return value


def _read_channels(value):
    if isinstance(value, str):
        try:
            value = json.loads(Path(value).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read channels file {value}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"channels file is not valid JSON: {exc}") from None
    if isinstance(value, dict):
        value = value.get("channels")
    if not isinstance(value, list):
        raise ConfigError("channels must be a list of {mu, k} objects")
    return value


def resolve_arch(cfg: RunConfig, default_pump: float | None = None):
    """Architecture described by the config; explicit m/k/pump override the scheme document."""
    scheme = _parse_scheme(cfg.scheme)
    if scheme is None:
        raise ConfigError("--scheme is required")
    doc = dict(scheme) if isinstance(scheme, dict) else {"scheme": str(scheme)}
    name = SCHEME_ALIASES.get(str(doc.get("scheme", "")).lower())
    if name is None:
        raise ConfigError(f"unknown scheme {doc.get('scheme')!r}")
    doc["scheme"] = name
    if name == "general":
        if cfg.channels is not None:
            doc["channels"] = _read_channels(cfg.channels)
    else:
        if cfg.pump is not None:
            doc["pump"] = cfg.pump
        doc.setdefault("pump", default_pump)
        if doc["pump"] is None:
            raise ConfigError("--pump is required")
        if name in ("ideal", "asymmetric", "symmetric") and cfg.m is not None:
            doc["m"] = cfg.m
            if name == "symmetric" and cfg.k is None:
                doc.pop("k", None)
        if name == "symmetric" and cfg.k is not None:
            doc["k"] = cfg.k
            if cfg.m is None:
                doc.pop("m", None)
    try:
        return from_dict(doc)
    except ArchitectureError as exc:
        raise ConfigError(str(exc)) from None


def _efficiencies(cfg: RunConfig) -> Efficiencies:
    return Efficiencies(cfg.eta, cfg.gamma)


def _write(path, text: str):
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- commands


def cmd_dist(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    arch = resolve_arch(cfg)
    eff = _efficiencies(cfg)
    dist = distribution(arch, eff, cfg.n_max)
    report = {"scheme": to_dict(arch), "eta": eff.eta, "gamma": eff.gamma, **dist.to_dict()}
    if cfg.out:
        _write(cfg.out, _json(report))
    if cfg.format == "json":
        stdout.write(_json(report))
        return 0
    stdout.write(f"scheme  {json.dumps(to_dict(arch), sort_keys=True)}\n")
    stdout.write(f"eta {fmt(eff.eta)}  gamma {fmt(eff.gamma)}\n")
    stdout.write(f"{'n':>4}  P(N=n)\n")
    for n, p in enumerate(dist.probs):
        stdout.write(f"{n:>4}  {fmt(p)}\n")
    stdout.write(f"P1 = {dist.p1:.5f}  ({fmt(dist.p1)})\n")
    stdout.write(f"P(N>=2) = {fmt(dist.p_multi)}\n")
    stdout.write(f"SNR = {dist.snr:.5f}  ({fmt(dist.snr)})\n")
    return 0


def cmd_optimize(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    eff = _efficiencies(cfg)
    if cfg.best:
        if cfg.m is None:
            raise ConfigError("--best needs --m (largest crystal count allowed)")
        result = best_symmetric(cfg.m, eff, cfg.theta)
    else:
        result = p1_max(resolve_arch(cfg, default_pump=1.0), eff, cfg.theta)
    doc = result.to_dict()
    if cfg.out:
        _write(cfg.out, _json(doc))
    stdout.write(_json(doc))
    return 0


def _curve_m_values(cfg: RunConfig, kind: str) -> list[int]:
    if cfg.m_values is not None:
        return [int(m) for m in cfg.m_values]
    top = cfg.m if cfg.m is not None else 256
    if kind == "symmetric":
        return [2**k for k in range(1, top.bit_length()) if 2**k <= top]
    return list(range(2, top + 1))


def cmd_sweep(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    if cfg.kind == "curve":
        name = SCHEME_ALIASES.get(str(_parse_scheme(cfg.scheme) or "asymmetric").lower())
        if name not in ("asymmetric", "symmetric", "ideal"):
            raise ConfigError("curve sweeps need --scheme asymmetric, symmetric or ideal")
        try:
            points = scalability_curve(name, cfg.theta, _efficiencies(cfg), _curve_m_values(cfg, name))
        except (ArchitectureError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        text = curve_csv(points)
        if cfg.svg:
            _write(cfg.svg, render.line_chart(
                [(f"eta={cfg.eta:g}, gamma={cfg.gamma:g}", [p.m for p in points], [p.p1 for p in points])],
                "number of crystals m", f"P1 (SNR >= {cfg.theta:g})", f"{name} scalability", log_x=True))
    elif cfg.kind == "contour":
        if cfg.metric not in METRICS:
            raise ConfigError(f"metric must be one of {list(METRICS)}")
        if cfg.m is None:
            raise ConfigError("contour sweeps need --m")
        try:
            ax = axis(cfg.grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        grid = contour_grid(cfg.metric, cfg.theta, cfg.m, ax, ax, workers=default_workers())
        text = grid.to_csv()
        if cfg.svg:
            levels = DELTA_LEVELS if cfg.metric == "delta" else P1_LEVELS
            panel = {"values": grid.values, "x_axis": grid.eta_axis, "y_axis": grid.gamma_axis,
                     "title": f"{cfg.metric}, m = {cfg.m}"}
            _write(cfg.svg, render.heatmaps([panel], "eta", "gamma", levels, cfg.metric))
    else:
        raise ConfigError("--kind must be 'curve' or 'contour'")
    if cfg.out:
        _write(cfg.out, text)
    else:
        stdout.write(text)
    return 0


def cmd_mc_validate(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    workers = default_workers()
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.scheme is not None:
        arch = resolve_arch(cfg, default_pump=0.3)
        try:
            reports = [validate_case(arch, _efficiencies(cfg), cfg.trials, cfg.seed, workers)]
        except ArchitectureError as exc:
            raise ConfigError(str(exc)) from None
    else:
        reports = run_validation(cfg.trials, cfg.seed, workers=workers)
    failed = 0
    for r in reports:
        worst = max(abs(c.estimate - c.expected) / c.allowed if c.allowed else 0.0 for c in r.checks)
        failed += not r.ok
        stdout.write(
            f"{'PASS' if r.ok else 'FAIL'}  {json.dumps(r.scheme, sort_keys=True)}  "
            f"eta={r.eta:g} gamma={r.gamma:g}  worst/allowed={worst:.3f}\n"
        )
    stdout.write(f"{len(reports) - failed}/{len(reports)} cases pass\n")
    if cfg.out:
        _write(cfg.out, _json({"trials": cfg.trials, "seed": cfg.seed, "cases": [r.to_dict() for r in reports]}))
    return EXIT_VALIDATION if failed else 0


def cmd_reproduce(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    pairs = cfg.pairs if cfg.pairs is not None else DEFAULT_PAIRS
    try:
        pairs = [(float(e), float(g)) for e, g in pairs]
        for e, g in pairs:
            Efficiencies(e, g)
        if cfg.grid < 2:
            raise ConfigError("grid needs at least 2 points")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad pairs: {exc}") from None
    outdir = cfg.out or "figures"
    manifest = reproduce(outdir, seed=cfg.seed, grid=cfg.grid, trials=cfg.trials, pairs=pairs,
                         workers=default_workers())
    for name in manifest["files"]:
        stdout.write(f"wrote {Path(outdir) / name}\n")
    stdout.write(f"wrote {Path(outdir) / 'manifest.json'}\n")
    return 0


COMMANDS = {
    "dist": cmd_dist,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "mc-validate": cmd_mc_validate,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default settings")
    common.add_argument("--scheme", help="faint_laser|ideal|symmetric|asymmetric|general, or a JSON document")
    common.add_argument("--m", type=int, help="crystal count (largest allowed with --best)")
    common.add_argument("--k", type=int, help="tree depth of the symmetric scheme")
    common.add_argument("--pump", type=float, help="mean pairs per crystal before compensation")
    common.add_argument("--channels", help="JSON file with a list of {mu, k} channels")
    common.add_argument("--eta", type=float, help="heralding detector efficiency")
    common.add_argument("--gamma", type=float, help="router transmissivity")
    common.add_argument("--theta", type=float, help="guaranteed SNR")
    common.add_argument("--out", help="output file (directory for reproduce)")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)

    parser = argparse.ArgumentParser(prog="photon-mux", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("dist", parents=[common], help="photon-number distribution of one configuration")
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--format", choices=("table", "json"))
    p = sub.add_parser("optimize", parents=[common], help="largest P1 with SNR >= theta")
    p.add_argument("--best", action="store_true", default=None, help="best symmetric tree with m' <= --m")
    p = sub.add_parser("sweep", parents=[common], help="scalability curve or (eta, gamma) grid")
    p.add_argument("--kind", choices=("curve", "contour"))
    p.add_argument("--metric", choices=METRICS)
    p.add_argument("--grid", type=int, help="points per axis of the (eta, gamma) grid")
    p.add_argument("--svg", help="also render the result to this SVG file")
    sub.add_parser("mc-validate", parents=[common], help="Monte Carlo check of the exact distribution")
    p = sub.add_parser("reproduce", parents=[common], help="regenerate every figure dataset")
    p.add_argument("--grid", type=int, help="points per axis of the contour grids")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_doc = load_config_file(args.config) if args.config else None
        cfg = build_config(file_doc, flags)
        return COMMANDS[args.command](cfg)
    except ValueError as exc:  # ConfigError, ArchitectureError and bad numeric inputs
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
