"""Command line front end: ``pertspec <subcommand> [--flags] [--config FILE]``.

Settings resolve as flags > config file > subcommand defaults.  The config
file is flat ``key = value`` text with ``#`` comments, using the same keys as
the long flags (dashes or underscores).  Exit codes: 0 success, 2 invalid
input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import experiments as ex
from .ensemble import dump_matrix, epsilon_rule, sample_perturbation
from .errors import NumericalError, ValidationError
from .experiments import ExperimentConfig, Report
from .model import build_model, discretize
from .rng import derive_seed
from .smoothfn import hs_reconstruct, parse_preset
from .theory import xi_direct, xi_via_zeta

log = logging.getLogger("pertspec")

def _int_list(v):
    return tuple(int(x) for x in str(v).replace(",", " ").split())


def _float_list(v):
    return tuple(float(x) for x in str(v).replace(",", " ").split())


def _bool(v):
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(v)


_TYPE_LABELS = {_int_list: "list of integers", _float_list: "list of numbers", _bool: "boolean",
                complex: "complex number", int: "integer", float: "number"}

# key -> (parser, help)
KEYS = {
    "model": (str, "model name: wigner or band"),
    "ell": (float, "band width for the band model"),
    "n": (_int_list, "matrix size(s), comma separated"),
    "gamma": (float, "eps = n^(-gamma), gamma > 1/2"),
    "x0": (float, "basis position x0 in [0, 1]"),
    "trials": (int, "Monte Carlo trials per size"),
    "seed": (int, "64-bit master seed"),
    "alpha_c": (float, "window half-width alpha_n = alpha_c * n^(-alpha_a)"),
    "alpha_a": (float, "window exponent, 0 <= alpha_a <= 1/2"),
    "ma_width": (float, "moving-average width in t (default n^(-1/2))"),
    "t_grid": (_float_list, "window centers for thm2"),
    "distribution": (str, "entry law: gaussian, rademacher, uniform-centered"),
    "complex": (_bool, "complex Hermitian perturbation"),
    "workers": (int, "worker processes"),
    "out": (str, "output directory"),
    "phi": (str, "function preset: bump:a,b  window-:c,alpha,omega  window+:c,alpha,omega  affine:a,b"),
    "z": (complex, "spectral parameter for pi-decay, e.g. 0.6+2j"),
    "which": (str, "fig1 or fig2"),
    "s": (_float_list, "evaluation points s for xi"),
    "points": (int, "number of reconstruction points for hs-check"),
    "verbose": (int, "log level: 0 warnings, 1 info, 2 debug"),
}

COMMON = {"model": "wigner", "ell": 0.1, "gamma": 0.7, "x0": 0.5, "seed": 0, "alpha_c": 1.0,
          "alpha_a": 0.5, "ma_width": None, "t_grid": (), "distribution": "gaussian", "complex": False,
          "workers": 1, "out": "results", "verbose": 0}

DEFAULTS = {
    "figures": {"which": "fig1", "n": (10_000,), "trials": 1},
    "thm1": {"n": (500, 1000, 2000), "trials": 50, "phi": "bump:0.7,0.9"},
    "thm2": {"n": (2000,), "trials": 20},
    "pi-decay": {"n": (500, 2000), "trials": 50, "z": 0.6 + 2j},
    "opnorm": {"n": (500, 1000), "trials": 50},
    "xi": {"phi": "bump:0.6,0.9", "s": tuple(round(0.1 * k, 10) for k in range(1, 10))},
    "hs-check": {"phi": "bump:0.3,0.7", "points": 11},
    "sample": {"n": (500,)},
}

FIGURE_DEFAULTS = {"fig1": {"model": "wigner"}, "fig2": {"model": "band", "ell": 0.1}}


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict
    experiment: ExperimentConfig | None = None
    out_dir: Path = Path("results")
    verbosity: int = 0
    sources: dict = field(default_factory=dict)


def _norm_key(k: str) -> str:
    return k.strip().replace("-", "_")


def read_config_file(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key = _norm_key(key)
        if key not in KEYS:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _coerce(key: str, value, origin: str):
    if value is None or not isinstance(value, str):
        return value
    conv = KEYS[key][0]
    try:
        return conv(value.replace(" ", "") if conv is complex else value)
    except ValueError as exc:
        label = _TYPE_LABELS.get(conv, conv.__name__)
        raise ValidationError(f"{origin}: {key} = {value!r} is not a valid {label}") from exc


def parse_config(command: str, flags: dict, config_file=None) -> RunConfig:
    """Merge defaults, config file and flags (in rising precedence) and validate."""
    if command not in DEFAULTS:
        raise ValidationError(f"unknown subcommand {command!r}")
    values = dict(COMMON)
    values.update(DEFAULTS[command])
    sources = {k: "default" for k in values}
    layers = []
    if config_file is not None:
        layers.append(("config file", read_config_file(config_file)))
    layers.append(("flag", {k: v for k, v in flags.items() if v is not None}))
    if command == "figures":
        which = next((layer["which"] for _, layer in reversed(layers) if "which" in layer), values["which"])
        if which not in FIGURE_DEFAULTS:
            raise ValidationError(f"which must be fig1 or fig2, got {which!r}")
        values.update(FIGURE_DEFAULTS[which])
    for origin, layer in layers:
        for key, value in layer.items():
            key = _norm_key(key)
            if key not in KEYS:
                raise ValidationError(f"{origin}: unknown key {key!r}")
            values[key] = _coerce(key, value, origin)
            sources[key] = origin
    return _validate(command, values, sources)


def _validate(command: str, v: dict, sources: dict) -> RunConfig:
    if not v["gamma"] > 0.5:
        raise ValidationError(
            f"gamma={v['gamma']} violates the hypothesis eps = eps_n << n^(-1/2) (need gamma > 0.5)"
        )
    params = (("ell", float(v["ell"])),) if v["model"] == "band" else ()
    build_model(v["model"], **dict(params))
    out_dir = Path(v["out"])
    exp = None
    if command in ("figures", "thm1", "thm2", "pi-decay", "opnorm"):
        exp = ExperimentConfig(
            model=v["model"], model_params=params, n_list=tuple(v["n"]), gamma=float(v["gamma"]),
            x0=float(v["x0"]), trials=int(v["trials"]), master_seed=int(v["seed"]),
            alpha_c=float(v["alpha_c"]), alpha_a=float(v["alpha_a"]),
            ma_width=None if v["ma_width"] is None else float(v["ma_width"]), t_grid=tuple(v["t_grid"]),
            distribution=v["distribution"], complex_entries=bool(v["complex"]), workers=int(v["workers"]),
            output=str(out_dir / _output_name(command, v)),
        )
    if command == "figures" and v["model"] != FIGURE_DEFAULTS[v["which"]]["model"]:
        raise ValidationError(f"{v['which']} requires model {FIGURE_DEFAULTS[v['which']]['model']}")
    if command in ("thm1", "xi", "hs-check"):
        parse_preset(v["phi"])
    if command == "pi-decay" and complex(v["z"]).imag == 0:
        raise ValidationError("pi-decay needs Im z != 0")
    if command == "hs-check" and int(v["points"]) < 1:
        raise ValidationError("points must be >= 1")
    if command == "sample":
        if len(v["n"]) != 1:
            raise ValidationError("sample takes a single n")
        epsilon_rule(v["n"][0], v["gamma"])
    return RunConfig(command, v, exp, out_dir, int(v["verbose"]), sources)


def _output_name(command: str, v: dict) -> str:
    if command == "figures":
        return f"figures_{v['which']}.csv"
    return f"{command.replace('-', '_')}.csv"


# reports

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.15g}"


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_report(report: Report, path) -> Path:
    """Write ``report`` as CSV (15 significant digits) plus a JSON metadata sidecar."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(report.columns)
            for row in report.rows:
                w.writerow([_fmt(x) for x in row])
        meta = {"kind": report.kind, "columns": list(report.columns), "rows": len(report.rows),
                **report.metadata}
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n")
    except OSError as exc:
        raise OSError(f"writing report to {path} failed: {exc}") from exc
    return path


def read_report(path) -> Report:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    kind = meta.pop("kind", path.stem)
    meta.pop("columns", None)
    meta.pop("rows", None)
    body = [tuple(float(x) for x in r) for r in rows[1:]]
    return Report(kind, tuple(rows[0]) if rows else (), body, meta)


# subcommands

def _xi_report(rc: RunConfig) -> Report:
    v = rc.values
    model = build_model(v["model"], **({"ell": v["ell"]} if v["model"] == "band" else {}))
    phi = parse_preset(v["phi"])
    rows = []
    for s in v["s"]:
        a = xi_direct(model, s, phi)
        b = xi_via_zeta(model, s, phi)
        rows.append((float(s), float(a), float(b), abs(a - b)))
    return Report("xi", ("s", "xi_direct", "xi_via_zeta", "abs_diff"), rows,
                  {"model": v["model"], "ell": v["ell"], "phi": v["phi"]})


def _hs_report(rc: RunConfig) -> Report:
    v = rc.values
    phi = parse_preset(v["phi"])
    a, b = phi.support
    x = np.linspace(a, b, int(v["points"]) + 2)[1:-1] if int(v["points"]) > 1 else np.array([(a + b) / 2])
    rec = np.atleast_1d(hs_reconstruct(phi, x))
    exact = phi(x)
    rows = [(float(xi), float(e), float(r), abs(float(r) - float(e))) for xi, e, r in zip(x, exact, rec)]
    return Report("hs_check", ("x", "exact", "reconstructed", "abs_err"), rows,
                  {"phi": v["phi"], "sup_err": max(r[3] for r in rows)})


def _sample(rc: RunConfig) -> Path:
    v = rc.values
    n = int(v["n"][0])
    model = build_model(v["model"], **({"ell": v["ell"]} if v["model"] == "band" else {}))
    seed = derive_seed(int(v["seed"]), n, 0)
    x = sample_perturbation(discretize(model, n), v["distribution"], seed, complex_=bool(v["complex"]))
    path = rc.out_dir / f"sample_n{n}_seed{v['seed']}.bin"
    rc.out_dir.mkdir(parents=True, exist_ok=True)
    dump_matrix(path, x, epsilon_rule(n, v["gamma"]), seed)
    return path


def execute(rc: RunConfig) -> Path:
    cfg = rc.experiment
    v = rc.values
    if rc.command == "sample":
        return _sample(rc)
    if rc.command == "figures":
        report = ex.run_figures(cfg, v["which"])
    elif rc.command == "thm1":
        report = ex.run_thm1(cfg, v["phi"])
    elif rc.command == "thm2":
        report = ex.run_thm2(cfg)
    elif rc.command == "pi-decay":
        report = ex.run_pi_decay(cfg, complex(v["z"]))
    elif rc.command == "opnorm":
        report = ex.run_opnorm_tail(cfg)
    elif rc.command == "xi":
        report = _xi_report(rc)
    else:
        report = _hs_report(rc)
    path = rc.out_dir / (Path(cfg.output).name if cfg else _output_name(rc.command, v))
    return write_report(report, path)


def build_parser() -> argparse.ArgumentParser:
    keys = "\n".join(f"  {k:<13}{h}" for k, (_, h) in KEYS.items())
    p = argparse.ArgumentParser(
        prog="pertspec",
        description="Perturbed vector spectral measures: quadrature checks and Monte Carlo experiments.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="config file keys (key = value, '#' comments; flags take precedence):\n" + keys,
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name in DEFAULTS:
        sp = sub.add_parser(name, help=f"run {name}", epilog="keys: " + ", ".join(KEYS))
        sp.add_argument("--config", help="key = value config file")
        for key in KEYS:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=KEYS[key][1])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        rc = parse_config(args.command, flags, args.config)
        logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(rc.verbosity, 2)],
                            format="%(levelname)s %(message)s")
        log.info("running %s with %s", rc.command, {k: rc.values[k] for k in sorted(rc.values)})
        path = execute(rc)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
