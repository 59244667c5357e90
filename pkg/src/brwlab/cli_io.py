"""Command-line surface: strict INI configs, CSV/SVG emission, exit codes.

One config file drives one subcommand.  The format is deliberately rigid --
``key = value`` lines under ``[section]`` headers, no inline comments, every
key known in advance -- because configs are archived next to their outputs
as the experiment's provenance.  Every run re-emits its configuration in
canonical form (defaults filled in) into the output directory.

Subcommands: ``classify``, ``regime-map``, ``simulate``, ``experiment``,
``props``, ``group``.  Exit codes: 0 ok, 1 usage, 2 validation,
3 a statistical gate failed.  The only environment override is
``BRWLAB_OUTPUT_DIR`` for the output directory.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .lab import ExperimentSpec, law_text, run_experiment
from .appendix_props import run_suite
from .model import (
    ComplexParam,
    Displacement,
    Gaussian,
    PointMass,
    ReproductionLaw,
    Uniform,
)
from .regimes import (
    EXTREMAL,
    GAUSSIAN_BOUNDARY,
    GAUSSIAN_INTERIOR,
    OUT_OF_THEORY,
    STABLE_BOUNDARY,
    classify,
    compute_group,
    regime_map,
    snail_curves,
    solve_theta_star,
)
from .simulator import SimConfig, iter_replicas

CSV_MAGIC = "# brwlab-csv v1"

COMMANDS = ("classify", "regime-map", "simulate", "experiment", "props",
            "group")

_REQUIRED = object()

# key -> (value kind, default); _REQUIRED means the config must set it
_LAW_SCHEMA = {
    "offspring": ("float_list", _REQUIRED),
    "displacement": ("displacement", _REQUIRED),
}
_RUN_SCHEMA = {
    "master_seed": ("int", 0),
    "thread_count": ("int", 1),
    "output_dir": ("str", "brwlab-out"),
}
_COMMAND_SCHEMAS = {
    "classify": {"lambda": ("complex", _REQUIRED)},
    "regime-map": {
        "theta_min": ("float", -1.5),
        "theta_max": ("float", 1.5),
        "theta_steps": ("int", 121),
        "eta_min": ("float", -1.5),
        "eta_max": ("float", 1.5),
        "eta_steps": ("int", 121),
    },
    "simulate": {
        "lambda": ("complex", _REQUIRED),
        "depth_n": ("int", 10),
        "extra_m": ("int", 0),
        "n_replicas": ("int", 100),
    },
    "experiment": {
        "kind": ("str", _REQUIRED),
        "lambda": ("complex", _REQUIRED),
        "n_grid": ("int_list", (12,)),
        "extra_m": ("int", 8),
        "n_replicas": ("int", 200),
        "bootstrap": ("int", 500),
        "hill_k": ("int", 500),
        "trunc_k": ("float", 6.0),
        "tip_n": ("int", 18),
        "n_ref": ("int", 18),
    },
    "props": {"scale": ("float", 1.0)},
    "group": {
        "lambda": ("complex", _REQUIRED),
        "n_points": ("int", 400),
        "x_min": ("float", -5.0),
        "x_max": ("float", 2.25),
    },
}

# commands that make no sense without a reproduction law
_NEEDS_LAW = ("classify", "regime-map", "simulate", "experiment", "group")


class ConfigError(ValueError):
    """Config rejection with the offending line number when known."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class RunConfig:
    """One fully resolved run: law, command parameters, seeds, output."""

    command: str
    law: Optional[ReproductionLaw]
    params: tuple  # ((key, value), ...) in schema order, defaults filled
    master_seed: int
    thread_count: int
    output_dir: str

    def get(self, key: str):
        for k, v in self.params:
            if k == key:
                return v
        raise KeyError(f"{self.command} has no parameter {key!r}")


# ---------------------------------------------------------------------------
# value grammar


def _parse_int(text: str, line: int) -> int:
    try:
        return int(text, 10)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", line) from None


def _parse_float(text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", line) from None


def _parse_complex(text: str, line: int) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise ConfigError(
            f"expected a complex number like 0.3+0.6j, got {text!r}", line
        ) from None


def _parse_list(text: str, line: int, element) -> tuple:
    if not (text.startswith("[") and text.endswith("]")):
        raise ConfigError(f"expected a [..] list, got {text!r}", line)
    body = text[1:-1].strip()
    if not body:
        return ()
    return tuple(element(part.strip(), line) for part in body.split(","))


_DISPLACEMENT_FORMS = {
    "gaussian": (("mean", "sd"), Gaussian),
    "pointmass": (("x",), PointMass),
    "uniform": (("a", "b"), Uniform),
}


def _parse_displacement(text: str, line: int) -> Displacement:
    match = re.fullmatch(r"([a-z]+)\s*\(\s*(.*?)\s*\)", text.strip())
    if match is None:
        raise ConfigError(
            f"expected name(key=value, ...) such as gaussian(mean=0, sd=1), "
            f"got {text!r}", line,
        )
    name, body = match.group(1), match.group(2)
    if name not in _DISPLACEMENT_FORMS:
        raise ConfigError(
            f"unknown displacement {name!r}; choose from "
            f"{', '.join(sorted(_DISPLACEMENT_FORMS))}", line,
        )
    keys, ctor = _DISPLACEMENT_FORMS[name]
    kwargs = {}
    for part in filter(None, (p.strip() for p in body.split(","))):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in keys:
            raise ConfigError(
                f"displacement {name} takes ({', '.join(keys)}); "
                f"got {part!r}", line,
            )
        if key in kwargs:
            raise ConfigError(f"duplicate displacement argument {key!r}", line)
        kwargs[key] = _parse_float(value.strip(), line)
    missing = [k for k in keys if k not in kwargs]
    if missing:
        raise ConfigError(
            f"displacement {name} is missing {', '.join(missing)}", line)
    try:
        return ctor(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"displacement: {exc}", line) from None


_VALUE_PARSERS = {
    "int": _parse_int,
    "float": _parse_float,
    "complex": _parse_complex,
    "str": lambda text, line: text,
    "float_list": lambda text, line: _parse_list(text, line, _parse_float),
    "int_list": lambda text, line: _parse_list(text, line, _parse_int),
    "displacement": _parse_displacement,
}


def _fmt_float(x: float) -> str:
    return f"{x:.17g}"


def _fmt_value(kind: str, value) -> str:
    if kind == "int":
        return str(int(value))
    if kind == "float":
        return _fmt_float(float(value))
    if kind == "complex":
        z = complex(value)
        return f"{z.real:.17g}{z.imag:+.17g}j"
    if kind == "str":
        return str(value)
    if kind in ("float_list", "int_list"):
        inner = ", ".join(
            str(int(v)) if kind == "int_list" else _fmt_float(float(v))
            for v in value
        )
        return f"[{inner}]"
    if kind == "displacement":
        if isinstance(value, Gaussian):
            return (f"gaussian(mean={_fmt_float(value.mean)}, "
                    f"sd={_fmt_float(value.sd)})")
        if isinstance(value, PointMass):
            return f"pointmass(x={_fmt_float(value.x)})"
        return f"uniform(a={_fmt_float(value.a)}, b={_fmt_float(value.b)})"
    raise ValueError(f"unknown value kind {kind!r}")


# ---------------------------------------------------------------------------
# config parse / emit


def _collect_sections(text: str) -> dict:
    """Raw pass: {section: [(line, key, value), ...]}, strictly validated."""
    known = {"law", "run", *_COMMAND_SCHEMAS}
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            name = line[1:-1].strip()
            if name not in known:
                raise ConfigError(
                    f"unknown section [{name}]; known sections are "
                    f"{', '.join(sorted(known))}", lineno,
                )
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", lineno)
            sections[name] = []
            current = name
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(
                f"expected 'key = value' or a [section] header, got {line!r}",
                lineno,
            )
        if current is None:
            raise ConfigError("key/value pair before any [section] header",
                              lineno)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError("empty key", lineno)
        if not value:
            raise ConfigError(f"key {key!r} has an empty value", lineno)
        if any(k == key for _, k, _ in sections[current]):
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno)
        sections[current].append((lineno, key, value))
    return sections


def _apply_schema(section: str, schema: dict, entries: list) -> dict:
    values = {}
    for lineno, key, raw in entries:
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        kind, _ = schema[key]
        values[key] = _VALUE_PARSERS[kind](raw, lineno)
    for key, (kind, default) in schema.items():
        if key in values:
            continue
        if default is _REQUIRED:
            raise ConfigError(f"[{section}] is missing required key {key!r}")
        values[key] = default
    return values


def parse_config(text: str, command: Optional[str] = None) -> RunConfig:
    """Parse a strict INI config into a fully defaulted RunConfig.

    The command is taken from the single command section present, or
    cross-checked against ``command`` when the caller supplies one.
    Unknown sections, unknown keys, duplicates, and malformed values are
    rejected with their line numbers.
    """
    sections = _collect_sections(text)
    present = [name for name in sections if name in _COMMAND_SCHEMAS]
    if command is None:
        if len(present) != 1:
            raise ConfigError(
                "the config must contain exactly one command section; found "
                + (", ".join(f"[{p}]" for p in present) if present else "none")
            )
        command = present[0]
    else:
        if command not in _COMMAND_SCHEMAS:
            raise ConfigError(f"unknown command {command!r}")
        stray = [p for p in present if p != command]
        if stray:
            raise ConfigError(
                f"config declares [{stray[0]}] but the command is {command}")

    run_values = _apply_schema("run", _RUN_SCHEMA, sections.get("run", []))

    law = None
    if "law" in sections:
        law_values = _apply_schema("law", _LAW_SCHEMA, sections["law"])
        try:
            law = ReproductionLaw(tuple(law_values["offspring"]),
                                  law_values["displacement"])
        except ValueError as exc:
            line = next((ln for ln, k, _ in sections["law"]
                         if k == "offspring"), None)
            raise ConfigError(f"offspring: {exc}", line) from None
    elif command in _NEEDS_LAW:
        raise ConfigError(f"command {command!r} needs a [law] section")

    schema = _COMMAND_SCHEMAS[command]
    params = _apply_schema(command, schema, sections.get(command, []))
    return RunConfig(
        command=command,
        law=law,
        params=tuple((key, params[key]) for key in schema),
        master_seed=run_values["master_seed"],
        thread_count=run_values["thread_count"],
        output_dir=run_values["output_dir"],
    )


def emit_config(cfg: RunConfig) -> str:
    """Canonical text form of a RunConfig; a fixed point of parse->emit."""
    lines = []
    if cfg.law is not None:
        lines.append("[law]")
        lines.append("offspring = "
                     + _fmt_value("float_list", cfg.law.offspring_probs))
        lines.append("displacement = "
                     + _fmt_value("displacement", cfg.law.displacement))
        lines.append("")
    lines.append("[run]")
    lines.append(f"master_seed = {cfg.master_seed}")
    lines.append(f"thread_count = {cfg.thread_count}")
    lines.append(f"output_dir = {cfg.output_dir}")
    lines.append("")
    lines.append(f"[{cfg.command}]")
    schema = _COMMAND_SCHEMAS[cfg.command]
    for key, value in cfg.params:
        lines.append(f"{key} = {_fmt_value(schema[key][0], value)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# CSV / SVG emission


def emit_csv(path, schema: str, header: Sequence[str],
             rows: Iterable[Sequence]) -> None:
    """Write a versioned CSV: schema comment, header, %.17g floats."""
    out = [f"{CSV_MAGIC} schema={schema}", ",".join(header)]
    for row in rows:
        cells = []
        for value in row:
            if isinstance(value, (bool, np.bool_)):
                cells.append("true" if value else "false")
            elif isinstance(value, (int, np.integer)):
                cells.append(str(int(value)))
            elif isinstance(value, (float, np.floating)):
                cells.append(_fmt_float(float(value)))
            else:
                text = str(value)
                if "," in text or "\n" in text:
                    raise ValueError(f"unquotable CSV cell {text!r}")
                cells.append(text)
        out.append(",".join(cells))
    Path(path).write_text("\n".join(out) + "\n")


def emit_svg(path, markup: str) -> None:
    Path(path).write_text(markup)


REGIME_COLORS = {
    GAUSSIAN_INTERIOR: "#4477aa",
    GAUSSIAN_BOUNDARY: "#66ccee",
    EXTREMAL: "#ee6677",
    STABLE_BOUNDARY: "#ccbb44",
    OUT_OF_THEORY: "#bbbbbb",
}

_SVG_HEAD = ('<svg xmlns="http://www.w3.org/2000/svg" '
             'viewBox="0 0 640 560" width="640" height="560">')


def regime_map_svg(labels, theta_grid: Sequence[float],
                   eta_grid: Sequence[float]) -> str:
    """Colored-cell map of regime variants over the parameter rectangle.

    Fixed 640x560 viewBox: the 600x460 map sits above a legend strip with
    one swatch per variant.  Output bytes depend only on the inputs.
    """
    n_theta, n_eta = len(theta_grid), len(eta_grid)
    if len(labels) != n_eta or any(len(row) != n_theta for row in labels):
        raise ValueError("label grid does not match the coordinate grids")
    x0, y0, width, height = 20.0, 20.0, 600.0, 460.0
    cell_w, cell_h = width / n_theta, height / n_eta
    parts = [_SVG_HEAD,
             f'<rect x="{x0}" y="{y0}" width="{width}" height="{height}" '
             f'fill="#ffffff"/>']
    for i, row in enumerate(labels):
        # row i is eta_grid[i]; larger eta is drawn higher up
        y = y0 + height - (i + 1) * cell_h
        for j, label in enumerate(row):
            x = x0 + j * cell_w
            color = REGIME_COLORS[label.variant]
            parts.append(
                f'<rect x="{x:.4f}" y="{y:.4f}" width="{cell_w:.4f}" '
                f'height="{cell_h:.4f}" fill="{color}"/>'
            )
    y_leg = y0 + height + 30.0
    x = x0
    for variant, color in REGIME_COLORS.items():
        parts.append(f'<rect x="{x:.4f}" y="{y_leg:.4f}" width="14" '
                     f'height="14" fill="{color}"/>')
        parts.append(f'<text x="{x + 18:.4f}" y="{y_leg + 12:.4f}" '
                     f'font-size="12" font-family="sans-serif">'
                     f'{variant}</text>')
        x += 24.0 + 7.2 * len(variant)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


_SNAIL_PALETTE = ("#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee",
                  "#aa3377", "#bbbbbb", "#222255", "#225555", "#552255")


def snail_svg(curves: Sequence[np.ndarray], view: float = 8.0) -> str:
    """Spiral polylines (one per circle-group coset) in a fixed viewBox."""
    parts = [_SVG_HEAD.replace("560", "640"),
             '<rect x="0" y="0" width="640" height="640" fill="#ffffff"/>',
             '<line x1="0" y1="320" x2="640" y2="320" stroke="#dddddd"/>',
             '<line x1="320" y1="0" x2="320" y2="640" stroke="#dddddd"/>']
    scale = 320.0 / view
    for idx, curve in enumerate(curves):
        xs = 320.0 + scale * np.real(curve)
        ys = 320.0 - scale * np.imag(curve)
        points = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys))
        color = _SNAIL_PALETTE[idx % len(_SNAIL_PALETTE)]
        parts.append(f'<polyline points="{points}" fill="none" '
                     f'stroke="{color}" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# command runners


def _text_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, complex):
        return _fmt_value("complex", value)
    if isinstance(value, float):
        return _fmt_float(value)
    return str(value)


def _write_provenance(cfg: RunConfig, out_dir: Path) -> None:
    (out_dir / "config.ini").write_text(emit_config(cfg))


def _run_classify(cfg: RunConfig, out_dir: Path) -> int:
    label = classify(cfg.law, cfg.get("lambda"))
    lines = [f"lambda: {_fmt_value('complex', cfg.get('lambda'))}",
             f"law: {law_text(cfg.law)}",
             f"variant: {label.variant}"]
    for field in ("limit_is_complex", "nondegenerate_2theta",
                  "sigma_sq_positive", "alpha", "w", "reason"):
        value = getattr(label, field)
        if value is not None:
            lines.append(f"{field}: {_text_value(value)}")
    for key, value in label.notes:
        lines.append(f"{key}: {_text_value(value)}")
    text = "\n".join(lines) + "\n"
    (out_dir / "classify.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def _run_regime_map(cfg: RunConfig, out_dir: Path) -> int:
    for axis in ("theta", "eta"):
        if cfg.get(f"{axis}_steps") < 1:
            raise ConfigError(f"{axis}_steps must be >= 1")
        if not cfg.get(f"{axis}_min") <= cfg.get(f"{axis}_max"):
            raise ConfigError(f"{axis}_min must not exceed {axis}_max")
    thetas = np.linspace(cfg.get("theta_min"), cfg.get("theta_max"),
                         cfg.get("theta_steps"))
    etas = np.linspace(cfg.get("eta_min"), cfg.get("eta_max"),
                       cfg.get("eta_steps"))
    labels = regime_map(cfg.law, thetas, etas)
    rows = []
    counts: dict = {}
    for eta, row in zip(etas, labels):
        for theta, label in zip(thetas, row):
            rows.append((float(theta), float(eta), label.variant))
            counts[label.variant] = counts.get(label.variant, 0) + 1
    emit_csv(out_dir / "regime_map.csv", "regime-map",
             ("theta", "eta", "variant"), rows)
    emit_svg(out_dir / "regime_map.svg", regime_map_svg(labels, thetas, etas))
    for variant in sorted(counts):
        sys.stdout.write(f"{variant}: {counts[variant]} points\n")
    return 0


def _run_simulate(cfg: RunConfig, out_dir: Path) -> int:
    lam = cfg.get("lambda")
    try:
        tstar: Optional[float] = solve_theta_star(cfg.law).theta_star
    except ValueError:
        tstar = None  # boundary statistics become NaN columns
    sim = SimConfig(
        depth_n=cfg.get("depth_n"),
        extra_m=cfg.get("extra_m"),
        params=(ComplexParam.for_law(cfg.law, lam),),
        master_seed=cfg.master_seed,
        tstar=tstar,
    )
    n = cfg.get("depth_n")
    rows = []
    for index, rep in enumerate(
            iter_replicas(cfg.law, sim, cfg.get("n_replicas"))):
        z = rep.z[n, 0]
        rows.append((index, z.real, z.imag, rep.w[n], rep.dw[n],
                     rep.min_v[n], rep.sup_weight[n],
                     int(rep.population[n])))
    emit_csv(out_dir / "replicas.csv", "replicas",
             ("replica", "re_Z", "im_Z", "W", "dW", "minV", "supw", "pop"),
             rows)
    sys.stdout.write(f"wrote {len(rows)} replicas to "
                     f"{out_dir / 'replicas.csv'}\n")
    return 0


def _run_experiment(cfg: RunConfig, out_dir: Path) -> int:
    spec = ExperimentSpec(
        kind=cfg.get("kind"),
        law=cfg.law,
        lam=cfg.get("lambda"),
        n_grid=cfg.get("n_grid"),
        extra_m=cfg.get("extra_m"),
        n_replicas=cfg.get("n_replicas"),
        bootstrap=cfg.get("bootstrap"),
        hill_k=cfg.get("hill_k"),
        trunc_k=cfg.get("trunc_k"),
        tip_n=cfg.get("tip_n"),
        n_ref=cfg.get("n_ref"),
        seed=cfg.master_seed,
    )
    outcome = run_experiment(spec, out_dir)
    sys.stdout.write(outcome.report_text)
    return 0 if outcome.passed else 3


def _run_props(cfg: RunConfig, out_dir: Path) -> int:
    scale = cfg.get("scale")
    if not 0.0 < scale <= 1.0:
        raise ConfigError(f"scale must lie in (0, 1]; got {scale:g}")
    report = run_suite(seed=cfg.master_seed, scale=scale)
    text = "\n".join(report.lines()) + "\n"
    (out_dir / "props.txt").write_text(text)
    sys.stdout.write(text)
    return 0 if report.violations == 0 else 3


def _run_group(cfg: RunConfig, out_dir: Path) -> int:
    lam = cfg.get("lambda")
    if not cfg.get("x_min") < cfg.get("x_max"):
        raise ConfigError("x_min must be below x_max")
    if cfg.get("n_points") < 2:
        raise ConfigError("n_points must be >= 2")
    group = compute_group(cfg.law, lam)
    curves = snail_curves(cfg.law, lam, n_points=cfg.get("n_points"),
                          x_range=(cfg.get("x_min"), cfg.get("x_max")))
    lines = [
        f"lambda: {_fmt_value('complex', complex(lam))}",
        f"full_circle: {_text_value(group.full_circle)}",
        f"u1_order: {_text_value(group.u1_order)}",
        f"w: {_fmt_value('complex', group.w)}",
        f"phase: {_fmt_float(group.phase)}",
        f"detection: {group.detection}",
        f"curves: {len(curves)}",
    ]
    text = "\n".join(lines) + "\n"
    (out_dir / "group.txt").write_text(text)
    rows = []
    for idx, curve in enumerate(curves):
        for z in curve:
            rows.append((idx, z.real, z.imag))
    emit_csv(out_dir / "snail.csv", "snail-curves", ("curve", "re", "im"),
             rows)
    emit_svg(out_dir / "snail.svg", snail_svg(curves))
    sys.stdout.write(text)
    return 0


_RUNNERS = {
    "classify": _run_classify,
    "regime-map": _run_regime_map,
    "simulate": _run_simulate,
    "experiment": _run_experiment,
    "props": _run_props,
    "group": _run_group,
}


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for
    # validation, so usage problems are remapped to 1
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="brwlab",
        description="Branching-random-walk martingale laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} command")
        cmd.add_argument("config", help="path to the INI config file")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        sys.stderr.write(f"brwlab: cannot read config: {exc}\n")
        return 1
    try:
        cfg = parse_config(text, args.command)
        out_dir = Path(os.environ.get("BRWLAB_OUTPUT_DIR") or cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_provenance(cfg, out_dir)
        return _RUNNERS[cfg.command](cfg, out_dir)
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"brwlab: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
