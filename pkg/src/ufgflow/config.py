"""Run configuration: a line-oriented ``section.key = value`` format.

Grammar (one statement per line)::

    line      := blank | comment | header | statement
    comment   := '#' anything
    header    := '[' section ']'
    statement := key '=' value [comment]
    key       := section '.' name | name   (e.g. model.alpha; a bare name
                                            takes the section of the last header)
    value     := scalar | list | table
    list      := scalar (',' scalar)*      (e.g. grid.counts = 256, 256)
    table     := list (';' list)*          (e.g. grid.bounds = -8 8; -2 2)

Inside a list, whitespace also separates items, so ``-8 8`` and ``-8, 8``
are the same.  Booleans are ``true``/``false``.  A key may appear once.
Every key has a default; :func:`parse_config` resolves the defaults that
depend on other keys (dt, epsilon, continuation, grid) and the canonical
text produced by :meth:`RunConfig.to_text` lists all of them.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .gfdn import (INITIAL_KINDS, SolverConfig, default_continuation, default_dt, default_epsilon,
                   validate_params)
from .grid import Grid, build_grid
from .model import Harmonic, HarmonicPlusLattice, Params, Tabulated, optical_lattice_1d

KINDS = ("ground", "vortex", "sweep", "dimred", "table1", "table2")
POTENTIALS = ("harmonic", "lattice", "tabulated")
OUTPUT_ENV = "UFGFLOW_OUT"


class ConfigError(ValueError):
    """Parse or schema error attributed to a line and column (1-based)."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


# key -> (type, default); "auto" defaults are resolved after parsing
SCHEMA: dict[str, tuple[str, object]] = {
    "run.kind": ("str", "ground"),
    "run.winding": ("int", 1),
    "run.method": ("str", "auto"),
    "run.multistart": ("bool", "auto"),
    "model.dim": ("int", 1),
    "model.alpha": ("float", 0.0),
    "model.beta": ("float", 0.0),
    "model.omega": ("float", 0.0),
    "model.gammas": ("floats", "auto"),
    "model.epsilon": ("float", "auto"),
    "potential.kind": ("str", "harmonic"),
    "potential.amplitudes": ("floats", "auto"),
    "potential.wavenumbers": ("floats", "auto"),
    "potential.file": ("str", ""),
    "grid.bounds": ("table", "auto"),
    "grid.counts": ("ints", "auto"),
    "solver.dt": ("float", "auto"),
    "solver.tol": ("float", 1e-6),
    "solver.max_steps": ("int", 200_000),
    "solver.initial": ("str", "auto"),
    "solver.initial_path": ("str", ""),
    "solver.perturbation": ("float", "auto"),
    "solver.seed": ("int", 0),
    "solver.linear_tol": ("float", 1e-10),
    "solver.linear_max_iter": ("int", 10_000),
    "solver.energy_every": ("int", 1),
    "solver.continuation": ("table", "auto"),
    "sweep.alpha": ("floats", ""),
    "sweep.beta": ("floats", ""),
    "sweep.omega": ("floats", ""),
    "sweep.workers": ("int", 1),
    "dimred.gamma_perp": ("floats", "8, 16"),
    "dimred.h_axial": ("float", 0.06),
    "dimred.half_axial": ("float", 6.0),
    "dimred.widths": ("float", 6.0),
    "dimred.points_per_width": ("float", 8.0),
    "dimred.node_budget": ("int", 2_000_000),
    "output.dir": ("str", ""),
    "output.text_field": ("bool", False),
    "output.figures": ("bool", True),
    "output.census_threshold": ("float", 1e-3),
}

SECTIONS = tuple(dict.fromkeys(k.split(".")[0] for k in SCHEMA))

DEFAULT_GRIDS = {
    1: ([(-20.0, 20.0)], [4000]),
    2: ([(-12.0, 12.0)] * 2, [512, 512]),
    3: ([(-6.0, 6.0)] * 3, [96, 96, 96]),
}


@dataclass
class RunConfig:
    kind: str
    params: Params
    potential: object
    grid: Grid
    solver: SolverConfig
    winding: int = 1
    method: str = "auto"
    multistart: bool = False
    sweep: dict = field(default_factory=dict)
    workers: int = 1
    dimred: dict = field(default_factory=dict)
    output_dir: str = ""
    text_field: bool = False
    figures: bool = True
    census_threshold: float = 1e-3
    values: dict = field(default_factory=dict)   # resolved key -> value, for the manifest
    notes: list = field(default_factory=list)

    def to_text(self) -> str:
        """Canonical config text (all keys, defaults materialized)."""
        out = []
        section = None
        for key in SCHEMA:
            sec = key.split(".")[0]
            if sec != section:
                if out:
                    out.append("")
                section = sec
            out.append(f"{key} = {format_value(self.values[key])}")
        return "\n".join(out) + "\n"


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        if v and isinstance(v[0], (list, tuple)):
            return "; ".join(" ".join(format_value(x) for x in row) for row in v)
        return ", ".join(format_value(x) for x in v)
    return str(v)


# --------------------------------------------------------------------------
# lexing


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _items(text: str, col0: int, lineno: int):
    """Split a list into (token, column) pairs on commas and whitespace."""
    out = []
    i = 0
    n = len(text)
    while i < n:
        if text[i] in " \t,":
            i += 1
            continue
        j = i
        while j < n and text[j] not in " \t,":
            j += 1
        out.append((text[i:j], col0 + i))
        i = j
    return out


def _convert(tok: str, typ: str, line: int, col: int):
    try:
        if typ == "float":
            v = float(tok)
            if not math.isfinite(v):
                raise ValueError
            return v
        if typ == "int":
            return int(tok)
        if typ == "bool":
            low = tok.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError
    except ValueError:
        raise ConfigError(f"expected {typ}, found {tok!r}", line, col) from None
    return tok


def _parse_value(raw: str, typ: str, line: int, col: int):
    lead = len(raw) - len(raw.lstrip())
    text = raw.strip()
    col += lead
    if typ in ("str",):
        return text
    if typ in ("float", "int", "bool"):
        items = _items(text, col, line)
        if len(items) != 1:
            raise ConfigError(f"expected a single {typ}", line, col)
        return _convert(items[0][0], typ, line, items[0][1])
    if typ in ("floats", "ints"):
        scalar = typ[:-1]
        if not text:
            return []
        return [_convert(t, scalar, line, c) for t, c in _items(text, col, line)]
    if typ == "table":
        rows = []
        offset = 0
        for part in text.split(";"):
            items = _items(part, col + offset, line)
            offset += len(part) + 1
            if items:
                rows.append([_convert(t, "float", line, c) for t, c in items])
        return rows
    raise AssertionError(typ)


def parse_text(text: str) -> tuple[dict, dict]:
    """Return (values, positions) for the keys present in ``text``."""
    values: dict = {}
    where: dict = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line)
        if not body.strip():
            continue
        head = body.strip()
        if head.startswith("["):
            col = len(body) - len(body.lstrip()) + 1
            name = head[1:-1].strip() if head.endswith("]") else ""
            if not name or name not in SECTIONS:
                raise ConfigError(f"bad section header {head!r}; sections are "
                                  f"{', '.join(SECTIONS)}", lineno, col)
            section = name
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col)
        eq = body.index("=")
        key_raw = body[:eq]
        key = key_raw.strip()
        if section and "." not in key:
            key = f"{section}.{key}"
        kcol = len(key_raw) - len(key_raw.lstrip()) + 1
        if not key:
            raise ConfigError("missing key before '='", lineno, eq + 1)
        if key not in SCHEMA:
            hint = "" if "." in key else " (keys look like section.name, e.g. model.beta)"
            raise ConfigError(f"unknown key {key!r}{hint}", lineno, kcol)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {where[key][0]})",
                              lineno, kcol)
        typ = SCHEMA[key][0]
        values[key] = _parse_value(body[eq + 1:], typ, lineno, eq + 2)
        where[key] = (lineno, kcol)
    return values, where


# --------------------------------------------------------------------------
# resolution


def _err(msg, key, where):
    line, col = where.get(key, (0, 0))
    return ConfigError(msg, line, col)


def _choice(values, key, options, where):
    v = values[key]
    if v not in options:
        raise _err(f"{key} must be one of {', '.join(options)}; got {v!r}", key, where)
    return v


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse, apply defaults, validate.  ``overrides`` replaces parsed keys."""
    given, where = parse_text(text)
    if overrides:
        for k, v in overrides.items():
            if k not in SCHEMA:
                raise ConfigError(f"unknown key {k!r}")
            given[k] = v
    raw = {k: given.get(k, d) for k, (_, d) in SCHEMA.items()}
    for k, (typ, _) in SCHEMA.items():
        if typ in ("floats", "ints") and isinstance(raw[k], str) and raw[k] != "auto":
            raw[k] = _parse_value(raw[k], typ, 0, 0)
    vals = dict(raw)

    kind = _choice(vals, "run.kind", KINDS, where)
    dim = vals["model.dim"]
    if kind in ("table1",):
        dim = 1
    elif kind in ("table2",):
        dim = 2
    elif kind == "dimred":
        dim = 3
    elif kind == "vortex":
        dim = 2
    if dim not in (1, 2, 3):
        raise _err("model.dim must be 1, 2 or 3", "model.dim", where)
    vals["model.dim"] = dim

    if vals["model.gammas"] == "auto":
        vals["model.gammas"] = [1.0] * dim
    gammas = [float(v) for v in vals["model.gammas"]]
    if len(gammas) != dim:
        raise _err(f"model.gammas needs {dim} values", "model.gammas", where)
    if any(g <= 0 for g in gammas):
        raise _err("trap frequencies must be positive", "model.gammas", where)

    omega = vals["model.omega"]
    vortex_run = kind == "vortex"
    if vals["model.epsilon"] == "auto":
        vals["model.epsilon"] = default_epsilon(omega, vortex_run)
    if vals["model.epsilon"] < 0:
        raise _err("model.epsilon must be >= 0", "model.epsilon", where)
    p = Params(alpha=vals["model.alpha"], beta=vals["model.beta"], omega=omega,
               gammas=tuple(gammas), epsilon=vals["model.epsilon"])

    pot_kind = _choice(vals, "potential.kind", POTENTIALS, where)
    if pot_kind == "harmonic":
        potential = Harmonic(tuple(gammas))
        vals["potential.amplitudes"] = vals["potential.amplitudes"] if vals["potential.amplitudes"] != "auto" else []
        vals["potential.wavenumbers"] = vals["potential.wavenumbers"] if vals["potential.wavenumbers"] != "auto" else []
    elif pot_kind == "lattice":
        base = optical_lattice_1d(gammas[0]) if dim == 1 else None
        amps = vals["potential.amplitudes"]
        waves = vals["potential.wavenumbers"]
        if amps == "auto":
            amps = list(base.amplitudes) if base else [5.0 * math.sqrt(2.0)] * dim
        if waves == "auto":
            waves = list(base.wavenumbers) if base else [math.pi / 2.0] * dim
        if len(amps) != dim or len(waves) != dim:
            raise _err(f"lattice needs {dim} amplitudes and wavenumbers", "potential.kind", where)
        vals["potential.amplitudes"], vals["potential.wavenumbers"] = amps, waves
        potential = HarmonicPlusLattice(tuple(gammas), tuple(amps), tuple(waves))
    else:
        if not vals["potential.file"]:
            raise _err("tabulated potential needs potential.file", "potential.kind", where)
        from .fieldio import read_field

        pf = read_field(vals["potential.file"])
        potential = Tabulated(pf.values.real.copy())
        vals["potential.amplitudes"] = vals["potential.amplitudes"] if vals["potential.amplitudes"] != "auto" else []
        vals["potential.wavenumbers"] = vals["potential.wavenumbers"] if vals["potential.wavenumbers"] != "auto" else []

    bounds, counts = DEFAULT_GRIDS[dim]
    if vals["grid.bounds"] != "auto":
        rows = vals["grid.bounds"]
        if len(rows) == 1 and len(rows[0]) == 2:
            rows = rows * dim
        if len(rows) != dim or any(len(r) != 2 for r in rows):
            raise _err(f"grid.bounds needs {dim} 'lo hi' pairs separated by ';'", "grid.bounds", where)
        bounds = [tuple(r) for r in rows]
    if vals["grid.counts"] != "auto":
        counts = list(vals["grid.counts"])
        if len(counts) == 1:
            counts = counts * dim
        if len(counts) != dim:
            raise _err(f"grid.counts needs {dim} values", "grid.counts", where)
    try:
        grid = build_grid(dim, bounds, counts)
    except ValueError as exc:
        raise _err(str(exc), "grid.bounds" if "bounds" in str(exc) else "grid.counts", where) from None
    vals["grid.bounds"] = [list(b) for b in grid.bounds]
    vals["grid.counts"] = list(grid.counts)

    if vals["solver.dt"] == "auto":
        vals["solver.dt"] = default_dt(dim, omega, p.alpha)
    if vals["solver.perturbation"] == "auto":
        vals["solver.perturbation"] = 1e-3 if (omega != 0.0 and dim >= 2) else 0.0
    if vals["solver.continuation"] == "auto":
        vals["solver.continuation"] = [list(w) for w in default_continuation(omega, p.alpha, p.beta)]
    cont = vals["solver.continuation"]
    if any(len(w) != 3 for w in cont):
        raise _err("continuation waypoints are 'omega alpha beta' triples separated by ';'",
                   "solver.continuation", where)
    initial = _choice(vals, "solver.initial", INITIAL_KINDS, where)
    if initial == "file" and not vals["solver.initial_path"]:
        raise _err("solver.initial = file needs solver.initial_path", "solver.initial", where)
    try:
        solver = SolverConfig(
            dt=vals["solver.dt"], tol=vals["solver.tol"], max_steps=vals["solver.max_steps"],
            initial=initial, winding=vals["run.winding"],
            initial_path=vals["solver.initial_path"] or None,
            continuation=cont, perturbation=vals["solver.perturbation"], seed=vals["solver.seed"],
            linear_tol=vals["solver.linear_tol"], linear_max_iter=vals["solver.linear_max_iter"],
            energy_every=vals["solver.energy_every"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    method = _choice(vals, "run.method", ("auto", "polar", "cartesian"), where)
    if vals["run.multistart"] == "auto":
        vals["run.multistart"] = bool(kind in ("ground", "sweep") and dim == 2 and omega != 0.0)
    if kind == "vortex" and vals["run.winding"] == 0:
        raise _err("run.winding must be nonzero for vortex runs", "run.winding", where)
    if vals["sweep.workers"] < 1:
        raise _err("sweep.workers must be >= 1", "sweep.workers", where)
    if kind == "sweep" and not any(vals[f"sweep.{k}"] for k in ("alpha", "beta", "omega")):
        raise _err("a sweep needs at least one of sweep.alpha, sweep.beta, sweep.omega",
                   "run.kind", where)

    notes = []
    if kind not in ("table1", "table2", "sweep"):
        try:
            notes = validate_params(p, dim, potential)
        except ValueError as exc:
            line, col = where.get("model.alpha", (0, 0))
            code = getattr(exc, "code", "")
            if code == "rotation-trap" or code == "rotation-1d":
                line, col = where.get("model.omega", (line, col))
            raise ConfigError(str(exc), line, col) from exc
    if kind == "sweep":
        for a in vals["sweep.alpha"] or [p.alpha]:
            if not a < 0.5:
                raise _err(f"alpha must satisfy alpha < 1/2 (sweep value {a})", "sweep.alpha", where)

    return RunConfig(
        kind=kind, params=p, potential=potential, grid=grid, solver=solver,
        winding=vals["run.winding"], method=method, multistart=vals["run.multistart"],
        sweep={k: vals[f"sweep.{k}"] for k in ("alpha", "beta", "omega")},
        workers=vals["sweep.workers"],
        dimred={k.split(".")[1]: vals[k] for k in SCHEMA if k.startswith("dimred.")},
        output_dir=vals["output.dir"], text_field=vals["output.text_field"],
        figures=vals["output.figures"], census_threshold=vals["output.census_threshold"],
        values=vals, notes=notes)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), overrides)


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "runs"))
