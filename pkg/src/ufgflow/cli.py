"""Command-line front end.

Subcommands::

    ufgflow run CONFIG        one run of the kind named in the config
    ufgflow table1 [CONFIG]   1D energy tables, harmonic and optical lattice
    ufgflow table2 [CONFIG]   2D ground-state and central-vortex energy tables
    ufgflow sweep CONFIG      parameter sweep
    ufgflow dimred CONFIG     3D versus reduced-model comparison

Every run writes into its own directory under ``--out`` (default: the
``UFGFLOW_OUT`` environment variable, else ``./runs``): field file, CSV
tables, energy history, ``summary.txt``, ``manifest.json`` and PNG figures.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, default_output_root, load_config, parse_config
from .diag import cigar_grid, energy_ratio, verify_dimension_reduction
from .fieldio import write_field
from .gfdn import FlowError, GroundStateResult, ValidationError, compute_ground_state
from .model import Harmonic, Params, optical_lattice_1d
from .vortex import compute_central_vortex, radial_profile, rotating_ground_state

log = logging.getLogger("ufgflow")

TABLE_ALPHAS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.48)
TABLE1_BETAS = (0.0, 1.0, 10.0, 500.0)
TABLE2_BETAS = (0.0, 1.0, 10.0, 100.0)


# --------------------------------------------------------------------------
# output helpers


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _history_rows(history):
    return [(h.step, h.energy, h.mu, h.increment, h.linear_iterations) for h in history]


def _density_rows(field):
    g = field.grid
    dens = field.density()
    if g.dim == 1:
        return ["x", "density"], zip(g.axes[0], dens)
    if g.dim == 2:
        xs, ys = g.axes
        return ["x", "y", "density"], ((xs[i], ys[j], dens[i, j])
                                       for i in range(len(xs)) for j in range(len(ys)))
    k = g.shape[2] // 2
    xs, ys = g.axes[0], g.axes[1]
    return ["x", "y", "density_z0"], ((xs[i], ys[j], dens[i, j, k])
                                      for i in range(len(xs)) for j in range(len(ys)))


def _profile(field):
    g = field.grid
    if g.dim == 1:
        v = field.values
        return ["x", "re", "im", "abs"], [(x, z.real, z.imag, abs(z)) for x, z in zip(g.axes[0], v)]
    if g.dim == 2 and g.origin_index() is not None:
        return ["x", "abs"], radial_profile(field)
    idx = [s // 2 for s in g.shape]
    line = np.abs(field.values[(slice(None),) + tuple(idx[1:])])
    return ["x", "abs"], list(zip(g.axes[0], line))


def summary_text(cfg: RunConfig, res: GroundStateResult, extra: dict | None = None) -> str:
    e = res.energy
    lines = [f"kind,{cfg.kind}", f"converged,{str(res.converged).lower()}", f"steps,{res.steps}"]
    for k, v in e.as_dict().items():
        lines.append(f"{k},{v!r}")
    lines.append(f"mu_discrete,{res.mu_discrete!r}")
    if cfg.params.alpha >= 0 and e.kinetic > 0:
        lines.append(f"ratio_e2_e1,{energy_ratio(res.field, cfg.params)!r}")
    if res.field.grid.dim == 2:
        vs = res.census(cfg.census_threshold)
        lines.append(f"vortex_count,{len(vs)}")
        lines.append(f"total_winding,{sum(v.winding for v in vs)}")
    for k, v in (extra or {}).items():
        lines.append(f"{k},{v}")
    return "\n".join(lines) + "\n"


def write_run(cfg: RunConfig, res: GroundStateResult, out: Path, started: float,
              extra: dict | None = None, quiet: bool = False) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    files["field"] = write_field(out / "field.ufgf", res.field).name
    if cfg.text_field:
        files["field_text"] = write_field(out / "field.txt", res.field, text=True).name
    hdr, rows = _density_rows(res.field)
    files["density"] = _write_csv(out / "density.csv", hdr, rows).name
    hdr, rows = _profile(res.field)
    files["profile"] = _write_csv(out / "profile.csv", hdr, rows).name
    files["history"] = _write_csv(out / "history.csv",
                                  ["step", "energy", "mu", "increment", "linear_iterations"],
                                  _history_rows(res.history)).name
    if res.field.grid.dim == 2:
        vs = res.census(cfg.census_threshold)
        files["vortices"] = _write_csv(out / "vortices.csv", ["x", "y", "winding", "core_density"],
                                       [(v.x, v.y, v.winding, v.core_density) for v in vs]).name
    text = summary_text(cfg, res, extra)
    (out / "summary.txt").write_text(text, encoding="utf-8")
    files["summary"] = "summary.txt"
    if cfg.figures:
        from . import plotting

        files["fig_density"] = plotting.density_figure(
            res.field, out / "density.png", vortices=res.vortices).name
        if res.history:
            files["fig_history"] = plotting.history_figure(res.history, out / "history.png").name
        hdr, rows = _profile(res.field)
        if rows:
            xs = [r[0] for r in rows]
            files["fig_profile"] = plotting.profile_figure(
                {"|phi|": (xs, [r[-1] for r in rows])}, out / "profile.png", ylabel="|phi|").name
    write_manifest(out, cfg, started, files)
    if not quiet:
        sys.stdout.write(text)
    return files


def write_manifest(out: Path, cfg: RunConfig, started: float, files: dict, extra: dict | None = None):
    man = {
        "artifact": "ufgflow",
        "version": __version__,
        "kind": cfg.kind,
        "seed": cfg.solver.seed,
        "config": cfg.values,
        "config_text": cfg.to_text(),
        "notes": cfg.notes,
        "wall_clock_seconds": round(time.time() - started, 3),
        "files": files,
    }
    if extra:
        man.update(extra)
    (out / "manifest.json").write_text(json.dumps(man, indent=2, default=_json_default) + "\n",
                                       encoding="utf-8")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


# --------------------------------------------------------------------------
# runs


def solve(cfg: RunConfig) -> GroundStateResult:
    """The state requested by a ground or vortex config."""
    if cfg.kind == "vortex":
        return compute_central_vortex(cfg.solver, cfg.params, cfg.potential, cfg.grid,
                                      m=cfg.winding, method=cfg.method)
    if cfg.multistart:
        return rotating_ground_state(cfg.solver, cfg.params, cfg.potential, cfg.grid,
                                     threshold=cfg.census_threshold)
    return compute_ground_state(cfg.solver, cfg.params, cfg.potential, cfg.grid)


def run_single(cfg: RunConfig, out: Path, quiet: bool = False) -> int:
    started = time.time()
    res = solve(cfg)
    write_run(cfg, res, out, started, quiet=quiet)
    return 0


def _sweep_entry(args):
    text, overrides, out, quiet = args
    cfg = parse_config(text, overrides)
    started = time.time()
    try:
        res = solve(cfg)
    except (FlowError, ValidationError) as exc:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "summary.txt").write_text(f"error,{exc}\nconverged,false\n", encoding="utf-8")
        return overrides, float("nan"), False, -1, str(exc)
    write_run(cfg, res, Path(out), started, quiet=True)
    nv = len(res.census(cfg.census_threshold)) if cfg.grid.dim == 2 else -1
    return overrides, res.energy.total, res.converged, nv, ""


def run_sweep(cfg: RunConfig, text: str, out: Path, workers: int, quiet: bool) -> int:
    started = time.time()
    axes = {k: v for k, v in cfg.sweep.items() if v}
    base_kind = "vortex" if cfg.values["run.method"] in ("polar", "cartesian") else "ground"
    keys = list(axes)
    jobs = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        ov = {f"model.{k}": v for k, v in zip(keys, combo)}
        ov["run.kind"] = base_kind
        name = "_".join(f"{k}{v:g}" for k, v in zip(keys, combo))
        jobs.append((text, ov, str(out / name), quiet))
    out.mkdir(parents=True, exist_ok=True)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_entry, jobs))
    else:
        results = [_sweep_entry(j) for j in jobs]
    rows = []
    for ov, e, conv, nv, err in results:
        rows.append([ov.get(f"model.{k}", "") for k in keys] + [e, str(conv).lower(), nv, err])
    _write_csv(out / "sweep.csv", keys + ["energy", "converged", "vortex_count", "error"], rows)
    write_manifest(out, cfg, started, {"table": "sweep.csv"},
                   {"entries": [j[1] for j in jobs]})
    if not quiet:
        for r in rows:
            print(",".join(str(_fmt(v)) for v in r))
    return 0


def _table_text(alphas, betas, table) -> str:
    head = "alpha," + ",".join(f"beta={b:g}" for b in betas)
    lines = [head]
    for a, row in zip(alphas, table):
        lines.append(f"{a:g}," + ",".join(f"{v:.4f}" for v in row))
    return "\n".join(lines) + "\n"


def table1(cfg: RunConfig, out: Path, quiet: bool = False):
    """Tables of 1D ground-state energies for the harmonic trap and the lattice."""
    started = time.time()
    out.mkdir(parents=True, exist_ok=True)
    pots = {"harmonic": Harmonic((1.0,)), "lattice": optical_lattice_1d()}
    tables = {}
    rows = []
    for name, spec in pots.items():
        tab = np.zeros((len(TABLE_ALPHAS), len(TABLE1_BETAS)))
        for i, a in enumerate(TABLE_ALPHAS):
            for j, b in enumerate(TABLE1_BETAS):
                p = Params(alpha=a, beta=b, gammas=(1.0,))
                res = compute_ground_state(replace(cfg.solver, energy_every=0), p, spec, cfg.grid)
                tab[i, j] = res.energy.total
                rows.append((name, a, b, res.energy.total, res.mu_discrete, res.steps,
                             str(res.converged).lower()))
        tables[name] = tab
    _write_csv(out / "table1.csv", ["potential", "alpha", "beta", "energy", "mu", "steps", "converged"], rows)
    text = ""
    for name, tab in tables.items():
        text += f"# {name}\n" + _table_text(TABLE_ALPHAS, TABLE1_BETAS, tab)
    (out / "table1.txt").write_text(text, encoding="utf-8")
    files = {"table": "table1.csv", "text": "table1.txt"}
    if cfg.figures:
        from . import plotting

        for name, tab in tables.items():
            files[f"fig_{name}"] = plotting.table_figure(
                TABLE_ALPHAS, TABLE1_BETAS, tab, out / f"table1_{name}.png", name).name
    write_manifest(out, cfg, started, files)
    if not quiet:
        sys.stdout.write(text)
    return tables


def table2(cfg: RunConfig, out: Path, quiet: bool = False):
    """Tables of 2D ground-state and central-vortex (m = 1) energies."""
    started = time.time()
    out.mkdir(parents=True, exist_ok=True)
    spec = Harmonic((1.0, 1.0))
    ground = np.zeros((len(TABLE_ALPHAS), len(TABLE2_BETAS)))
    vort = np.zeros_like(ground)
    ratio_g = np.zeros_like(ground)
    ratio_v = np.zeros_like(ground)
    rows = []
    solver = replace(cfg.solver, energy_every=0)
    for i, a in enumerate(TABLE_ALPHAS):
        for j, b in enumerate(TABLE2_BETAS):
            p = Params(alpha=a, beta=b, gammas=(1.0, 1.0))
            rg = compute_ground_state(solver, p, spec, cfg.grid)
            rv = compute_central_vortex(solver, p.replace(epsilon=cfg.params.epsilon or 1e-4),
                                        spec, cfg.grid, m=1, method=cfg.method)
            ground[i, j], vort[i, j] = rg.energy.total, rv.energy.total
            ratio_g[i, j] = energy_ratio(rg.field, p) if a > 0 else 0.0
            ratio_v[i, j] = energy_ratio(rv.field, p) if a > 0 else 0.0
            rows.append((a, b, rg.energy.total, rv.energy.total, ratio_g[i, j], ratio_v[i, j],
                         rg.steps, rv.steps, str(rg.converged and rv.converged).lower()))
            log.info("alpha=%g beta=%g: E_g=%.6f E_v=%.6f", a, b, rg.energy.total, rv.energy.total)
    _write_csv(out / "table2.csv", ["alpha", "beta", "energy_ground", "energy_vortex", "ratio_ground",
                                    "ratio_vortex", "steps_ground", "steps_vortex", "converged"], rows)
    text = ("# ground\n" + _table_text(TABLE_ALPHAS, TABLE2_BETAS, ground)
            + "# vortex m=1\n" + _table_text(TABLE_ALPHAS, TABLE2_BETAS, vort))
    (out / "table2.txt").write_text(text, encoding="utf-8")
    files = {"table": "table2.csv", "text": "table2.txt"}
    if cfg.figures:
        from . import plotting

        files["fig_ground"] = plotting.table_figure(TABLE_ALPHAS, TABLE2_BETAS, ground,
                                                    out / "table2_ground.png", "ground").name
        files["fig_vortex"] = plotting.table_figure(TABLE_ALPHAS, TABLE2_BETAS, vort,
                                                    out / "table2_vortex.png", "vortex m=1").name
    write_manifest(out, cfg, started, files)
    if not quiet:
        sys.stdout.write(text)
    return ground, vort


def dimred(cfg: RunConfig, out: Path, quiet: bool = False):
    started = time.time()
    out.mkdir(parents=True, exist_ok=True)
    d = cfg.dimred
    rows = []
    reports = []
    for gp in d["gamma_perp"]:
        g3 = cigar_grid(gp, cfg.params.alpha, cfg.params.beta, d["h_axial"], d["half_axial"],
                        d["widths"], d["points_per_width"])
        p3 = cfg.params.replace(gammas=(cfg.params.gammas[0], gp, gp), omega=0.0)
        rep = verify_dimension_reduction(p3, g3, replace(cfg.solver, energy_every=0),
                                         d["node_budget"])
        reports.append(rep)
        rows.append((gp, rep.coupling, rep.profile_error, rep.transverse_error,
                     rep.transverse_slice_error, rep.energy_3d, rep.energy_reduced,
                     str(rep.converged).lower(), g3.size))
        pr = rep.profiles
        _write_csv(out / f"profile_g{gp:g}.csv", ["x", "marginal_3d", "reduced_1d"],
                   zip(pr["axis"][0], pr["marginal"], pr["reduced"]))
    _write_csv(out / "dimred.csv", ["gamma_perp", "coupling", "profile_error", "transverse_error",
                                    "transverse_slice_error", "energy_3d", "energy_reduced",
                                    "converged", "nodes"], rows)
    files = {"table": "dimred.csv"}
    if cfg.figures:
        from . import plotting

        for gp, rep in zip(d["gamma_perp"], reports):
            pr = rep.profiles
            files[f"fig_g{gp:g}"] = plotting.profile_figure(
                {"3D marginal": (pr["axis"][0], pr["marginal"]),
                 "reduced 1D": (pr["axis"][0], pr["reduced"])},
                out / f"profile_g{gp:g}.png").name
    write_manifest(out, cfg, started, files)
    if not quiet:
        for r in rows:
            print(",".join(str(_fmt(v)) for v in r))
    return reports


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ufgflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory "
                        "(default: $UFGFLOW_OUT/<command>, or ./runs/<command>)")
    common.add_argument("--threads", metavar="N", type=int, default=1,
                        help="worker processes for sweeps and tables")
    common.add_argument("--seed", metavar="S", type=int, help="override solver.seed")
    common.add_argument("--quiet", action="store_true", help="no report on stdout")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, needs in (("run", True), ("sweep", True), ("dimred", True),
                        ("table1", False), ("table2", False)):
        sp = sub.add_parser(name, parents=[common])
        if needs:
            sp.add_argument("config")
        else:
            sp.add_argument("config", nargs="?", help="optional config with grid/solver overrides")
    return ap


def _load(args, kind: str | None):
    overrides = {}
    if args.seed is not None:
        overrides["solver.seed"] = args.seed
    if kind is not None:
        overrides["run.kind"] = kind
    text = ""
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
        if text.lstrip().startswith("{"):
            # a manifest from an earlier run: replay its resolved config
            try:
                text = json.loads(text)["config_text"]
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"not a run manifest: {exc}") from None
            if args.seed is None:
                overrides.pop("solver.seed", None)
    return parse_config(text, overrides), text


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    kind = {"run": None, "sweep": "sweep", "dimred": "dimred",
            "table1": "table1", "table2": "table2"}[args.command]
    try:
        cfg, text = _load(args, kind)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else Path(cfg.output_dir or default_output_root() / cfg.kind)
    workers = max(args.threads, cfg.workers)
    try:
        if cfg.kind in ("ground", "vortex"):
            return run_single(cfg, out, args.quiet)
        if cfg.kind == "sweep":
            return run_sweep(cfg, text, out, workers, args.quiet)
        if cfg.kind == "table1":
            table1(cfg, out, args.quiet)
        elif cfg.kind == "table2":
            table2(cfg, out, args.quiet)
        elif cfg.kind == "dimred":
            dimred(cfg, out, args.quiet)
    except (FlowError, ValidationError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
