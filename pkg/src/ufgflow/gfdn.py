"""Regularized gradient flow with discrete normalization.

One step freezes the nonlinear coefficients at the current iterate, solves
the linear system

    (I/dt - 1/2 lap - omega L_z + diag(c)) phi~ = phi^n / dt,
    c = V + beta |phi^n|^{4/3} + alpha lap|phi^n| / sqrt(|phi^n|^2 + eps) - mu^n,

on the interior nodes and rescales ``phi~`` to unit discrete norm.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import analytic
from ._kernels import flow_coefficients_2d, flow_coefficients_3d, system_apply
from .grid import Field, Grid, discrete_norm, laplacian_array, zero_boundary
from .krylov import (DEFAULT_MAX_ITER, DEFAULT_TOL, SolveReport, StencilOperator, solve,
                     solve_tridiagonal)
from .model import (DENSITY_FLOOR, EnergyBreakdown, Harmonic, HarmonicPlusLattice, Params,
                    Tabulated, chemical_potential_discrete, energy)

log = logging.getLogger(__name__)

INITIAL_KINDS = ("auto", "gaussian", "variational", "thomas-fermi", "vortex", "ring", "mixed", "file",
                 "custom")


class ValidationError(ValueError):
    """Parameters violate an existence hypothesis; ``code`` names which one."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class FlowError(RuntimeError):
    """A step could not be completed (linear solve failure, zero field)."""

    def __init__(self, message: str, report: SolveReport | None = None):
        super().__init__(message)
        self.report = report


@dataclass
class SolverConfig:
    dt: float = 0.01
    tol: float = 1e-6
    max_steps: int = 200_000
    initial: str = "auto"
    winding: int = 1
    ring_radius: float | None = None
    initial_path: str | None = None
    initial_field: Field | None = None
    continuation: Sequence[tuple[float, float, float]] = ()
    perturbation: float = 0.0
    seed: int = 0
    linear_tol: float = DEFAULT_TOL
    linear_max_iter: int = DEFAULT_MAX_ITER
    energy_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.initial not in INITIAL_KINDS:
            raise ValueError(f"unknown initial data kind {self.initial!r}")
        if self.perturbation < 0:
            raise ValueError("perturbation amplitude must be nonnegative")
        self.continuation = [tuple(float(v) for v in w) for w in self.continuation]


@dataclass
class HistoryEntry:
    step: int
    energy: float
    mu: float
    increment: float
    linear_iterations: int


@dataclass
class GroundStateResult:
    field: Field
    energy: EnergyBreakdown
    mu_discrete: float
    steps: int
    history: list[HistoryEntry]
    converged: bool
    params: Params | None = None
    vortices: list | None = None
    starts: list | None = None     # (label, energy, converged, vortex count) per start

    def census(self, threshold: float = 1e-3):
        """Vortex census of a 2D result (computed once and cached)."""
        if self.vortices is None and self.field.grid.dim == 2:
            from .vortex import count_vortices

            self.vortices = count_vortices(self.field, threshold)
        return self.vortices


# --------------------------------------------------------------------------
# validation


def _trap_gammas(potential, p: Params, dim: int):
    if isinstance(potential, (Harmonic, HarmonicPlusLattice)):
        return tuple(potential.gammas)
    if potential is None:
        return tuple(p.gammas[:dim])
    return None


def validate_params(p: Params, dim: int, potential=None) -> list[str]:
    """Check the existence hypotheses; return warning messages, raise on violations."""
    if not p.alpha < 0.5:
        raise ValidationError(
            "alpha-bound", f"alpha must satisfy alpha < 1/2 (got {p.alpha}); "
            "ground states are only guaranteed for alpha < 1/2")
    if p.omega != 0.0 and dim == 1:
        raise ValidationError("rotation-1d", "rotation (omega != 0) needs dim >= 2")
    notes = []
    gammas = _trap_gammas(potential, p, dim)
    if p.omega != 0.0 and gammas is not None and isinstance(potential, (Harmonic, type(None))):
        gmin = min(gammas[0], gammas[1])
        if abs(p.omega) >= gmin:
            raise ValidationError(
                "rotation-trap", f"|omega| = {abs(p.omega)} must be below min(gamma_x, gamma_y) "
                f"= {gmin}; no ground state exists otherwise")
    if isinstance(potential, Tabulated) and np.any(potential.values < 0):
        notes.append("potential takes negative values; existence assumes V >= 0")
    if dim == 3 and p.beta < 0:
        notes.append("beta < 0 in 3D: existence needs beta > -C_b (1/2 - alpha), C_b unknown")
    if p.omega != 0.0 and p.epsilon == 0.0:
        notes.append("rotating run with epsilon = 0; the quantum-pressure term is unregularized")
    for n in notes:
        warnings.warn(n, stacklevel=2)
    return notes


# --------------------------------------------------------------------------
# initial data


def _smooth_perturbation(g: Grid, rng) -> np.ndarray:
    """Random complex polynomial of degree 1-2 in the scaled coordinates."""
    coords = [x / max(abs(lo), abs(hi)) for x, (lo, hi) in zip(g.mesh(), g.bounds)]
    out = np.zeros(g.shape, dtype=complex)
    for i in range(g.dim):
        out = out + complex(*rng.uniform(-1, 1, 2)) * coords[i]
        for j in range(i, g.dim):
            out = out + complex(*rng.uniform(-1, 1, 2)) * coords[i] * coords[j]
    return out


def _vortex_phase(g: Grid, m: int) -> np.ndarray:
    x, y = g.mesh()[:2]
    r = np.sqrt(x * x + y * y)
    z = np.where(r > 0, (x + 1j * y) / np.where(r > 0, r, 1.0), 0.0)
    phase = z**abs(m)
    return np.conj(phase) if m < 0 else phase


def _ring_seed(g: Grid, n: int, radius: float, core: float = 0.5) -> np.ndarray:
    """Factor seeding ``n`` unit vortices: one at the origin, or ``n`` on a ring
    (plus one at the centre once ``n >= 7``)."""
    x, y = g.mesh()[:2]
    z = x + 1j * y
    if n == 1:
        centres = [0.0]
    else:
        k = n - 1 if n >= 7 else n
        centres = [radius * np.exp(2j * np.pi * (j + 0.5) / k) for j in range(k)]
        if n >= 7:
            centres.append(0.0)
    out = np.ones(z.shape, dtype=complex)
    for c in centres:
        d = z - c
        out = out * d / np.sqrt(np.abs(d) ** 2 + core * core)
    return out


def initial_data(cfg: SolverConfig, p: Params, g: Grid, potential=None) -> Field:
    """Normalized starting field of kind ``cfg.initial``.

    ``auto`` resolves to the Gaussian whose widths minimize the Gaussian
    energy (identical to the oscillator state when beta = 0); ``vortex``
    multiplies it by ``((x + iy)/r)^winding``; ``ring`` seeds ``winding``
    separate unit vortices (see :func:`_ring_seed`); ``mixed`` is
    ``(1 - omega) phi_ho + omega (x + iy) phi_ho`` for seeding vortices.
    """
    kind = cfg.initial
    gammas = _trap_gammas(potential, p, g.dim) or tuple(p.gammas[: g.dim])
    if kind == "custom":
        if cfg.initial_field is None:
            raise ValueError("custom initial data needs initial_field")
        f = cfg.initial_field.copy()
    elif kind == "file":
        from .fieldio import read_field

        if cfg.initial_path is None:
            raise ValueError("file initial data needs initial_path")
        f = read_field(Path(cfg.initial_path))
        if f.grid != g:
            raise ValueError("initial field file is on a different grid")
    elif kind == "gaussian":
        f, _ = analytic.gaussian_state(p, g, gammas)
    elif kind == "thomas-fermi":
        if p.beta <= 0:
            raise ValueError("Thomas-Fermi initial data needs beta > 0")
        f, _ = analytic.tf_state(Harmonic(gammas), p, g)
    elif kind in ("auto", "variational"):
        f = analytic.variational_gaussian(p, g, gammas)
    elif kind == "vortex":
        if g.dim < 2:
            raise ValueError("vortex initial data needs dim >= 2")
        f = analytic.variational_gaussian(p, g, gammas)
        f = f.with_values(f.values * _vortex_phase(g, cfg.winding))
    elif kind == "ring":
        if g.dim < 2:
            raise ValueError("ring initial data needs dim >= 2")
        if cfg.winding < 1:
            raise ValueError("ring initial data needs at least one vortex")
        f = analytic.variational_gaussian(p, g, gammas)
        radius = cfg.ring_radius
        if radius is None:
            widths = analytic.variational_widths(p.alpha, max(p.beta, 0.0), gammas[:2])
            radius = 1.2 * float(np.mean(widths))
        f = f.with_values(f.values * _ring_seed(g, cfg.winding, radius))
    elif kind == "mixed":
        if g.dim < 2:
            raise ValueError("mixed initial data needs dim >= 2")
        f = analytic.variational_gaussian(p, g, gammas)
        x, y = g.mesh()[:2]
        w = min(abs(p.omega), 1.0)
        f = f.with_values((1.0 - w) * f.values + w * (x + 1j * y) * f.values)
    values = np.array(f.values, dtype=complex)
    if cfg.perturbation > 0:
        rng = np.random.default_rng(cfg.seed)
        values = values * (1.0 + cfg.perturbation * _smooth_perturbation(g, rng))
    zero_boundary(values)
    out = Field(g, values)
    if out.norm() == 0:
        raise ValueError("initial data vanishes on the grid")
    return out.normalized()


# --------------------------------------------------------------------------
# the flow


class _Stepper:
    """Per-run cache of the potential and scratch buffers."""

    def __init__(self, grid: Grid, potential, p: Params, dt: float,
                 linear_tol=DEFAULT_TOL, linear_max_iter=DEFAULT_MAX_ITER):
        self.grid = grid
        self.v = potential.evaluate(grid) if hasattr(potential, "evaluate") else np.asarray(potential)
        self.p = p
        self.dt = dt
        self.linear_tol = linear_tol
        self.linear_max_iter = linear_max_iter

    def coefficients(self, phi):
        """Return (mu^n, c) for the frozen-coefficient system."""
        p, g = self.p, self.grid
        if g.dim >= 2:
            c = np.empty(g.shape)
            eps = max(p.epsilon, DENSITY_FLOOR)
            xs, ys = g.axes[0], g.axes[1]
            if g.dim == 2:
                s = flow_coefficients_2d(phi, self.v, p.alpha, p.beta, eps, p.omega,
                                         *g.spacing, xs, ys, c)
            else:
                s = flow_coefficients_3d(phi, self.v, p.alpha, p.beta, eps, p.omega,
                                         *g.spacing, xs, ys, c)
            mu = s * g.cell_volume
            return mu, c - mu
        dens = phi.real**2 + phi.imag**2 if np.iscomplexobj(phi) else phi * phi
        amp = np.sqrt(dens)
        c = self.v + p.beta * np.cbrt(dens) ** 2
        lap_abs = None
        if p.alpha != 0.0:
            lap_abs = laplacian_array(amp, g.spacing)
            c = c + p.alpha * lap_abs / np.sqrt(dens + max(p.epsilon, DENSITY_FLOOR))
        mu = chemical_potential_discrete(Field(g, phi), self.v, p, lap_abs=lap_abs
                                         if lap_abs is not None else np.zeros_like(amp), check=False)
        return mu, c - mu

    def solve(self, phi, c):
        g, dt = self.grid, self.dt
        d = 1.0 / dt + c
        rhs = phi / dt
        if g.dim == 1:
            h2 = g.spacing[0] ** 2
            n = g.shape[0] - 2
            off = np.full(n - 1, -0.5 / h2)
            out = np.zeros_like(phi)
            out[1:-1] = solve_tridiagonal(off, d[1:-1] + 1.0 / h2, off, rhs[1:-1])
            resid = np.linalg.norm(system_apply(out, d, g, 0.0) - rhs) / np.linalg.norm(rhs)
            return out, SolveReport(1, float(resid), bool(np.isfinite(resid)))
        op = StencilOperator(g, d, self.p.omega)
        return solve(op, rhs, self.linear_tol, self.linear_max_iter, x0=phi)

    def __call__(self, phi):
        mu, c = self.coefficients(phi)
        tilde, report = self.solve(phi, c)
        if not report.converged:
            raise FlowError(f"linear solve failed ({report.tag}, residual {report.residual:.2e})",
                            report)
        n = math.sqrt(self.grid.cell_volume * float(np.vdot(tilde, tilde).real))
        if n == 0.0 or not np.isfinite(n):
            raise FlowError("intermediate field has zero or non-finite norm", report)
        return tilde / n, mu, report


def _working_array(f: Field, p: Params) -> np.ndarray:
    v = f.values
    if p.omega == 0.0 and np.iscomplexobj(v) and not np.any(v.imag):
        return np.ascontiguousarray(v.real)
    return np.ascontiguousarray(v, dtype=complex) if p.omega != 0.0 else np.ascontiguousarray(v)


def step(phi_n: Field, p: Params, spec, dt: float) -> tuple[Field, float, SolveReport]:
    """One semi-implicit step followed by the projection onto unit norm."""
    nrm = phi_n.norm()
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"step expects a normalized field, got norm {nrm:.12g}")
    stepper = _Stepper(phi_n.grid, spec, p, dt)
    values = phi_n.values.astype(complex, copy=True)
    zero_boundary(values)
    new, mu, report = stepper(values)
    return Field(phi_n.grid, new), mu, report


def run_flow(phi0: Field, p: Params, spec, cfg: SolverConfig,
             constraint: Callable[[np.ndarray], np.ndarray] | None = None,
             history: list | None = None, step_offset: int = 0,
             callback=None) -> tuple[Field, bool, int, float]:
    """Iterate the flow from ``phi0`` at fixed parameters.

    Returns (field, converged, steps, last mu).  ``constraint`` is applied to
    the raw array after every projection and must return a normalized array.
    """
    g = phi0.grid
    stepper = _Stepper(g, spec, p, cfg.dt, cfg.linear_tol, cfg.linear_max_iter)
    phi = _working_array(phi0, p).copy()
    zero_boundary(phi)
    if constraint is not None:
        phi = constraint(phi)
    w = g.cell_volume
    mu = float("nan")
    converged = False
    n = 0
    for n in range(1, cfg.max_steps + 1):
        new, mu, report = stepper(phi)
        if constraint is not None:
            new = constraint(new)
        diff = new - phi
        inc = math.sqrt(w * float(np.vdot(diff, diff).real))
        phi = new
        if history is not None:
            e = float("nan")
            if cfg.energy_every and (n % cfg.energy_every == 0 or inc < cfg.tol):
                e = energy(Field(g, phi), stepper.v, p).total
            history.append(HistoryEntry(step_offset + n, e, mu, inc, report.iterations))
        if callback is not None:
            callback(n, phi, inc)
        if not np.isfinite(inc):
            raise FlowError("flow produced non-finite values")
        if inc < cfg.tol:
            converged = True
            break
    return Field(g, phi.astype(complex)), converged, n, mu


def compute_ground_state(cfg: SolverConfig, p: Params, spec, g: Grid,
                         constraint=None, phi0: Field | None = None) -> GroundStateResult:
    """Run the flow (through any continuation waypoints) to a stationary state."""
    validate_params(p, g.dim, spec)
    if phi0 is None:
        phi0 = initial_data(cfg, p, g, spec)
    stages = [p.replace(omega=o, alpha=a, beta=b) for o, a, b in cfg.continuation] + [p]
    history: list[HistoryEntry] = []
    phi = phi0
    steps = 0
    converged = False
    mu = float("nan")
    for stage in stages:
        if stage is not p:
            validate_params(stage, g.dim, spec)
        phi, converged, n, mu = run_flow(phi, stage, spec, cfg, constraint, history, steps)
        steps += n
        log.info("stage omega=%g alpha=%g beta=%g: %d steps, converged=%s",
                 stage.omega, stage.alpha, stage.beta, n, converged)
    e = energy(phi, spec, p)
    return GroundStateResult(phi, e, mu, steps, history, converged, p)


def default_epsilon(omega: float, vortex: bool = False) -> float:
    return 1e-4 if (omega != 0.0 or vortex) else 0.0


def default_dt(dim: int, omega: float, alpha: float) -> float:
    return 0.001 if (dim == 2 and omega != 0.0 and alpha >= 0.4) else 0.01


def default_continuation(omega: float, alpha: float, beta: float) -> list[tuple[float, float, float]]:
    """Ramp omega from 0.5 in steps of 0.1 for fast rotation."""
    if abs(omega) < 0.7:
        return []
    sign = 1.0 if omega > 0 else -1.0
    ramp = np.arange(0.5, abs(omega) - 1e-9, 0.1)
    return [(sign * float(round(o, 10)), alpha, beta) for o in ramp]
