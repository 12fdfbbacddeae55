"""Diagnostics: kinetic-energy ratio, reference comparisons, dimension reduction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .gfdn import SolverConfig, compute_ground_state
from .grid import Field, Grid, GridMismatchError, build_grid, gradient_arrays
from .model import Harmonic, Params, energy

DEFAULT_NODE_BUDGET = 2_000_000


def kinetic_terms(f: Field, alpha: float) -> tuple[float, float]:
    """(E1, E2) = (1/2 sum |grad phi|^2, alpha sum |grad |phi||^2) times the cell volume."""
    g = f.grid
    w = g.cell_volume
    e1 = 0.5 * w * sum(float(np.sum(np.abs(d) ** 2)) for d in gradient_arrays(f.values, g.spacing))
    amp = np.abs(f.values)
    e2 = alpha * w * sum(float(np.sum(d * d)) for d in gradient_arrays(amp, g.spacing))
    return e1, e2


def energy_ratio(f: Field, p: Params) -> float:
    """E2 / E1; equals 2 alpha whenever the phase of ``f`` is constant."""
    if p.alpha < 0:
        raise ValueError("energy ratio is defined for alpha >= 0")
    e1, e2 = kinetic_terms(f, p.alpha)
    if e1 == 0.0:
        raise ZeroDivisionError("E1 vanishes")
    return e2 / e1


@dataclass
class Comparison:
    l2_error: float
    max_error: float
    energy_gap: float


def align_phase(f: Field, ref: Field) -> np.ndarray:
    """``ref`` times the unit scalar maximizing Re<f, ref c>."""
    z = np.vdot(ref.values, f.values)
    if abs(z) == 0.0:
        return ref.values.copy()
    return ref.values * (z / abs(z))


def compare_to_reference(f: Field, ref: Field, spec=None, p: Params | None = None) -> Comparison:
    """Distances between ``f`` and the phase-aligned ``ref``.

    The energy gap ``E(f) - E(ref)`` needs ``spec`` and ``p``; otherwise it is NaN.
    """
    if f.grid != ref.grid:
        raise GridMismatchError("fields live on different grids")
    diff = f.values - align_phase(f, ref)
    l2 = math.sqrt(f.grid.cell_volume * float(np.sum(np.abs(diff) ** 2)))
    mx = float(np.max(np.abs(diff))) if diff.size else 0.0
    gap = float("nan")
    if spec is not None and p is not None:
        gap = energy(f, spec, p).total - energy(ref, spec, p).total
    return Comparison(l2, mx, gap)


# --------------------------------------------------------------------------
# dimension reduction


@dataclass
class ReductionReport:
    kind: str                      # "cigar" (3D -> 1D) or "disk" (3D -> 2D)
    gammas: tuple
    coupling: float                # beta_1 or beta_2
    profile_error: float           # l2 of normalized marginal vs reduced solution
    transverse_error: float        # l2 of normalized transverse marginal vs Gaussian
    transverse_slice_error: float  # same on the slice through the axis, unnormalized sum
    energy_3d: float
    energy_reduced: float
    mu_transverse: float
    steps_3d: int
    converged: bool
    profiles: dict = field(default_factory=dict, repr=False)

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "profiles"}


def _l2(a, b, w):
    return math.sqrt(w * float(np.sum(np.abs(a - b) ** 2)))


def _unit(v, w):
    n = math.sqrt(w * float(np.sum(np.abs(v) ** 2)))
    return v / n if n > 0 else v


def _sub_grid(g: Grid, axes) -> Grid:
    return Grid(tuple(g.bounds[a] for a in axes), tuple(g.counts[a] for a in axes))


def _positive(v):
    # the ground state is real up to a global phase; fix it so the profile is >= 0
    s = np.sum(v)
    return (v * (np.conj(s) / abs(s))).real if abs(s) > 0 else np.abs(v)


def verify_dimension_reduction(p3d: Params, g3d: Grid, cfg: SolverConfig | None = None,
                               node_budget: int = DEFAULT_NODE_BUDGET) -> ReductionReport:
    """Compare a 3D ground state with the reduced 1D or 2D model.

    Two large trap frequencies among ``p3d.gammas`` select the cigar
    reduction (integrate out y, z); one large frequency in z selects the
    disk reduction (integrate out z).  "Large" means at least 4 times the
    axial ones.
    """
    if g3d.dim != 3:
        raise ValueError("dimension reduction needs a 3D grid")
    if g3d.size > node_budget:
        raise MemoryError(f"3D grid has {g3d.size} nodes, above the budget of {node_budget}")
    if p3d.omega != 0.0:
        raise ValueError("dimension reduction is checked for omega = 0")
    gx, gy, gz = (float(v) for v in p3d.gammas[:3])
    if min(gy, gz) >= 4.0 * gx:
        kind, keep, drop = "cigar", (0,), (1, 2)
    elif gz >= 4.0 * max(gx, gy):
        kind, keep, drop = "disk", (0, 1), (2,)
    else:
        raise ValueError("need gamma_y, gamma_z >> gamma_x (cigar) or gamma_z >> gamma_x, gamma_y (disk)")
    cfg = cfg or SolverConfig()
    spec = Harmonic((gx, gy, gz))
    res = compute_ground_state(cfg, p3d, spec, g3d)
    phi = res.field.values
    h = g3d.spacing

    coeff = analytic.reduced_coefficients(p3d.beta, p3d.alpha, (gx, gy, gz))
    red = _sub_grid(g3d, keep)
    trans = _sub_grid(g3d, drop)
    w_red, w_tr = red.cell_volume, trans.cell_volume

    # normalized marginals with the quadrature weights of the discrete norm
    marg = _positive(phi.sum(axis=drop) * math.prod(h[a] for a in drop))
    marg = _unit(marg, w_red)
    tr = _positive(phi.sum(axis=keep) * math.prod(h[a] for a in keep))
    tr = _unit(tr, w_tr)

    if kind == "cigar":
        beta_r, gam_r, names = coeff.beta1, (gx,), ("y", "z")
        mu_t = coeff.mu_yz
    else:
        beta_r, gam_r, names = coeff.beta2, (gx, gy), ("z",)
        mu_t = coeff.mu_z
    p_red = Params(alpha=p3d.alpha, beta=beta_r, gammas=gam_r, epsilon=p3d.epsilon)
    red_res = compute_ground_state(cfg, p_red, Harmonic(gam_r), red)
    ref = _unit(_positive(red_res.field.values), w_red)

    gauss, _ = analytic.transverse_mode(names, p3d, trans)
    gvals = _unit(gauss.values.real, w_tr)

    # slice through the axis, normalized by the full transverse marginal
    if kind == "cigar":
        kz = trans.origin_index()
        k = kz[1] if kz is not None else int(np.argmin(np.abs(trans.axes[1])))
        sl, gsl, w_sl = tr[:, k], gvals[:, k], trans.spacing[0]
    else:
        sl, gsl, w_sl = tr, gvals, trans.spacing[0]

    return ReductionReport(
        kind=kind, gammas=(gx, gy, gz), coupling=beta_r,
        profile_error=_l2(marg, ref, w_red),
        transverse_error=_l2(tr, gvals, w_tr),
        transverse_slice_error=_l2(sl, gsl, w_sl),
        energy_3d=res.energy.total, energy_reduced=red_res.energy.total + mu_t,
        mu_transverse=mu_t, steps_3d=res.steps, converged=res.converged and red_res.converged,
        profiles={"axis": red.axes, "marginal": marg, "reduced": ref,
                  "transverse_axes": trans.axes, "transverse": tr, "gaussian": gvals},
    )


def cigar_grid(gamma_perp: float, alpha: float = 0.0, beta: float = 10.0, h_axial: float = 0.06,
               half_axial: float = 6.0, widths: float = 6.0, points_per_width: float = 8.0) -> Grid:
    """Box for a cigar trap gamma = (1, g, g): the transverse half-width spans
    ``widths`` oscillator widths sampled with ``points_per_width`` intervals each."""
    w = (1.0 - 2.0 * alpha) ** 0.25 / math.sqrt(gamma_perp)
    half_t = widths * w
    nt = int(2 * math.ceil(widths * points_per_width))
    na = int(2 * round(half_axial / h_axial))
    return build_grid(3, [(-half_axial, half_axial), (-half_t, half_t), (-half_t, half_t)],
                      (na, nt, nt))
