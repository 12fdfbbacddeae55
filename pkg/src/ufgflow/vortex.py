"""Central vortex states and phase-winding vortex detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from scipy.linalg import solve_banded
from scipy.ndimage import binary_fill_holes

from .gfdn import (FlowError, GroundStateResult, HistoryEntry, SolverConfig, compute_ground_state,
                   initial_data, validate_params)
from .grid import Field, Grid, zero_boundary
from .model import DENSITY_FLOOR, Harmonic, chemical_potential_discrete, energy

DEFAULT_THRESHOLD = 1e-3


@dataclass(frozen=True)
class VortexInfo:
    x: float
    y: float
    winding: int
    core_density: float


def _winding_phase(g: Grid, m: int) -> np.ndarray:
    x, y = g.mesh()
    theta = np.arctan2(y, x)
    return np.exp(1j * m * theta)


def _origin_pin(g: Grid, m: int, phase_lock: bool):
    """Constraint applied after each projection.

    Zeros the origin node and renormalizes.  With ``phase_lock`` the field is
    first replaced by ``Re(phi e^{-im theta}) e^{im theta}``, which keeps it
    of the form ``f(x) e^{im theta}`` with real ``f``.  Without it, at
    alpha near 1/2 the flow leaves the winding sector for lobed states whose
    phase is piecewise constant.
    """
    origin = g.origin_index()
    w = g.cell_volume
    rot = _winding_phase(g, m) if phase_lock else None

    def pin(phi):
        if rot is not None:
            phi = (phi * np.conj(rot)).real * rot
        phi = np.array(phi, dtype=complex, order="C", copy=True)
        phi[origin] = 0.0
        n = math.sqrt(w * float(np.vdot(phi, phi).real))
        return phi / n

    return pin


def _is_radial(spec, g: Grid) -> bool:
    return (isinstance(spec, Harmonic) and len(spec.gammas) >= 2
            and spec.gammas[0] == spec.gammas[1] and g.is_origin_symmetric())


def compute_central_vortex(cfg: SolverConfig, p, spec, g: Grid, m: int = 1,
                           method: str = "auto", phase_lock: bool = True) -> GroundStateResult:
    """Lowest state of the form ``f(r) e^{im theta}`` with the origin pinned to 0.

    ``method``:

    * ``"polar"``: the same semi-implicit scheme written for the radial
      profile ``f`` on a uniform radial grid with ``f(0) = 0``; the converged
      profile is sampled onto ``g``.  Needs a radially symmetric trap.
    * ``"cartesian"``: the flow on ``g`` with the origin node pinned after
      every projection (and the phase locked to ``m theta``, see
      :func:`_origin_pin`).
    * ``"auto"``: polar when the trap is radially symmetric.

    The returned energy is always evaluated on ``g``.
    """
    if g.dim != 2:
        raise ValueError("central vortex states are computed in 2D")
    if m == 0:
        raise ValueError("winding number must be nonzero")
    if g.origin_index() is None:
        raise ValueError("grid has no node at the origin (use even interval counts on "
                         "symmetric bounds)")
    if p.epsilon <= 0:
        raise ValueError("vortex runs need a positive regularization epsilon")
    if method not in ("auto", "polar", "cartesian"):
        raise ValueError(f"unknown method {method!r}")
    validate_params(p, 2, spec)
    if method == "auto":
        method = "polar" if _is_radial(spec, g) else "cartesian"
    if method == "polar":
        if not _is_radial(spec, g):
            raise ValueError("polar method needs a harmonic trap with gamma_x = gamma_y")
        return _polar_vortex(cfg, p, spec, g, m)
    cfg = replace(cfg, winding=m, initial="vortex" if cfg.initial == "auto" else cfg.initial)
    phi0 = initial_data(cfg, p, g, spec)
    pin = _origin_pin(g, m, phase_lock)
    res = compute_ground_state(cfg, p, spec, g, constraint=pin, phi0=phi0)
    return res


@dataclass
class RadialState:
    r: np.ndarray
    f: np.ndarray
    energy: float
    mu: float
    steps: int
    converged: bool


def radial_vortex(p, gamma: float, m: int, radius: float, h: float, dt: float = 0.01,
                  tol: float = 1e-6, max_steps: int = 200_000, history=None) -> RadialState:
    """Radial form of the regularized flow for ``phi = f(r) e^{im theta}``.

    Uses ``(1/r)(r f')'`` in flux form on nodes ``r_j = j h`` with
    ``f(0) = f(radius) = 0``, the weight ``2 pi r`` in all sums, and the
    angular term ``m^2 / (2 r^2)`` plus the rotation shift ``-omega m``.
    """
    n = int(round(radius / h))
    if n < 8:
        raise ValueError("radial grid too coarse")
    r = np.arange(n + 1) * h
    rp, rm = r + 0.5 * h, r - 0.5 * h
    w = 2.0 * math.pi * r * h
    v = 0.5 * gamma * gamma * r * r
    cen = np.zeros(n + 1)
    cen[1:] = 0.5 * m * m / r[1:] ** 2
    rot = -p.omega * m
    eps = max(p.epsilon, DENSITY_FLOOR)
    i = np.arange(1, n)
    up = -0.5 * rp[i] / (r[i] * h * h)
    lo = -0.5 * rm[i] / (r[i] * h * h)
    stiff = 0.5 * (rp[i] + rm[i]) / (r[i] * h * h)

    def lap(f):
        out = np.zeros_like(f)
        out[1:-1] = (rp[1:-1] * (f[2:] - f[1:-1]) - rm[1:-1] * (f[1:-1] - f[:-2])) / (r[1:-1] * h * h)
        return out

    def energy_of(f):
        d = np.diff(f) / h
        grad = 2.0 * math.pi * h * np.sum((r[:-1] + 0.5 * h) * d * d)
        a = np.abs(f)
        return float((0.5 - p.alpha) * grad + np.sum(w * (cen + v + rot) * f * f)
                     + 0.6 * p.beta * np.sum(w * a ** (10.0 / 3.0)))

    width = (1.0 - 2.0 * p.alpha) ** 0.25 / math.sqrt(gamma)
    f = r**abs(m) * np.exp(-0.5 * (r / width) ** 2)
    f[-1] = 0.0
    f /= math.sqrt(np.sum(w * f * f))
    mu = float("nan")
    converged = False
    k = 0
    for k in range(1, max_steps + 1):
        a = np.abs(f)
        qp = p.alpha * lap(a) / np.sqrt(a * a + eps) if p.alpha else 0.0
        nl = p.beta * np.cbrt(a * a) ** 2
        mu = float(np.sum(w * (-0.5 * f * lap(f) + (cen + v + rot + nl + qp) * f * f)))
        c = v + nl + qp + cen + rot - mu
        ab = np.zeros((3, n - 1))
        ab[0, 1:] = up[:-1]
        ab[1] = 1.0 / dt + c[i] + stiff
        ab[2, :-1] = lo[1:]
        new = np.zeros_like(f)
        new[1:-1] = solve_banded((1, 1), ab, f[1:-1] / dt, check_finite=False)
        nrm = math.sqrt(float(np.sum(w * new * new)))
        if nrm == 0.0 or not np.isfinite(nrm):
            raise FlowError("radial flow produced a zero or non-finite field")
        new /= nrm
        inc = math.sqrt(float(np.sum(w * (new - f) ** 2)))
        f = new
        if history is not None:
            history.append(HistoryEntry(k, energy_of(f), mu, inc, 1))
        if inc < tol:
            converged = True
            break
    return RadialState(r, f, energy_of(f), mu, k, converged)


def _polar_vortex(cfg: SolverConfig, p, spec, g: Grid, m: int) -> GroundStateResult:
    gamma = float(spec.gammas[0])
    radius = min(min(abs(lo), abs(hi)) for lo, hi in g.bounds)
    h = min(g.spacing) / 4.0
    history: list[HistoryEntry] = []
    stages = [p.replace(omega=o, alpha=a, beta=b) for o, a, b in cfg.continuation] + [p]
    st = None
    for stage in stages:
        st = radial_vortex(stage, gamma, m, radius, h, cfg.dt, cfg.tol, cfg.max_steps, history)
    x, y = g.mesh()
    rr = np.sqrt(x * x + y * y)
    amp = np.interp(rr, st.r, st.f, right=0.0)
    values = amp * _winding_phase(g, m)
    values[g.origin_index()] = 0.0
    zero_boundary(values)
    f = Field(g, values.astype(complex)).normalized()
    e = energy(f, spec, p)
    mu = chemical_potential_discrete(f, spec, p, check=False)
    return GroundStateResult(f, e, mu, st.steps, history, st.converged, p)


def ring_seed_counts(p, spec) -> list[int]:
    """Vortex counts tried by :func:`rotating_ground_state`: 1 up to the
    rigid-rotation estimate Omega R^2 with the Thomas-Fermi radius R."""
    from .analytic import tf_chemical_potential

    gam = min(float(v) for v in spec.gammas[:2]) if isinstance(spec, Harmonic) else 1.0
    beta = max(p.beta, 1e-12)
    r2 = 2.0 * tf_chemical_potential(beta, (gam, gam)) / gam**2
    return list(range(1, max(1, math.ceil(abs(p.omega) * r2)) + 1))


def rotating_ground_state(cfg: SolverConfig, p, spec, g: Grid, seeds=None,
                          threshold: float = DEFAULT_THRESHOLD) -> GroundStateResult:
    """Lowest-energy stationary state over several starts.

    Fast rotation leaves the flow in whichever metastable vortex arrangement
    the initial data falls into.  Besides the start described by ``cfg``
    this runs one start per entry of ``seeds`` (default
    :func:`ring_seed_counts`), seeded with that many vortices and no
    continuation, and keeps the state with the lowest energy.  Every start
    is recorded in ``result.starts``.
    """
    if g.dim != 2:
        raise ValueError("multi-start search is for 2D rotating runs")
    seeds = ring_seed_counts(p, spec) if seeds is None else list(seeds)
    runs = [("default", cfg)]
    runs += [(f"ring{n}", replace(cfg, initial="ring", winding=int(n), continuation=[]))
             for n in seeds]
    best = None
    starts = []
    for label, c in runs:
        res = compute_ground_state(c, p, spec, g)
        nv = len(res.census(threshold))
        starts.append((label, res.energy.total, res.converged, nv))
        if best is None or res.energy.total < best.energy.total:
            best = res
    best.starts = starts
    return best


def _wrap(d):
    """Wrap phase differences into (-pi, pi]."""
    return np.pi - np.mod(np.pi - d, 2.0 * np.pi)


def _ring_winding(theta, i, j) -> float:
    """Circulation of the phase around the 8 nodes surrounding node (i, j)."""
    ring = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
    vals = [theta[i + a, j + b] for a, b in ring]
    return float(sum(_wrap(vals[(k + 1) % 8] - vals[k]) for k in range(8)))


def count_vortices(f: Field, density_threshold: float = DEFAULT_THRESHOLD) -> list[VortexInfo]:
    """Vortices as plaquettes with nonzero phase winding and suppressed density.

    The winding of a plaquette is the sum of the four wrapped phase
    differences around it, divided by 2 pi; a plaquette counts when that sum
    is within 1e-6 of a nonzero multiple of 2 pi and its lowest corner
    density is below ``density_threshold`` times the peak density.

    Two refinements keep the census to what is visible in the density:

    * the plaquette must be enclosed by the condensate, i.e. lie in the
      region ``|f|^2 >= density_threshold * max|f|^2`` with its holes filled;
      the phase of the far halo is rounding noise and is ignored;
    * an interior node where ``f`` is exactly 0 (a pinned core) has no phase,
      so the four plaquettes touching it are replaced by one candidate at
      the node whose winding is taken around its eight neighbours.
    """
    g = f.grid
    if g.dim != 2:
        raise ValueError("vortex census needs a 2D field")
    phi = f.values
    dens = f.density()
    peak = float(dens.max())
    if peak == 0.0:
        return []
    cut = density_threshold * peak
    theta = np.angle(phi)
    inside = binary_fill_holes(dens >= cut)
    t00, t10, t11, t01 = theta[:-1, :-1], theta[1:, :-1], theta[1:, 1:], theta[:-1, 1:]
    circ = _wrap(t10 - t00) + _wrap(t11 - t10) + _wrap(t01 - t11) + _wrap(t00 - t01)
    k = np.rint(circ / (2.0 * np.pi))
    core = np.minimum.reduce([dens[:-1, :-1], dens[1:, :-1], dens[1:, 1:], dens[:-1, 1:]])
    enclosed = inside[:-1, :-1] & inside[1:, :-1] & inside[1:, 1:] & inside[:-1, 1:]
    hit = (k != 0) & (np.abs(circ - 2.0 * np.pi * k) < 1e-6) & (core < cut) & enclosed

    xs, ys = g.axes
    hx, hy = g.spacing
    out = []
    zero = dens == 0.0
    zero[0, :] = zero[-1, :] = zero[:, 0] = zero[:, -1] = False
    for i, j in zip(*np.nonzero(zero)):
        hit[i - 1:i + 1, j - 1:j + 1] = False
        if not inside[i, j]:
            continue
        c = _ring_winding(theta, i, j)
        kk = round(c / (2.0 * np.pi))
        if kk != 0 and abs(c - 2.0 * np.pi * kk) < 1e-6:
            out.append(VortexInfo(float(xs[i]), float(ys[j]), int(kk), 0.0))
    # plaquettes touching a zero node were handled above
    for i, j in zip(*np.nonzero(hit)):
        out.append(VortexInfo(float(xs[i] + 0.5 * hx), float(ys[j] + 0.5 * hy),
                              int(k[i, j]), float(core[i, j])))
    out.sort(key=lambda v: (round(math.hypot(v.x, v.y), 12), math.atan2(v.y, v.x)))
    return out


def total_winding(vortices) -> int:
    return sum(v.winding for v in vortices)


def radial_profile(f: Field) -> list[tuple[float, float]]:
    """(x, |f(x, 0)|) for the nodes on the positive x-axis, origin included."""
    g = f.grid
    if g.dim != 2:
        raise ValueError("radial profile needs a 2D field")
    ys = g.axes[1]
    j = int(np.argmin(np.abs(ys)))
    if abs(ys[j]) > 1e-9 * g.spacing[1]:
        raise ValueError("grid has no row at y = 0")
    xs = g.axes[0]
    sel = xs >= -1e-12
    return [(float(x), float(a)) for x, a in zip(xs[sel], np.abs(f.values[sel, j]))]


def core_eccentricity(f: Field, vortex: VortexInfo, radius: float = 1.0) -> float:
    """1 - (minor/major) axis ratio of the low-density region around a vortex.

    Uses second moments of the density deficit ``peak - |f|^2`` inside a disc
    of the given radius; 0 for a round core.
    """
    g = f.grid
    x, y = g.mesh()
    dx = x - vortex.x
    dy = y - vortex.y
    mask = dx * dx + dy * dy <= radius * radius
    dens = f.density()
    wgt = np.where(mask, np.clip(dens[mask].max() - dens, 0.0, None), 0.0)
    s = wgt.sum()
    if s == 0:
        return 0.0
    cxx = float((wgt * dx * dx).sum() / s)
    cyy = float((wgt * dy * dy).sum() / s)
    cxy = float((wgt * dx * dy).sum() / s)
    ev = np.linalg.eigvalsh([[cxx, cxy], [cxy, cyy]])
    if ev[1] <= 0:
        return 0.0
    return float(1.0 - math.sqrt(max(ev[0], 0.0) / ev[1]))
