"""Closed-form reference states and reduced-model coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .grid import Field, Grid, zero_boundary
from .model import Harmonic, Params


@dataclass(frozen=True)
class ReducedCoefficients:
    beta1: float
    beta2: float
    mu_z: float
    mu_yz: float


def _check_alpha(alpha):
    if not alpha < 0.5:
        raise ValueError(f"alpha must satisfy alpha < 1/2, got {alpha}")


def tf_chemical_potential(beta: float, gammas) -> float:
    """Thomas-Fermi chemical potential for a harmonic trap (dimension = len(gammas))."""
    if beta <= 0:
        raise ValueError("Thomas-Fermi state needs beta > 0")
    g = [float(v) for v in gammas]
    if len(g) == 1:
        return 2.0 ** 1.25 * beta**0.75 * math.sqrt(g[0] / (3.0 * math.pi))
    if len(g) == 2:
        return 5.0**0.4 * beta**0.6 * (g[0] * g[1] / (4.0 * math.pi)) ** 0.4
    if len(g) == 3:
        return math.sqrt(2.0 * beta) * (g[0] * g[1] * g[2] / math.pi**2) ** (1.0 / 3.0)
    raise ValueError("1 to 3 trap frequencies expected")


def tf_state(spec: Harmonic, p: Params, g: Grid, normalize: bool = True) -> tuple[Field, float]:
    """Thomas-Fermi profile ``[(mu - V)/beta]^{3/4}`` (zero where V > mu)."""
    if not isinstance(spec, Harmonic):
        raise TypeError("Thomas-Fermi state is defined for harmonic traps")
    mu = tf_chemical_potential(p.beta, spec.gammas)
    v = spec.evaluate(g)
    phi = np.where(v < mu, np.clip(mu - v, 0.0, None) / p.beta, 0.0) ** 0.75
    zero_boundary(phi)
    f = Field(g, phi.astype(complex))
    return (f.normalized() if normalize else f), mu


def _gaussian(g: Grid, gammas, alpha: float, widths=None) -> np.ndarray:
    s = math.sqrt(1.0 - 2.0 * alpha)
    out = np.ones(g.shape)
    for i, (gam, x) in enumerate(zip(gammas, g.mesh())):
        w2 = s / gam if widths is None else widths[i] ** 2
        out = out * (math.pi * w2) ** -0.25 * np.exp(-x * x / (2.0 * w2))
    return out


def gaussian_state(p: Params, g: Grid, gammas=None) -> tuple[Field, float]:
    """Harmonic-oscillator ground state with the quantum-pressure width factor.

    The sample is not renormalized; on resolved grids its discrete norm is
    1 to quadrature accuracy.
    """
    _check_alpha(p.alpha)
    gammas = tuple(p.gammas[: g.dim] if gammas is None else gammas)
    phi = _gaussian(g, gammas, p.alpha)
    zero_boundary(phi)
    mu = 0.5 * math.sqrt(1.0 - 2.0 * p.alpha) * sum(gammas)
    return Field(g, phi.astype(complex)), mu


def gaussian_energy(widths, alpha: float, beta: float, gammas) -> float:
    """Energy of a normalized product Gaussian with per-axis widths ``widths``."""
    widths = np.asarray(widths, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    kin = (0.5 - alpha) * np.sum(0.5 / widths**2)
    pot = np.sum(0.25 * gammas**2 * widths**2)
    inter = 0.6 * beta * np.prod(math.pi ** (-1.0 / 3.0) * math.sqrt(0.6) * widths ** (-2.0 / 3.0))
    return float(kin + pot + inter)


def variational_widths(alpha: float, beta: float, gammas) -> np.ndarray:
    """Per-axis Gaussian widths minimizing :func:`gaussian_energy`."""
    _check_alpha(alpha)
    gammas = np.asarray(gammas, dtype=float)
    start = np.log((1.0 - 2.0 * alpha) ** 0.25 / np.sqrt(gammas))
    if beta == 0.0:
        return np.exp(start)
    res = minimize(lambda lw: gaussian_energy(np.exp(lw), alpha, beta, gammas), start,
                   method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
    return np.exp(res.x)


def variational_gaussian(p: Params, g: Grid, gammas=None) -> Field:
    gammas = tuple(p.gammas[: g.dim] if gammas is None else gammas)
    widths = variational_widths(p.alpha, max(p.beta, 0.0), gammas)
    phi = _gaussian(g, gammas, p.alpha, widths)
    zero_boundary(phi)
    return Field(g, phi.astype(complex))


def reduced_coefficients(beta: float, alpha: float, gammas) -> ReducedCoefficients:
    """Effective couplings of the quasi-1D and quasi-2D models.

    ``gammas`` = (gamma_x, gamma_y, gamma_z); the disk reduction integrates
    out z, the cigar reduction integrates out (y, z).
    """
    _check_alpha(alpha)
    _, gy, gz = (float(v) for v in gammas)
    if gy <= 0 or gz <= 0:
        raise ValueError("transverse trap frequencies must be positive")
    s = 1.0 - 2.0 * alpha
    beta2 = beta * math.sqrt(3.0 / 5.0) * gz ** (1.0 / 3.0) / (math.pi ** (1.0 / 3.0) * s ** (1.0 / 6.0))
    beta1 = 3.0 * beta * (gy * gz) ** (1.0 / 3.0) / (5.0 * math.pi ** (2.0 / 3.0) * s ** (1.0 / 3.0))
    sq = math.sqrt(s)
    return ReducedCoefficients(beta1, beta2, 0.5 * gz * sq, 0.5 * (gy + gz) * sq)


def transverse_mode(axes, p: Params, g: Grid) -> tuple[Field, float]:
    """Ground state of the tightly confined directions ('z' or ('y', 'z')).

    ``g`` is the transverse grid; its axes take the trap frequencies of the
    named directions from ``p.gammas``.
    """
    names = (axes,) if isinstance(axes, str) else tuple(axes)
    index = {"x": 0, "y": 1, "z": 2}
    if len(names) != g.dim:
        raise ValueError("one grid axis per transverse direction expected")
    gammas = tuple(p.gammas[index[n]] for n in names)
    return gaussian_state(p, g, gammas)
