"""Model parameters, trapping potentials and the discrete energy functional."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import Field, Grid, gradient_arrays, laplacian_array, lz_array

# Floor on the quantum-pressure denominator.  Only nodes with |phi| < 1e-100
# feel it; below that the Laplacian of |phi| is built from subnormal numbers.
DENSITY_FLOOR = 1e-200


@dataclass(frozen=True)
class Params:
    """Dimensionless coefficients of the unified d-dimensional equation.

    ``alpha`` multiplies the quantum-pressure term, ``beta`` the
    ``|psi|^{4/3}`` interaction, ``omega`` the rotation ``-omega*L_z``;
    ``gammas`` are the harmonic trap frequencies per axis and ``epsilon``
    regularizes the quantum-pressure denominator in the flow.
    """

    alpha: float = 0.0
    beta: float = 0.0
    omega: float = 0.0
    gammas: tuple[float, ...] = (1.0, 1.0, 1.0)
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if any(g < 0 for g in self.gammas):
            raise ValueError("trap frequencies must be nonnegative")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    def replace(self, **changes) -> "Params":
        d = asdict(self)
        d.update(changes)
        return Params(**d)


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional inputs; any consistent unit system works."""

    hbar: float
    mass: float
    particles: float
    xi: float
    lam: float
    omegas: tuple[float, float, float]

    @property
    def omega_max(self) -> float:
        return max(self.omegas)


def nondimensionalize(p: PhysicalParams, omega: float = 0.0, epsilon: float = 0.0) -> Params:
    """Map physical constants onto (alpha, beta, gammas).

    Lengths are scaled by ``sqrt(hbar / (2 m w_max))`` and times by
    ``1/w_max``; the rotation speed and regularization are passed through.
    """
    if p.mass <= 0:
        raise ValueError("mass must be positive")
    if min(p.omegas) <= 0:
        raise ValueError("trap frequencies must be positive")
    wm = p.omega_max
    beta = p.xi * p.hbar * (3.0 * math.pi**2 * p.particles) ** (2.0 / 3.0) / (2.0 * p.mass)
    alpha = (1.0 - 4.0 * p.lam) / 2.0
    return Params(alpha=alpha, beta=beta, omega=omega,
                  gammas=tuple(w / wm for w in p.omegas), epsilon=epsilon)


# --------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Harmonic:
    gammas: tuple[float, ...]

    def evaluate(self, grid: Grid) -> np.ndarray:
        _check_dim(self.gammas, grid)
        v = np.zeros(grid.shape)
        for g, x in zip(self.gammas, grid.mesh()):
            v = v + 0.5 * g * g * x * x
        return v


@dataclass(frozen=True)
class HarmonicPlusLattice:
    """Harmonic trap plus ``sum_i A_i sin^2(k_i x_i)``."""

    gammas: tuple[float, ...]
    amplitudes: tuple[float, ...]
    wavenumbers: tuple[float, ...]

    def evaluate(self, grid: Grid) -> np.ndarray:
        _check_dim(self.gammas, grid)
        _check_dim(self.amplitudes, grid)
        _check_dim(self.wavenumbers, grid)
        v = Harmonic(self.gammas).evaluate(grid)
        for a, k, x in zip(self.amplitudes, self.wavenumbers, grid.mesh()):
            v = v + a * np.sin(k * x) ** 2
        return v


@dataclass(frozen=True)
class Tabulated:
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("tabulated potential has non-finite values")
        if np.any(v < 0):
            warnings.warn("tabulated potential takes negative values", stacklevel=2)
        object.__setattr__(self, "values", v)

    def evaluate(self, grid: Grid) -> np.ndarray:
        if self.values.shape != grid.shape:
            raise ValueError(f"tabulated potential of shape {self.values.shape} "
                             f"does not match grid {grid.shape}")
        return self.values


PotentialSpec = Harmonic | HarmonicPlusLattice | Tabulated


def optical_lattice_1d(gamma: float = 1.0) -> HarmonicPlusLattice:
    """x^2/2 + 5*sqrt(2) sin^2(pi x / 2)."""
    return HarmonicPlusLattice((gamma,), (5.0 * math.sqrt(2.0),), (math.pi / 2.0,))


def harmonic_for(p: Params, dim: int) -> Harmonic:
    return Harmonic(tuple(p.gammas[:dim]))


def _check_dim(seq, grid: Grid):
    if len(seq) != grid.dim:
        raise ValueError(f"potential has {len(seq)} axes, grid has {grid.dim}")


def eval_potential(spec: PotentialSpec, grid: Grid) -> Field:
    return Field(grid, spec.evaluate(grid))


# --------------------------------------------------------------------------
# energy


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy terms; ``quantum_pressure`` is E2 >= 0 and enters ``total`` with a minus sign."""

    total: float
    kinetic: float
    potential: float
    interaction: float
    quantum_pressure: float
    rotation: float
    chemical_potential: float

    def as_dict(self) -> dict:
        return asdict(self)


def _potential_values(spec, grid: Grid) -> np.ndarray:
    if isinstance(spec, np.ndarray):
        return spec
    if isinstance(spec, Field):
        return spec.values.real
    return spec.evaluate(grid)


def energy(f: Field, spec, p: Params) -> EnergyBreakdown:
    """Discrete energy with centered first differences for the gradient terms.

    The chemical potential reported here is the continuous-form one (same
    integrand with ``beta`` in place of ``3 beta / 5``); see
    :func:`chemical_potential_discrete` for the flow's multiplier.
    """
    grid = f.grid
    w = grid.cell_volume
    phi = f.values
    dens = phi.real**2 + phi.imag**2
    norm2 = w * dens.sum()
    if abs(norm2 - 1.0) > 2e-6:
        warnings.warn(f"energy of a field with squared norm {norm2:.8g}", stacklevel=2)
    v = _potential_values(spec, grid)

    grad = gradient_arrays(phi, grid.spacing)
    grad_abs = gradient_arrays(np.sqrt(dens), grid.spacing)
    kinetic = 0.5 * w * sum(float(np.sum(g.real**2 + g.imag**2)) for g in grad)
    qp = p.alpha * w * sum(float(np.sum(g * g)) for g in grad_abs)
    pot = w * float(np.sum(v * dens))
    nl = w * float(np.sum(dens ** (5.0 / 3.0)))
    inter = 0.6 * p.beta * nl
    rot = 0.0
    if p.omega != 0.0 and grid.dim >= 2:
        rot = -p.omega * w * float(np.sum((np.conj(phi) * lz_array(phi, grid)).real))
    total = kinetic + pot + inter - qp + rot
    mu = kinetic + pot + p.beta * nl - qp + rot
    return EnergyBreakdown(total, kinetic, pot, inter, qp, rot, mu)


def chemical_potential_discrete(f: Field, spec, p: Params, *, lap_abs=None,
                                check: bool = True) -> float:
    """Lagrange multiplier of the discrete flow (regularized quantum pressure).

    ``lap_abs`` may carry a precomputed Laplacian of ``|phi|``.
    """
    grid = f.grid
    phi = f.values
    dens = phi.real**2 + phi.imag**2
    if check:
        n2 = grid.cell_volume * dens.sum()
        if abs(n2 - 1.0) > 2e-6:
            warnings.warn(f"chemical potential of a field with squared norm {n2:.8g}",
                          stacklevel=2)
    v = _potential_values(spec, grid)
    amp = np.sqrt(dens)
    if lap_abs is None:
        lap_abs = laplacian_array(amp, grid.spacing)
    lap = laplacian_array(phi, grid.spacing)
    kin = -0.5 * np.sum(np.conj(phi) * lap)
    total = kin + np.sum(v * dens) + p.beta * np.sum(dens ** (5.0 / 3.0))
    if p.alpha != 0.0:
        denom = np.sqrt(dens + max(p.epsilon, DENSITY_FLOOR))
        total = total + p.alpha * np.sum(dens / denom * lap_abs)
    if p.omega != 0.0 and grid.dim >= 2:
        total = total - p.omega * np.sum((np.conj(phi) * lz_array(phi, grid)).real)
    total = complex(total) * grid.cell_volume
    if abs(total.imag) > 1e-8:
        raise ArithmeticError(
            f"chemical potential has imaginary part {total.imag:.3e}; operator symmetry broken"
        )
    return total.real
