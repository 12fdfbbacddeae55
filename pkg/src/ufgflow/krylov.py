"""Matrix-free solvers for the implicit systems of the gradient flow.

The general solver is Jacobi-preconditioned BiCGSTAB, which needs neither a
transpose nor Hermitian structure.  One-dimensional systems are tridiagonal
and go through a banded direct solve instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import _kernels

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000


class SolverBreakdown(ArithmeticError):
    pass


@dataclass
class LinearOperator:
    """A linear map on arrays of a fixed shape.

    ``diagonal`` (same shape, may be complex) enables Jacobi preconditioning.
    Entries where the diagonal is zero are treated as eliminated unknowns:
    the preconditioner maps them to zero.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    shape: tuple[int, ...]
    diagonal: np.ndarray | None = None
    dtype: type = complex

    def __call__(self, x):
        return self.apply(x)


class StencilOperator(LinearOperator):
    """``diag(d) - 1/2 lap_h - omega L_z`` on the interior nodes of ``grid``.

    Solves with this operator in 2D/3D run through a compiled BiCGSTAB that
    performs exactly the iteration of :func:`solve`.
    """

    def __init__(self, grid, d, omega: float = 0.0):
        self.grid = grid
        self.d = np.ascontiguousarray(d, dtype=float)
        self.omega = float(omega)
        diag = self.d + sum(1.0 / (h * h) for h in grid.spacing)
        for axis in range(grid.dim):
            idx = [slice(None)] * grid.dim
            idx[axis] = 0
            diag[tuple(idx)] = 0.0
            idx[axis] = -1
            diag[tuple(idx)] = 0.0
        super().__init__(self._apply, grid.shape, diag, complex if omega else float)

    def _apply(self, x):
        return _kernels.system_apply(np.ascontiguousarray(x), self.d, self.grid, self.omega)


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    tag: str = ""


def _jacobi(diagonal):
    if diagonal is None:
        return None
    inv = np.zeros_like(diagonal)
    nz = diagonal != 0
    inv[nz] = 1.0 / diagonal[nz]
    return inv


def _dot(a, b):
    return np.vdot(a, b)


def solve(A: LinearOperator, b: np.ndarray, tol: float = DEFAULT_TOL,
          max_iter: int = DEFAULT_MAX_ITER, x0: np.ndarray | None = None,
          precondition: bool = True) -> tuple[np.ndarray, SolveReport]:
    """Solve ``A x = b`` by right-preconditioned BiCGSTAB.

    Stops once ``||b - A x|| <= tol * ||b||`` (true residual, recomputed at
    the end).  Breakdowns and stagnation return ``converged=False`` with the
    best iterate; NaNs raise :class:`SolverBreakdown`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b)
    dtype = np.result_type(b.dtype, A.dtype, np.float64)
    if isinstance(A, StencilOperator) and precondition and A.grid.dim >= 2:
        return _solve_compiled(A, b.astype(dtype, copy=False), tol, max_iter, x0, dtype)
    m_inv = _jacobi(A.diagonal) if precondition else None

    def prec(v):
        return v if m_inv is None else m_inv * v

    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(b.shape, dtype=dtype), SolveReport(0, 0.0, True)
    target = tol * bnorm

    x = np.zeros(b.shape, dtype=dtype) if x0 is None else np.array(x0, dtype=dtype)
    r = b - A(x) if x0 is not None else b.astype(dtype, copy=True)
    rnorm = float(np.linalg.norm(r))
    if rnorm <= target:
        return x, SolveReport(0, rnorm / bnorm, True)

    r_hat = r.copy()
    rho = alpha = omega = np.dtype(dtype).type(1.0)
    v = np.zeros_like(r)
    p = np.zeros_like(r)
    best_x, best_r = x.copy(), rnorm
    tag = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        rho_new = _dot(r_hat, r)
        if rho_new == 0 or omega == 0:
            tag = "breakdown"
            break
        beta = (rho_new / rho) * (alpha / omega)
        rho = rho_new
        p = r + beta * (p - omega * v)
        p_hat = prec(p)
        v = A(p_hat)
        denom = _dot(r_hat, v)
        if denom == 0:
            tag = "breakdown"
            break
        alpha = rho / denom
        s = r - alpha * v
        snorm = float(np.linalg.norm(s))
        if snorm <= target:
            x = x + alpha * p_hat
            r = s
            rnorm = snorm
            break
        s_hat = prec(s)
        t = A(s_hat)
        tt = _dot(t, t).real
        if tt == 0:
            tag = "breakdown"
            break
        omega = _dot(t, s) / tt
        x = x + alpha * p_hat + omega * s_hat
        r = s - omega * t
        rnorm = float(np.linalg.norm(r))
        if not np.isfinite(rnorm):
            raise SolverBreakdown("NaN or overflow in BiCGSTAB iterates")
        if rnorm < best_r:
            best_x, best_r = x, rnorm
        if rnorm <= target:
            break

    # the recursively updated residual drifts; trust only the true one
    true_r = float(np.linalg.norm(b - A(x)))
    if not np.isfinite(true_r):
        raise SolverBreakdown("NaN or overflow in BiCGSTAB iterates")
    if true_r > target and best_r < true_r:
        x, true_r = best_x, float(np.linalg.norm(b - A(best_x)))
    converged = true_r <= target * 1.01
    return x, SolveReport(it, true_r / bnorm, converged, "" if converged else tag)


_STATUS = {0: "", 1: "breakdown", 2: "max_iter", 3: "non-finite"}


def _solve_compiled(A: StencilOperator, b, tol, max_iter, x0, dtype):
    g = A.grid
    x = (np.zeros(b.shape, dtype=dtype) if x0 is None
         else np.array(x0, dtype=dtype, order="C", copy=True))
    minv = np.ascontiguousarray(_jacobi(A.diagonal))
    hs = np.array(g.spacing + (1.0,) * (3 - g.dim))
    kernel = _kernels.stencil_kernel(g.dim, A.omega)
    it, res, status = _kernels.bicgstab_stencil(
        kernel, A.d, hs, g.axes[0], g.axes[1], A.omega, minv,
        np.ascontiguousarray(b), x, tol, max_iter)
    if status == 3:
        raise SolverBreakdown("NaN or overflow in BiCGSTAB iterates")
    return x, SolveReport(int(it), float(res), status == 0, _STATUS[status])


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Direct solve of a tridiagonal system.

    ``lower[i]`` couples row ``i+1`` to column ``i``; ``upper[i]`` couples row
    ``i`` to column ``i+1`` (both of length ``n-1``).
    """
    n = len(diag)
    ab = np.zeros((3, n), dtype=np.result_type(lower, diag, upper, rhs))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs, check_finite=False)
