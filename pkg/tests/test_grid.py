import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ufgflow.grid import (Field, Grid, GridMismatchError, apply_laplacian, apply_lz, build_grid,
                          discrete_norm, inner_product, laplacian_array)

from conftest import embed, interior_laplacian, interior_lz, random_field


# -- build_grid ---------------------------------------------------------------

def test_table1_spacing():
    g = build_grid(1, (-20, 20), 4000)
    assert g.spacing == (0.01,)
    assert g.shape == (4001,)


def test_unit_interval_nodes():
    g = build_grid(1, (0, 1), 4)
    np.testing.assert_array_equal(g.axes[0], [0, 0.25, 0.5, 0.75, 1])


def test_2d_spacing():
    g = build_grid(2, (-8, 8), 256)
    assert g.spacing == (0.0625, 0.0625)


def test_spacing_times_count_is_length():
    g = build_grid(3, [(-1.5, 2.0), (0, 3.3), (-7, 7)], (7, 11, 13))
    for (lo, hi), n, h in zip(g.bounds, g.counts, g.spacing):
        assert h * n == pytest.approx(hi - lo, rel=1e-15)
        ax = g.axes[g.bounds.index((lo, hi))]
        assert ax[0] == lo and ax[-1] == pytest.approx(hi, rel=1e-15)


@pytest.mark.parametrize("bounds,counts", [((0, 1), 2), ((1, 1), 10), ((2, 1), 10),
                                           ((0, float("inf")), 10)])
def test_rejects_bad_grids(bounds, counts):
    with pytest.raises(ValueError):
        build_grid(1, bounds, counts)


def test_rejects_bad_dimension():
    with pytest.raises(ValueError):
        build_grid(4, (0, 1), 4)


def test_origin_index():
    assert build_grid(2, (-8, 8), 256).origin_index() == (128, 128)
    assert build_grid(2, (-8, 8), 255).origin_index() is None


# -- Laplacian ------------------------------------------------------------------

def test_laplacian_exact_on_quadratics():
    g = build_grid(1, (-1, 1), 40)
    f = g.sample(lambda x: x * x)
    lap = apply_laplacian(f).values.real
    # nodes next to the boundary see the Dirichlet zero instead of x^2
    np.testing.assert_allclose(lap[2:-2], 2.0, rtol=0, atol=1e-10)
    assert lap[0] == 0 and lap[-1] == 0


def test_laplacian_of_constant():
    g = build_grid(1, (0, 1), 20)
    f = g.sample(lambda x: 3.0 + 0 * x)
    lap = apply_laplacian(f).values.real
    h = g.spacing[0]
    np.testing.assert_allclose(lap[3:-3], 0.0, atol=1e-9)
    assert lap[1] == pytest.approx(-3.0 / h**2)
    assert lap[-2] == pytest.approx(-3.0 / h**2)


def test_laplacian_sine_eigenvalue():
    g = build_grid(1, (0, 1), 100)
    h = g.spacing[0]
    f = g.sample(lambda x: np.sin(np.pi * x))
    lam = -(2.0 / h**2) * (1.0 - math.cos(math.pi * h))
    out = apply_laplacian(f).values
    np.testing.assert_allclose(out[1:-1], lam * f.values[1:-1], rtol=0, atol=1e-12 * abs(lam))


@pytest.mark.parametrize("dim,counts", [(1, 17), (2, (9, 12)), (3, (5, 6, 7))])
def test_laplacian_matches_assembled_matrix(dim, counts, rng):
    g = build_grid(dim, (-1.3, 2.1), counts)
    f = random_field(g, rng)
    want = embed(g, interior_laplacian(g) @ f.values[g.interior].reshape(-1))
    np.testing.assert_allclose(apply_laplacian(f).values, want, rtol=1e-13, atol=1e-10)


def test_laplacian_second_order():
    errs = []
    for n in (40, 80, 160):
        g = build_grid(2, (-4, 4), n)
        f = g.sample(lambda x, y: np.exp(-(x * x + 2 * y * y) / 2))
        exact = g.sample(lambda x, y: ((x * x - 1) + (4 * y * y - 2)) * np.exp(-(x * x + 2 * y * y) / 2))
        errs.append(np.max(np.abs(apply_laplacian(f).values - exact.values)[2:-2, 2:-2]))
    slopes = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    for s in slopes:
        assert 1.9 <= s <= 2.1


# -- L_z ------------------------------------------------------------------------

def test_lz_of_real_field_is_imaginary(rng):
    g = build_grid(2, (-3, 3), 16)
    f = random_field(g, rng, complex_values=False)
    assert np.all(apply_lz(f).values.real == 0)


def test_lz_radial_gaussian_vanishes():
    # nodewise the centered stencil leaves x sinh(yh) - y sinh(xh) = O(h^2);
    # the rotation energy <f, L f> of the real radial field vanishes exactly
    errs = []
    for n in (48, 96, 192):
        g = build_grid(2, (-6, 6), n)
        f = g.sample(lambda x, y: np.exp(-(x * x + y * y) / 2))
        lf = apply_lz(f)
        errs.append(np.max(np.abs(lf.values)))
        assert abs(inner_product(f, lf)) <= 1e-10
    assert errs[-1] < 1e-3
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(4.0, rel=0.05)


def test_lz_eigenfunction_m1():
    errs = []
    for n in (64, 128):
        g = build_grid(2, (-6, 6), n)
        f = g.sample(lambda x, y: (x + 1j * y) * np.exp(-(x * x + y * y) / 2))
        errs.append(np.max(np.abs(apply_lz(f).values - f.values)))
    assert errs[1] < 1e-2
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_lz_matches_assembled_matrix(rng):
    g = build_grid(2, (-2, 2), (10, 14))
    f = random_field(g, rng)
    want = embed(g, interior_lz(g) @ f.values[g.interior].reshape(-1))
    np.testing.assert_allclose(apply_lz(f).values, want, rtol=1e-13, atol=1e-12)


def test_lz_rejects_1d():
    with pytest.raises(ValueError):
        apply_lz(build_grid(1, (-1, 1), 8).zeros())


def test_lz_warns_on_asymmetric_grid():
    with pytest.warns(UserWarning):
        apply_lz(build_grid(2, (0, 1), 8).zeros())


# -- norms and pairings ---------------------------------------------------------------

def test_norm_counts_all_nodes():
    g = build_grid(1, (0, 1), 10)
    f = g.sample(lambda x: 1.0 + 0 * x)
    assert discrete_norm(f) == pytest.approx(math.sqrt(0.1 * 9), rel=1e-15)


def test_norm_of_gaussian(grid1d_table):
    f = grid1d_table.sample(lambda x: np.pi**-0.25 * np.exp(-x * x / 2))
    assert abs(discrete_norm(f) - 1.0) <= 1e-8


def test_norm_zero():
    assert discrete_norm(build_grid(2, (-1, 1), 6).zeros()) == 0.0


def test_inner_product_norm(rng):
    f = random_field(build_grid(2, (-1, 1), 9), rng)
    assert inner_product(f, f).real == pytest.approx(discrete_norm(f) ** 2, rel=1e-14)


def test_inner_product_grid_mismatch():
    with pytest.raises(GridMismatchError):
        inner_product(build_grid(1, (0, 1), 5).zeros(), build_grid(1, (0, 1), 6).zeros())


def test_field_shape_checked():
    with pytest.raises(GridMismatchError):
        Field(build_grid(1, (0, 1), 5), np.zeros(5))


# -- properties ---------------------------------------------------------------------

_seeds = st.integers(0, 2**32 - 1)
_counts = st.integers(3, 12)


@settings(max_examples=40, deadline=None)
@given(seed=_seeds, nx=_counts, ny=_counts)
def test_laplacian_symmetric_and_negative(seed, nx, ny):
    rng = np.random.default_rng(seed)
    g = build_grid(2, [(-1, 1), (-2, 0.5)], (nx, ny))
    f, h = random_field(g, rng), random_field(g, rng)
    lhs = inner_product(apply_laplacian(f), h)
    rhs = inner_product(f, apply_laplacian(h))
    assert abs(lhs - rhs) <= 1e-12 * discrete_norm(f) * discrete_norm(h) * max(1.0, 1 / min(g.spacing) ** 2)
    assert inner_product(apply_laplacian(f), f).real <= 0


@settings(max_examples=40, deadline=None)
@given(seed=_seeds, n=st.integers(4, 12))
def test_lz_hermitian(seed, n):
    rng = np.random.default_rng(seed)
    g = build_grid(2, (-1.5, 1.5), n)
    f, h = random_field(g, rng), random_field(g, rng)
    lhs = inner_product(apply_lz(f), h)
    rhs = inner_product(f, apply_lz(h))
    scale = discrete_norm(f) * discrete_norm(h)
    assert abs(lhs - rhs) <= 1e-12 * scale * 10
    assert abs(inner_product(apply_lz(f), f).imag) <= 1e-12 * scale * 10


@settings(max_examples=25, deadline=None)
@given(seed=_seeds, dim=st.integers(1, 3))
def test_operators_keep_boundary_zero(seed, dim):
    rng = np.random.default_rng(seed)
    g = build_grid(dim, (-1, 1), 6)
    f = Field(g, rng.standard_normal(g.shape) + 0j)  # boundary deliberately nonzero
    out = apply_laplacian(f).values
    ops = [out] + ([apply_lz(f).values] if dim >= 2 else [])
    for v in ops:
        for axis in range(dim):
            assert np.all(np.take(v, 0, axis=axis) == 0)
            assert np.all(np.take(v, -1, axis=axis) == 0)


def test_laplacian_array_dtype_preserved():
    g = build_grid(1, (0, 1), 8)
    assert laplacian_array(np.ones(g.shape), g.spacing).dtype == float
