import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ufgflow.diag import energy_ratio
from ufgflow.gfdn import SolverConfig, compute_ground_state, initial_data
from ufgflow.grid import Field, build_grid
from ufgflow.model import Harmonic, Params
from ufgflow.vortex import (compute_central_vortex, core_eccentricity, count_vortices, radial_profile,
                            radial_vortex, total_winding)

TRAP = Harmonic((1.0, 1.0))


@pytest.fixture(scope="module")
def fine_grid():
    return build_grid(2, (-8.0, 8.0), 512)


def gaussian_vortex(g, m):
    cfg = SolverConfig(initial="vortex", winding=m)
    return initial_data(cfg, Params(beta=10.0, gammas=(1, 1), epsilon=1e-4), g, TRAP)


# -- census on constructed fields ------------------------------------------------

@pytest.mark.parametrize("counts", [128, 256])
@pytest.mark.parametrize("m", [1, 2, 3, -1])
def test_gaussian_vortex_total_winding(counts, m):
    vs = count_vortices(gaussian_vortex(build_grid(2, (-8, 8), counts), m))
    assert len(vs) == 1
    assert (vs[0].x, vs[0].y, vs[0].winding) == (0.0, 0.0, m)
    assert total_winding(vs) == m


def test_positive_gaussian_has_no_vortices():
    g = build_grid(2, (-6, 6), 96)
    f = g.sample(lambda x, y: np.exp(-(x * x + 2 * y * y) / 2))
    assert count_vortices(f) == []


def test_zero_field_has_no_vortices():
    assert count_vortices(build_grid(2, (-1, 1), 8).zeros()) == []


def _pair_field(g, centers):
    """Product of (z - c_k)^{+-1} factors times a Gaussian envelope."""
    x, y = g.mesh()
    z = x + 1j * y
    v = np.exp(-(x * x + y * y) / 8).astype(complex)
    for (cx, cy), s in centers:
        d = z - (cx + 1j * cy)
        v = v * (d if s > 0 else np.conj(d))
    return Field(g, v)


def test_off_node_vortex_located_on_its_plaquette():
    g = build_grid(2, (-4, 4), 64)
    f = _pair_field(g, [((0.53, -1.21), +1)])
    vs = count_vortices(f)
    assert len(vs) == 1
    v = vs[0]
    assert v.winding == 1
    h = g.spacing[0]
    assert abs(v.x - 0.53) < h / 2 + 1e-12 and abs(v.y + 1.21) < h / 2 + 1e-12
    assert v.core_density < 1e-3 * f.density().max()


def test_vortex_antivortex_pair():
    g = build_grid(2, (-4, 4), 256)
    f = _pair_field(g, [((-1.03, 0.07), +1), ((1.06, 0.02), -1)])
    vs = count_vortices(f)
    assert sorted(v.winding for v in vs) == [-1, 1]
    assert total_winding(vs) == 0


def test_sorted_by_radius_then_angle():
    g = build_grid(2, (-5, 5), 320)
    centers = [((2.03, 0.01), 1), ((0.52, 0.49), 1), ((-2.02, 0.02), 1), ((0.01, 2.04), 1)]
    vs = count_vortices(_pair_field(g, centers))
    keys = [(round(math.hypot(v.x, v.y), 12), math.atan2(v.y, v.x)) for v in vs]
    assert len(vs) == 4
    assert keys == sorted(keys)


def test_threshold_controls_detection():
    g = build_grid(2, (-4, 4), 64)
    x, y = g.mesh()
    # a shallow dip keeps a phase winding but never reaches low density
    f = Field(g, np.exp(1j * np.arctan2(y - 0.03, x - 0.07)) * (0.5 + x * x + y * y)
              * np.exp(-(x * x + y * y) / 4))
    assert count_vortices(f, 1e-3) == []
    assert len(count_vortices(f, 0.9)) == 1


@settings(max_examples=25, deadline=None)
@given(st.floats(-math.pi, math.pi))
def test_gauge_invariance(theta):
    g = build_grid(2, (-4, 4), 256)
    f = _pair_field(g, [((-1.03, 0.07), +1), ((1.06, 0.02), -1), ((0.3, 1.4), 1)])
    rotated = Field(g, f.values * np.exp(1j * theta))
    assert len(count_vortices(f)) == 3
    assert [(v.x, v.y, v.winding) for v in count_vortices(rotated)] == \
           [(v.x, v.y, v.winding) for v in count_vortices(f)]


def test_census_rejects_1d():
    with pytest.raises(ValueError):
        count_vortices(build_grid(1, (-1, 1), 8).zeros())


# -- central vortex states --------------------------------------------------------

@pytest.mark.parametrize("alpha,beta,ref,tol", [(0.0, 0.0, 2.000, 2e-3), (0.3, 1.0, 1.7592, 2e-3),
                                                (0.48, 10.0, 2.5355, 5e-3)])
def test_central_vortex_energies(fine_grid, alpha, beta, ref, tol):
    p = Params(alpha=alpha, beta=beta, gammas=(1, 1), epsilon=1e-4)
    r = compute_central_vortex(SolverConfig(), p, TRAP, fine_grid)
    assert r.converged
    assert abs(r.energy.total - ref) <= tol
    vs = count_vortices(r.field)
    assert [(v.x, v.y, v.winding) for v in vs] == [(0.0, 0.0, 1)]


def test_beta0_vortex_is_analytic():
    # alpha = beta = 0: f(r) = r e^{-r^2/2} with E = 2
    p = Params(alpha=0.0, beta=0.0, gammas=(1, 1), epsilon=1e-4)
    st = radial_vortex(p, 1.0, 1, radius=10.0, h=0.01, tol=1e-10)
    exact = st.r * np.exp(-0.5 * st.r**2)
    exact /= math.sqrt(np.sum(2 * math.pi * st.r * 0.01 * exact**2))
    assert st.converged
    assert st.energy == pytest.approx(2.0, abs=1e-4)
    assert np.max(np.abs(st.f - exact)) < 1e-4


def test_cartesian_pinning_matches_polar():
    g = build_grid(2, (-8, 8), 128)
    p = Params(alpha=0.1, beta=1.0, gammas=(1, 1), epsilon=1e-4)
    polar = compute_central_vortex(SolverConfig(), p, TRAP, g, method="polar")
    cart = compute_central_vortex(SolverConfig(), p, TRAP, g, method="cartesian")
    assert cart.converged
    assert cart.field.values[g.origin_index()] == 0
    assert abs(cart.energy.total - polar.energy.total) < 2e-3
    assert total_winding(count_vortices(cart.field)) == 1


@pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (0.3, 10.0), (0.45, 100.0)])
def test_vortex_above_ground_state(alpha, beta):
    g = build_grid(2, (-8, 8), 128)
    p = Params(alpha=alpha, beta=beta, gammas=(1, 1), epsilon=1e-4)
    vort = compute_central_vortex(SolverConfig(), p, TRAP, g)
    ground = compute_ground_state(SolverConfig(), p.replace(epsilon=0.0), TRAP, g)
    assert vort.energy.total > ground.energy.total


@pytest.mark.parametrize("alpha,beta", [(0.1, 1.0), (0.3, 10.0), (0.45, 100.0)])
def test_vortex_ratio_below_two_alpha(fine_grid, alpha, beta):
    p = Params(alpha=alpha, beta=beta, gammas=(1, 1), epsilon=1e-4)
    r = compute_central_vortex(SolverConfig(), p, TRAP, fine_grid)
    ratio = energy_ratio(r.field, p)
    assert 0.0 < ratio < 2.0 * alpha


@pytest.mark.parametrize("kwargs,exc", [({"m": 0}, ValueError)])
def test_central_vortex_rejects_zero_winding(kwargs, exc):
    g = build_grid(2, (-4, 4), 32)
    with pytest.raises(exc):
        compute_central_vortex(SolverConfig(), Params(epsilon=1e-4, gammas=(1, 1)), TRAP, g, **kwargs)


def test_central_vortex_needs_origin_node():
    g = build_grid(2, (-4, 4), 33)
    with pytest.raises(ValueError, match="origin"):
        compute_central_vortex(SolverConfig(), Params(epsilon=1e-4, gammas=(1, 1)), TRAP, g)


def test_central_vortex_needs_epsilon():
    g = build_grid(2, (-4, 4), 32)
    with pytest.raises(ValueError, match="epsilon"):
        compute_central_vortex(SolverConfig(), Params(epsilon=0.0, gammas=(1, 1)), TRAP, g)


# -- radial profile ---------------------------------------------------------------

def test_profile_of_vortex_rises_then_decays():
    g = build_grid(2, (-8, 8), 256)
    p = Params(alpha=0.3, beta=10.0, gammas=(1, 1), epsilon=1e-4)
    prof = np.array(radial_profile(compute_central_vortex(SolverConfig(), p, TRAP, g).field))
    assert prof[0, 0] == 0.0 and prof[0, 1] == 0.0
    k = int(np.argmax(prof[:, 1]))
    assert 0 < k < len(prof) - 1
    assert np.all(np.diff(prof[: k + 1, 1]) > 0)
    assert np.all(np.diff(prof[k:, 1]) <= 0)


def test_profile_of_ground_state_decays():
    g = build_grid(2, (-8, 8), 128)
    r = compute_ground_state(SolverConfig(), Params(alpha=0.1, beta=10.0, gammas=(1, 1)), TRAP, g)
    prof = np.array(radial_profile(r.field))
    assert np.argmax(prof[:, 1]) == 0
    assert np.all(np.diff(prof[:, 1]) <= 1e-15)


def test_profile_of_zero_field():
    g = build_grid(2, (-2, 2), 16)
    prof = radial_profile(g.zeros())
    assert [x for x, _ in prof] == list(g.axes[0][8:])
    assert all(v == 0.0 for _, v in prof)


def test_profile_needs_y0_row():
    with pytest.raises(ValueError):
        radial_profile(build_grid(2, (-2, 2), 15).zeros())


# -- core shape ---------------------------------------------------------------------

def test_eccentricity_round_and_stretched():
    g = build_grid(2, (-4, 4), 128)
    x, y = g.mesh()
    env = np.exp(-(x * x + y * y) / 8)
    round_ = Field(g, (x + 1j * y) * env)
    stretched = Field(g, (x + 0.3j * y) * env)
    v = count_vortices(round_)[0]
    assert core_eccentricity(round_, v, 0.5) < 0.05
    assert core_eccentricity(stretched, count_vortices(stretched)[0], 0.5) > 0.15
