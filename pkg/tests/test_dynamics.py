import numpy as np
import pytest

import rotbound as rb

from conftest import gaussian_field


@pytest.fixture(scope="module")
def vortex_ref(grid64, params):
    rep = rb.minimize_doubly(params, rb.Constraints(m=1.0, l=1.0), rb.SolveOptions(), grid=grid64)
    assert rep.converged
    return rb.OrbitReference(rep.field, rep.multipliers, rb.Constraints(m=1.0, l=1.0), params)


@pytest.fixture(scope="module")
def vortex_ref_fine(grid128, params):
    rep = rb.minimize_doubly(params, rb.Constraints(m=1.0, l=1.0), rb.SolveOptions(), grid=grid128)
    assert rep.converged
    return rb.OrbitReference(rep.field, rep.multipliers, rb.Constraints(m=1.0, l=1.0), params)


def test_step_strang_preserves_mass(grid64, params):
    f = gaussian_field(grid64)
    out = rb.step_strang(f, 1e-3, params)
    assert abs(rb.mass(out) - rb.mass(f)) < 1e-12 * rb.mass(f)


def test_step_strang_rejects_bad_dt(grid64, params):
    f = gaussian_field(grid64)
    with pytest.raises(ValueError):
        rb.step_strang(f, -1e-3, params)


def test_free_gaussian_spreading(grid128):
    # potential-free harness: seed the memoized V with zeros, lam = 0
    p = rb.PhysicsParams(lam=0.0, sigma=1.0, k=4.0)
    grid = rb.make_grid(128, 8.0)
    grid._potential_memo[p.k] = np.zeros((128, 128))
    f = gaussian_field(grid)
    dt, steps = 1e-3, 100
    v = f
    for _ in range(steps):
        v = rb.step_strang(v, dt, p)
    t = dt * steps
    z = 1.0 + 1j * t
    expect = np.exp(-grid.rsq / (2.0 * z)) / z
    assert np.max(np.abs(v.values - expect)) < 1e-6


def test_eigenmode_support_invariant(grid128):
    p = rb.PhysicsParams(lam=0.0, sigma=1.0, k=4.0)
    f = rb.single_mode_seed(grid128, 1.0, 1)
    v = f
    for _ in range(50):
        v = rb.step_strang(v, 1e-3, p)
    assert 1.0 - rb.dominant_mode_fraction(v, 1, 6) < 1e-8


def test_evolve_conserves_short(grid64, params):
    rep = rb.minimize_doubly(params, rb.Constraints(m=1.0, l=0.0), rb.SolveOptions(), grid=grid64)
    trace = rb.evolve(rep.field, 1.0, 1e-3, params)
    assert np.max(trace.mass_drift) < 1e-12
    assert np.max(trace.energy_drift) < 1e-6
    assert np.max(trace.ang_mom_drift) < 1e-5
    assert np.all(np.diff(trace.times) > 0)


def test_evolve_rejects_bad_args(grid64, params):
    f = gaussian_field(grid64)
    with pytest.raises(ValueError):
        rb.evolve(f, -1.0, 1e-3, params)
    with pytest.raises(ValueError):
        rb.evolve(f, 1.0, 0.1, params)


def test_evolve_detects_nan(grid64, params):
    vals = gaussian_field(grid64).values.copy()
    vals[3, 5] = np.nan
    f = rb.WaveField(grid64, vals)
    with pytest.raises(rb.BlowUpError) as err:
        rb.evolve(f, 1.0, 1e-3, params)
    assert err.value.time > 0


def test_rotate_field_mode1_sign(grid64):
    # frozen convention: rotate_field multiplies angular mode n by exp(-i n alpha)
    g = grid64
    f = rb.WaveField(g, np.sqrt(g.rsq) * np.exp(1j * g.theta) * np.exp(-g.rsq / 2))
    alpha = 0.73
    rot = rb.rotate_field(f, alpha)
    assert np.max(np.abs(rot.values - np.exp(-1j * alpha) * f.values)) < 1e-9


def test_rotate_field_identity(grid64):
    f = rb.single_mode_seed(grid64, 1.0, 2) + rb.single_mode_seed(grid64, 0.5, 0)
    rot = rb.rotate_field(f, 0.0)
    assert np.max(np.abs(rot.values - f.values)) < 1e-12


def test_orbit_distance_zero_at_reference(vortex_ref):
    assert rb.orbit_distance(vortex_ref.phi, vortex_ref) < 1e-10


def test_orbit_distance_grid_mismatch(vortex_ref, grid128):
    other = rb.single_mode_seed(grid128, 1.0, 1)
    with pytest.raises(ValueError):
        rb.orbit_distance(other, vortex_ref)


def test_orbit_distance_recovers_orbit_element(vortex_ref):
    phi = vortex_ref.phi
    cand = rb.rotate_field(phi, 1.1)
    cand = rb.WaveField(phi.grid, np.exp(0.4j) * cand.values)
    assert vortex_ref.metric().distance(cand) < 1e-6


def test_orbit_distance_perturbation_scale(vortex_ref, params):
    phi = vortex_ref.phi
    pert = rb.tangent_project(
        rb.WaveField(phi.grid, np.exp(-phi.grid.rsq)), phi
    )
    pert = (1.0 / rb.h1_norm(pert, params)) * pert
    eps = 1e-3
    cand = rb.WaveField(phi.grid, phi.values + eps * pert.values)
    d = vortex_ref.metric().distance(cand)
    assert 0.1 * eps < d < 10.0 * eps


def test_orbit_covariance(vortex_ref_fine, params):
    # evolving a rotated/phased copy gives the same orbit distances
    phi = vortex_ref_fine.phi
    moved = rb.rotate_field(phi, 0.9)
    moved = rb.WaveField(phi.grid, np.exp(1.3j) * moved.values)
    t1 = rb.evolve(phi, 0.5, 1e-3, params, ref=vortex_ref_fine, record_stride=100)
    t2 = rb.evolve(moved, 0.5, 1e-3, params, ref=vortex_ref_fine, record_stride=100)
    assert np.max(np.abs(t1.orbit_distance - t2.orbit_distance)) < 1e-8


def test_stability_unperturbed_floor(vortex_ref, params):
    result = rb.stability_experiment(vortex_ref, 0.0, 1.0, 1e-3, params)
    assert result.sup_distance < 1e-4


def test_stability_small_perturbation(vortex_ref, params):
    eps = 1e-2
    result = rb.stability_experiment(vortex_ref, eps, 1.0, 1e-3, params)
    assert result.sup_distance < 10.0 * eps
    assert result.trace.orbit_distance is not None


def test_h1_norm_dominates_l2(grid64, params):
    f = gaussian_field(grid64)
    assert rb.h1_norm(f, params) > rb.norm(f)
