"""Shared fixtures; the expensive solver runs are session-scoped and lazy."""

import numpy as np
import pytest

import rotbound as rb


@pytest.fixture(scope="session")
def grid64():
    return rb.make_grid(64, 8.0)


@pytest.fixture(scope="session")
def grid128():
    return rb.make_grid(128, 8.0)


@pytest.fixture(scope="session")
def grid256():
    return rb.make_grid(256, 8.0)


@pytest.fixture(scope="session")
def params():
    return rb.PhysicsParams(lam=1.0, sigma=1.0, k=4.0)


@pytest.fixture(scope="session")
def params_linear():
    return rb.PhysicsParams(lam=0.0, sigma=1.0, k=4.0)


def gaussian_field(grid, width=1.0):
    return rb.WaveField(grid, np.exp(-grid.rsq / (2.0 * width**2)).astype(complex))


def smooth_random_field(grid, seed, k_cut=1.0, envelope=1.3):
    """Seeded band-limited complex field with a confining Gaussian envelope."""
    rng = np.random.default_rng(seed)
    coeffs = np.zeros((grid.n, grid.n), dtype=complex)
    sel = grid.ksq <= k_cut**2
    count = int(np.sum(sel))
    coeffs[sel] = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    from scipy import fft as sfft

    noise = sfft.ifft2(coeffs)
    return rb.WaveField(grid, noise * np.exp(-grid.rsq / (2.0 * envelope**2)))


@pytest.fixture(scope="session")
def base_minimizers(grid128, params):
    """Converged doubly constrained minimizers for l in {0, 0.5, 1, 2} at m=1."""
    out = {}
    for l in (0.0, 0.5, 1.0, 2.0):
        out[l] = rb.minimize_doubly(
            params, rb.Constraints(m=1.0, l=l), rb.SolveOptions(), grid=grid128
        )
    return out


@pytest.fixture(scope="session")
def scan_curve(grid128, params):
    """e(1, l) over l = -2 : 0.25 : 2 (warm continuation outward from 0)."""
    l_grid = np.arange(-2.0, 2.0 + 1e-9, 0.25)
    return rb.scan_l(params, 1.0, l_grid, rb.SolveOptions(), grid=grid128, warm=True)


@pytest.fixture(scope="session")
def scan_curve_fine(grid128, params):
    """e(1, l) over l = 0 : 0.125 : 2, for the grid-refinement check."""
    l_grid = np.arange(0.0, 2.0 + 1e-9, 0.125)
    return rb.scan_l(params, 1.0, l_grid, rb.SolveOptions(), grid=grid128, warm=True)


@pytest.fixture(scope="session")
def mass_only_runs(grid128, params):
    """Rotating-frame ground states for Omega in {0, 0.5, 1}."""
    return {
        Om: rb.minimize_mass_only(params, 1.0, Om, rb.SolveOptions(), grid=grid128)
        for Om in (0.0, 0.5, 1.0)
    }
