import numpy as np
import pytest

import rotbound as rb

from conftest import gaussian_field, smooth_random_field


def test_make_grid_spacing():
    g = rb.make_grid(16, 8.0)
    assert g.spacing == 1.0
    assert g.x[0] == -7.5
    assert rb.make_grid(128, 8.0).spacing == 0.125


@pytest.mark.parametrize("n, extent", [(15, 8.0), (14, 8.0), (16, 0.0), (16, -1.0)])
def test_make_grid_rejects(n, extent):
    with pytest.raises(ValueError):
        rb.make_grid(n, extent)


def test_inner_product_gaussian(grid256):
    f = gaussian_field(grid256)
    val = rb.inner_product(f, f)
    assert val.imag == 0.0
    assert abs(val.real - np.pi) < 1e-8


def test_inner_product_hermitian(grid64):
    f = smooth_random_field(grid64, seed=1)
    g = smooth_random_field(grid64, seed=2)
    assert rb.inner_product(f, g) == pytest.approx(np.conj(rb.inner_product(g, f)))


def test_inner_product_grid_mismatch(grid64, grid128):
    with pytest.raises(ValueError):
        rb.inner_product(gaussian_field(grid64), gaussian_field(grid128))


def test_gradient_gaussian_oracle(grid256):
    f = gaussian_field(grid256)
    d1, d2 = rb.gradient_spectral(f)
    expect1 = -grid256.x1 * f.values
    expect2 = -grid256.x2 * f.values
    assert np.max(np.abs(d1.values - expect1)) < 1e-8
    assert np.max(np.abs(d2.values - expect2)) < 1e-8


def test_gradient_zero_field(grid64):
    z = rb.WaveField(grid64, np.zeros((64, 64), dtype=complex))
    d1, d2 = rb.gradient_spectral(z)
    assert not d1.values.any() and not d2.values.any()


def test_gradient_resonant_plane_wave(grid64):
    k0 = 2.0 * np.pi / (2.0 * grid64.extent)
    f = rb.WaveField(grid64, np.exp(1j * k0 * (grid64.x1 + 0 * grid64.x2)))
    d1, _ = rb.gradient_spectral(f)
    assert np.max(np.abs(d1.values - 1j * k0 * f.values)) < 1e-12


def test_apply_lz_eigenmodes(grid256):
    g = grid256
    r = np.sqrt(g.rsq)
    env = np.exp(-g.rsq)
    f1 = rb.WaveField(g, (g.x1 + 1j * g.x2) * env)
    out = rb.apply_Lz(f1)
    assert np.max(np.abs(out.values - f1.values)) / np.max(np.abs(f1.values)) < 1e-8

    radial = rb.WaveField(g, env.astype(complex))
    assert rb.norm(rb.apply_Lz(radial)) < 1e-10

    f2 = rb.WaveField(g, (g.x1 - 1j * g.x2) ** 2 * env)
    out2 = rb.apply_Lz(f2)
    assert np.max(np.abs(out2.values + 2.0 * f2.values)) / np.max(np.abs(f2.values)) < 1e-8


def test_lz_symmetric(grid64):
    f = smooth_random_field(grid64, seed=3)
    val = rb.inner_product(f, rb.apply_Lz(f))
    assert abs(val.imag) < 1e-10 * rb.mass(f)


def test_mass_outside_radius(grid256):
    z = rb.WaveField(grid256, np.zeros((256, 256), dtype=complex))
    assert rb.mass_outside_radius(z, 4.0) == 0.0

    f = gaussian_field(grid256)
    assert rb.mass_outside_radius(f, 6.0) < 1e-14

    ones = rb.WaveField(grid256, np.ones((256, 256), dtype=complex))
    assert rb.mass_outside_radius(ones, grid256.extent / 2) > 0.0


def test_mass_outside_radius_bad_rho(grid64):
    f = gaussian_field(grid64)
    with pytest.raises(ValueError):
        rb.mass_outside_radius(f, 9.0)


def test_reflect_flips_angular_momentum(grid64):
    f = smooth_random_field(grid64, seed=4)
    rf = rb.reflect_first_axis(f)
    assert rb.mass(rf) == pytest.approx(rb.mass(f), rel=1e-14)
    assert rb.angular_momentum(rf) == pytest.approx(-rb.angular_momentum(f), abs=1e-12)


def test_rotate_quarter_mode1(grid64):
    g = grid64
    f = rb.WaveField(g, np.sqrt(g.rsq) * np.exp(1j * g.theta) * np.exp(-g.rsq / 2))
    rot = rb.rotate_quarter(f)
    # +90 degree rotation multiplies angular mode 1 by exp(-i pi/2) = -i
    assert np.max(np.abs(rot.values - (-1j) * f.values)) < 1e-13


def test_checkpoint_roundtrip(tmp_path, grid64):
    f = smooth_random_field(grid64, seed=5)
    path = tmp_path / "field.nlsb"
    rb.write_field(f, path)
    back = rb.read_field(path)
    assert back.grid.n == 64 and back.grid.extent == 8.0
    assert np.array_equal(back.values, f.values)


def test_checkpoint_rejects_bad_magic(tmp_path, grid64):
    path = tmp_path / "bad.nlsb"
    rb.write_field(gaussian_field(grid64), path)
    data = bytearray(path.read_bytes())
    data[:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(ValueError, match="magic"):
        rb.read_field(path)


def test_checkpoint_rejects_bad_version(tmp_path, grid64):
    path = tmp_path / "bad.nlsb"
    rb.write_field(gaussian_field(grid64), path)
    data = bytearray(path.read_bytes())
    data[4] = 9
    path.write_bytes(bytes(data))
    with pytest.raises(ValueError, match="version"):
        rb.read_field(path)
