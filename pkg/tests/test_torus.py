import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowlab import integrate, make_torus
from flowlab.torus import d_z, d_zbar, diff_x, diff_y, lambda_contract, periodic_pad


@pytest.mark.parametrize("tau, n, vol", [(1j, 64, 1.0), (2j, 32, 2.0), (0.3 + 1.2j, 16, 1.2)])
def test_make_torus_volume(tau, n, vol):
    dom = make_torus(tau, n)
    assert dom.vol == pytest.approx(vol, rel=1e-12)
    assert integrate(np.ones((n, n)), dom).real == pytest.approx(vol, rel=1e-12)


@pytest.mark.parametrize("tau, n", [(1j, 7), (1j, 6), (1j, 0), (1 + 0j, 16), (-1j, 16)])
def test_make_torus_rejects(tau, n):
    with pytest.raises(ValueError):
        make_torus(tau, n)


def test_grid_points_are_centered():
    dom = make_torus(1j, 8)
    x, y = dom.lattice_coords()
    assert x[0, 0] == -0.5 and y[0, 0] == -0.5
    assert x[0, 1] - x[0, 0] == pytest.approx(1 / 8)
    assert np.allclose(dom.points()[3, 5], x[3, 5] + 1j * y[3, 5])


def test_integrate_fourier_mode_vanishes():
    dom = make_torus(1j, 64)
    x, _ = dom.lattice_coords()
    assert abs(integrate(np.sin(2 * np.pi * x), dom)) < 1e-12


def test_integrate_shape_mismatch():
    with pytest.raises(ValueError):
        integrate(np.ones((8, 8)), make_torus(1j, 16))


def _dz_error(n):
    dom = make_torus(1j, n)
    x, _ = dom.lattice_coords()
    f = np.exp(2j * np.pi * x)
    return np.max(np.abs(d_z(f, dom) - np.pi * 1j * f))


def test_dz_plane_wave():
    assert _dz_error(64) < 1e-5
    order = np.log2(_dz_error(32) / _dz_error(64))
    assert order >= 3.7


def test_dzbar_diagonal_wave():
    dom = make_torus(1j, 64)
    x, y = dom.lattice_coords()
    f = np.exp(2j * np.pi * (x + y))
    # (d_x + i d_y) / 2 applied to the wave gives (pi i - pi) f
    assert np.max(np.abs(d_zbar(f, dom) - (np.pi * 1j - np.pi) * f)) < 1e-4


def test_derivatives_kill_constants_exactly():
    dom = make_torus(0.2 + 1.1j, 16)
    f = np.full((16, 16), 3.7 - 1.1j)
    assert np.max(np.abs(d_z(f, dom))) == 0.0
    assert np.max(np.abs(d_zbar(f, dom))) == 0.0


def test_sheared_torus_wirtinger():
    # f = exp(2 pi i x) with z = x + tau y: x = (tau_bar z - tau zbar) / (tau_bar - tau)
    tau = 0.3 + 1.2j
    dom = make_torus(tau, 64)
    x, _ = dom.lattice_coords()
    f = np.exp(2j * np.pi * x)
    dxdz = np.conj(tau) / (np.conj(tau) - tau)
    assert np.max(np.abs(d_z(f, dom) - 2j * np.pi * dxdz * f)) < 1e-4


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_discrete_stokes(seed):
    dom = make_torus(1j, 16)
    f = np.random.default_rng(seed).standard_normal((16, 16))
    fp = periodic_pad(f, 2)
    assert abs(integrate(diff_x(fp, dom.spacing), dom)) < 1e-10
    assert abs(integrate(diff_y(fp, dom.spacing), dom)) < 1e-10


def test_lambda_contract():
    assert lambda_contract(0.5j) == pytest.approx(1.0)
    assert lambda_contract(0.0) == 0
    omega = np.full((8, 8), 0.5j)
    assert np.all(lambda_contract(omega) == 1.0)
    # K = i Lambda F = 2 F_zzbar, so constant curvature 2 pi d needs F_zzbar = pi d
    d = 3
    assert (1j * lambda_contract(np.pi * d)).real == pytest.approx(2 * np.pi * d)
