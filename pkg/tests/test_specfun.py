from math import factorial

import mpmath
import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fd_curl, fd_div, random_points
from maxcloak.errors import DomainError, InvalidParameterError
from maxcloak.specfun import (ModalCoefficients, SphericalWaveIndex, green_gradient, green_scalar,
                              mode_degrees, mode_index, n_modes, riccati, scalar_harmonics,
                              spherical_bessel, vector_harmonics, vector_wave)


# --- radial functions ------------------------------------------------------

def test_j0_closed_form():
    f, _ = spherical_bessel("j", 0, 1.0)
    assert abs(f[0] - np.sin(1.0)) < 1e-13


def test_wronskian_example():
    x = 2.7
    j, dj = spherical_bessel("j", 5, x)
    y, dy = spherical_bessel("y", 5, x)
    assert abs(j[5] * dy[5] - dj[5] * y[5] - 1 / x**2) < 1e-12


@pytest.mark.parametrize("x", [0.1, 0.7, 3.0, 17.0, 100.0])
def test_wronskian_all_orders(x):
    j, dj = spherical_bessel("j", 40, x)
    y, dy = spherical_bessel("y", 40, x)
    w = (j * dy - dj * y) * x**2
    np.testing.assert_allclose(w.real, 1.0, rtol=1e-12)


def test_hankel_asymptotics():
    x, n = 500.0, 3
    h, _ = spherical_bessel("h1", n, x)
    lead = (-1j) ** (n + 1) * np.exp(1j * x) / x
    # the leading term is off by the first correction n(n+1)/(2x)
    assert abs(h[n] - lead) / abs(lead) < 1.1 * n * (n + 1) / (2 * x)
    # the terminating asymptotic series is exact
    series = sum(1j**k * factorial(n + k) / (factorial(k) * factorial(n - k) * (2 * x) ** k)
                 for k in range(n + 1))
    assert abs(h[n] - lead * series) / abs(lead) < 1e-13


@pytest.mark.parametrize("kind,ref", [("j", sp.spherical_jn), ("y", sp.spherical_yn)])
@pytest.mark.parametrize("x", [0.05, 0.9, 4.2, 33.0])
def test_against_scipy_real(kind, ref, x):
    f, d = spherical_bessel(kind, 30, x)
    n = np.arange(31)
    np.testing.assert_allclose(f.real, ref(n, x), rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(d.real, ref(n, x, derivative=True), rtol=1e-11, atol=1e-300)


@pytest.mark.parametrize("z", [0.3 + 0.2j, 2.0 + 1.5j, 5.0 + 5.0j, 10.0 + 30.0j])
def test_against_mpmath_complex(z):
    f, _ = spherical_bessel("j", 20, z)
    h, _ = spherical_bessel("h1", 20, z)
    with mpmath.workdps(40):
        pre = mpmath.sqrt(mpmath.pi / (2 * mpmath.mpc(z)))
        for n in (0, 1, 5, 12, 20):
            jn = complex(pre * mpmath.besselj(n + 0.5, z))
            hn = complex(pre * mpmath.hankel1(n + 0.5, z))
            assert abs(f[n] - jn) <= 1e-11 * abs(jn)
            assert abs(h[n] - hn) <= 1e-11 * abs(hn)


def test_regular_at_origin():
    f, d = spherical_bessel("j", 4, 0.0)
    np.testing.assert_allclose(f, [1, 0, 0, 0, 0])
    assert d[1] == pytest.approx(1 / 3)


@pytest.mark.parametrize("kind", ["y", "h1"])
def test_singular_kinds_at_zero(kind):
    with pytest.raises(DomainError):
        spherical_bessel(kind, 3, 0.0)


def test_cap_enforced():
    with pytest.raises(InvalidParameterError):
        spherical_bessel("j", 61, 1.0)
    with pytest.raises(InvalidParameterError):
        spherical_bessel("q", 3, 1.0)


def test_riccati_derivative_by_differences():
    z = 1.7
    psi, dpsi = riccati("j", 6, z)
    h = 1e-6
    fd = (riccati("j", 6, z + h)[0] - riccati("j", 6, z - h)[0]) / (2 * h)
    np.testing.assert_allclose(dpsi, fd, rtol=1e-8)


# --- angular functions --------------------------------------------------------

def test_mode_indexing():
    assert n_modes(3) == 15
    nl, ml = mode_degrees(3)
    for l, (n, m) in enumerate(zip(nl, ml)):
        assert mode_index(n, m) == l


def test_harmonics_against_scipy():
    theta = np.array([0.3, 1.1, 2.5])
    phi = np.array([0.2, -1.0, 2.9])
    Y, _, _ = scalar_harmonics(theta, phi, 5)
    nl, ml = mode_degrees(5)
    ref = sp.sph_harm_y(nl[None, :], ml[None, :], theta[:, None], phi[:, None])
    np.testing.assert_allclose(Y, ref, atol=1e-13)


def test_vector_harmonics_orthonormal():
    from maxcloak.quadrature import sphere_rule

    rule = sphere_rule(12)
    d = rule.directions
    theta = np.arccos(np.clip(d[:, 2], -1, 1))
    phi = np.arctan2(d[:, 1], d[:, 0])
    C, B, P = vector_harmonics(theta, phi, 4)
    nl, _ = mode_degrees(4)
    norm = nl * (nl + 1)
    for X, scale in ((C, norm), (B, norm), (P, np.ones_like(norm))):
        G = np.einsum("q,qai,qbi->ab", rule.weights, X.conj(), X)
        np.testing.assert_allclose(G, np.diag(scale), atol=1e-12)
    cross = np.einsum("q,qai,qbi->ab", rule.weights, C.conj(), B)
    assert np.abs(cross).max() < 1e-12


# --- vector waves -----------------------------------------------------------------

WAVES = [SphericalWaveIndex(1, 0, "TE", "regular"), SphericalWaveIndex(2, -1, "TM", "regular"),
         SphericalWaveIndex(3, 2, "TE", "outgoing"), SphericalWaveIndex(2, 1, "TM", "outgoing")]


@pytest.mark.parametrize("idx", WAVES)
def test_vector_wave_divergence_free(idx):
    k = 1.3
    for x in random_points(50, 1.0, 3.0, seed=idx.n):
        div = fd_div(lambda p: vector_wave(idx, k, p)[0], x, h=1e-4)
        E = vector_wave(idx, k, x)[0]
        assert abs(div) < 1e-6 * max(1.0, np.linalg.norm(E))


@pytest.mark.parametrize("idx", WAVES)
def test_vector_wave_curl_consistency(idx):
    k, mu = 1.3, 2.0
    omega = k / np.sqrt(mu)
    for x in random_points(5, 0.5, 3.0, seed=4):
        curl = fd_curl(lambda p: vector_wave(idx, k, p, omega, mu)[0], x, h=1e-4)
        H = vector_wave(idx, k, x, omega, mu)[1]
        rhs = 1j * omega * mu * H
        assert np.linalg.norm(curl - rhs) <= 1e-5 * np.linalg.norm(rhs)


def test_outgoing_wave_radiation_condition():
    idx = SphericalWaveIndex(2, 1, "TM", "outgoing")
    d = np.array([0.36, 0.48, 0.8])

    def residual(R):
        E, H = vector_wave(idx, 1.0, R * d)
        return np.linalg.norm(np.cross(H, R * d) - R * E)

    r50, r500 = residual(50.0), residual(500.0)
    assert r50 * 50 <= 10 * r500 * 500
    assert r500 < r50


def test_outgoing_wave_at_origin_raises():
    with pytest.raises(DomainError):
        vector_wave(SphericalWaveIndex(1, 0, "TE", "outgoing"), 1.0, np.zeros(3))


def test_regular_wave_smooth_at_origin():
    E, H = vector_wave(SphericalWaveIndex(1, 0, "TM", "regular"), 1.0, np.zeros(3))
    assert np.all(np.isfinite(E)) and np.all(np.isfinite(H))
    assert np.linalg.norm(E) > 0


@pytest.mark.parametrize("n,m", [(0, 0), (2, 3)])
def test_bad_index_rejected(n, m):
    with pytest.raises(InvalidParameterError):
        SphericalWaveIndex(n, m)


# --- Green kernel ----------------------------------------------------------------------

def test_green_values():
    x, y = np.array([1.0, 0, 0]), np.zeros(3)
    assert green_scalar(0.0, x, y) == pytest.approx(1 / (4 * np.pi))
    assert green_scalar(1.0, x, y) == pytest.approx(np.exp(1j) / (4 * np.pi))


def test_green_singular():
    with pytest.raises(DomainError):
        green_scalar(1.0, np.ones(3), np.ones(3))
    with pytest.raises(InvalidParameterError):
        green_scalar(1.0 - 0.1j, np.ones(3), np.zeros(3))


def test_green_helmholtz_residual():
    k = 1.4
    y = np.zeros(3)
    x = np.array([0.8, -0.5, 0.6])
    h = 1e-3
    lap = sum((green_scalar(k, x + h * e, y) - 2 * green_scalar(k, x, y) + green_scalar(k, x - h * e, y)) / h**2
              for e in np.eye(3))
    assert abs(lap + k**2 * green_scalar(k, x, y)) < 1e-3


def test_green_gradient_by_differences():
    k, y = 0.9, np.array([0.1, 0.2, -0.3])
    x = np.array([1.0, 0.4, 0.5])
    h = 1e-6
    fd = np.array([(green_scalar(k, x + h * e, y) - green_scalar(k, x - h * e, y)) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(green_gradient(k, x, y), fd, rtol=1e-7)


# --- coefficient container ----------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.floats(0.1, 5.0))
def test_field_linear_in_coefficients(n_max, k):
    rng = np.random.default_rng(n_max)
    L = n_modes(n_max)
    a = ModalCoefficients(rng.normal(size=L) + 1j * rng.normal(size=L), rng.normal(size=L), k)
    b = ModalCoefficients(rng.normal(size=L), 1j * rng.normal(size=L), k)
    pts = random_points(4, 0.2, 2.0, seed=n_max)
    Ea, _ = a.field(pts)
    Eb, _ = b.field(pts)
    Es, _ = (a + b.scaled(2.0)).field(pts)
    np.testing.assert_allclose(Es, Ea + 2 * Eb, rtol=1e-12, atol=1e-12)


def test_truncation_and_trim():
    c = ModalCoefficients.zeros(5, 1.0)
    c.te[mode_index(2, 1)] = 1.0
    assert c.trimmed().n_max == 2
    assert c.truncated(8).n_max == 8
    assert c.degree_magnitudes()[1] == 1.0
