import numpy as np
import pytest

from maxcloak.errors import DomainError, UnsupportedRegionError
from maxcloak.identities import (Annulus, Ball, SurfaceData, energy_identity_residual,
                                 morawetz_residual, sample_surface, single_mode, standard_suite,
                                 stratton_chu_check, stratton_chu_reconstruct, wave_evaluator,
                                 zero_surface)
from maxcloak.mie import RadialLayeredMedium, solve_source
from maxcloak.sources import ShellCurrent

K = 1.0
X = np.array([[2.0, 0.0, 0.0], [0.0, 1.5, 1.2], [-1.0, -1.0, 1.3]])


def _mode(pol, kind, n=1, index=1):
    c = single_mode(n, index, pol, K, kind)
    return lambda p: c.field(p, omega=K)


# --- Stratton-Chu -------------------------------------------------------------------

@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_stratton_chu_outgoing(pol):
    assert stratton_chu_check(_mode(pol, "outgoing"), K, X).residual < 1e-8


def test_stratton_chu_flags_regular_wave():
    rep = stratton_chu_check(_mode("TE", "regular", 2, 4), K, X)
    assert rep.residual > 0.1
    assert not rep.passed(1e-8)


def test_stratton_chu_zero_data():
    out = stratton_chu_reconstruct(zero_surface(), K, X)
    assert np.all(out == 0)


def test_stratton_chu_linear_in_data():
    a = sample_surface(_mode("TE", "outgoing"))
    b = sample_surface(_mode("TM", "outgoing", 2, 6))
    mix = SurfaceData(a.points, a.normals, a.weights, 2 * a.E_cross_nu + 1j * b.E_cross_nu,
                      2 * a.H_cross_nu + 1j * b.H_cross_nu, 2 * a.E_dot_nu + 1j * b.E_dot_nu,
                      a.radius, a.center)
    lhs = stratton_chu_reconstruct(mix, K, X)
    rhs = 2 * stratton_chu_reconstruct(a, K, X) + 1j * stratton_chu_reconstruct(b, K, X)
    assert np.abs(lhs - rhs).max() < 1e-13 * np.abs(rhs).max()


def test_stratton_chu_on_sphere_rejected():
    with pytest.raises(DomainError):
        stratton_chu_reconstruct(zero_surface(), K, [0.0, 1.0, 0.0])


# --- multiplier identity ----------------------------------------------------------------

def test_morawetz_outgoing_wave():
    u = wave_evaluator(single_mode(1, 1, "TE", K, "outgoing"))
    assert morawetz_residual(u, None, K, Ball(1.0, (3.0, 0.0, 0.0))).residual < 1e-6


def test_morawetz_regular_wave():
    u = wave_evaluator(single_mode(2, 4, "TM", K, "regular"))
    assert morawetz_residual(u, None, K, Ball(1.0)).residual < 1e-6


def _gaussian_vortex(omega):
    """``u = exp(-r^2/2) (-y, x, 0)`` with its curl and ``j = curl curl u - omega^2 u``."""

    def u(p):
        g = np.exp(-0.5 * np.sum(p * p, -1))[:, None]
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        v = np.stack([-y, x, np.zeros_like(x)], -1)
        curl = np.stack([x * z, y * z, 2 - x * x - y * y], -1)
        return g * v, g * curl

    def j(p):
        r2 = np.sum(p * p, -1)[:, None]
        U, _ = u(p)
        return (5 - r2 - omega**2) * U

    return u, j


def test_morawetz_with_source():
    omega = 0.8
    u, j = _gaussian_vortex(omega)
    rep = morawetz_residual(u, j, omega, Ball(1.5, (0.2, -0.1, 0.3)), order=32)
    assert rep.terms["source"] != 0.0
    assert rep.residual < 1e-6


def test_morawetz_missing_source_detected():
    u, _ = _gaussian_vortex(0.8)
    assert morawetz_residual(u, None, 0.8, Ball(1.5, (0.2, -0.1, 0.3)), order=32).residual > 1e-3


def test_morawetz_homogeneity():
    c = single_mode(2, 4, "TM", K, "regular")
    base = morawetz_residual(wave_evaluator(c), None, K, Ball(1.0))
    big = morawetz_residual(wave_evaluator(c.scaled(3.0)), None, K, Ball(1.0))
    assert big.lhs == pytest.approx(9 * base.lhs, rel=1e-13)
    assert big.rhs == pytest.approx(9 * base.rhs, rel=1e-13)
    assert big.residual == pytest.approx(base.residual, rel=1e-6, abs=1e-15)


def test_morawetz_needs_convex_domain():
    with pytest.raises(UnsupportedRegionError):
        morawetz_residual(wave_evaluator(single_mode(1, 1, "TE", K, "regular")), None, K,
                          Annulus(1.0, 2.0))


def test_residuals_shrink_under_refinement():
    u = wave_evaluator(single_mode(1, 1, "TE", K, "outgoing"))
    mor = [morawetz_residual(u, None, K, Ball(1.0, (3.0, 0.0, 0.0)), o).residual for o in (4, 6, 8, 12)]
    sc = [stratton_chu_check(_mode("TE", "outgoing"), K, X[:1], order=o).residual for o in (4, 6, 8, 12)]
    for seq in (mor, sc):
        assert all(b < a for a, b in zip(seq, seq[1:]))


# --- energy identity ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def paper_solution():
    return solve_source(RadialLayeredMedium.paper_inclusion(0.1), ShellCurrent(), 1.0)


def test_energy_identity_paper_medium(paper_solution):
    rep = energy_identity_residual(paper_solution, R=10.0)
    assert rep.terms["absorbed"] > 0
    assert rep.residual < 1e-5


def test_energy_identity_radius_doubling(paper_solution):
    r10 = energy_identity_residual(paper_solution, R=10.0).residual
    r20 = energy_identity_residual(paper_solution, R=20.0).residual
    assert r20 <= max(1.1 * r10, 1e-10)


def test_energy_identity_lossless():
    med = RadialLayeredMedium((0.05, 0.1), (2.0, 1.5), (1.0, 3.0), (0.0, 0.0))
    rep = energy_identity_residual(solve_source(med, ShellCurrent(), 1.0), R=10.0)
    assert rep.terms["absorbed"] == 0.0
    assert rep.residual < 1e-6


# --- suite ------------------------------------------------------------------------------------

def test_standard_suite():
    reps = standard_suite()
    assert len(reps) == 5
    assert all(r.passed(1e-5) for r in reps)
    reps = standard_suite(controls=True)
    ctrl = [r for r in reps if r.meta.get("expect") == "mismatch"]
    assert len(ctrl) == 1 and not ctrl[0].passed(1e-2)
