import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import spherical_jn, spherical_yn

from maxcloak.errors import InvalidParameterError, QuadratureError
from maxcloak.mie import RadialLayeredMedium, eval_field, solve_source
from maxcloak.sources import PatchCurrent, ShellCurrent
from maxcloak.specfun import SphericalWaveIndex, vector_wave
from maxcloak.visibility import (_norm_at_order, annulus_l2_norm, fit_slope, omega_regime_report,
                                 regime_of, rho_scaling_sweep, spread, vacuum_medium, visibility)


# --- annulus norm -----------------------------------------------------------------

def test_constant_field():
    c = np.array([1.0 + 2.0j, -0.5, 0.25j])
    V = annulus_l2_norm(lambda p: np.broadcast_to(c, p.shape))
    exact = np.linalg.norm(c) * np.sqrt(4 * np.pi * (27 - 8) / 3)
    assert V == pytest.approx(exact, rel=1e-10)


def test_zero_field():
    assert annulus_l2_norm(lambda p: np.zeros(p.shape)) == 0.0


def _h1(n, x):
    return spherical_jn(n, x) + 1j * spherical_yn(n, x)


def _dh1(n, x):
    return spherical_jn(n, x, derivative=True) + 1j * spherical_yn(n, x, derivative=True)


@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_single_outgoing_wave_radial_oracle(pol):
    k = 1.3
    idx = SphericalWaveIndex(1, 0, pol, "outgoing")
    V = annulus_l2_norm(lambda p: vector_wave(idx, k, p), tol=1e-10, max_order=128)
    # |M|^2 and |N|^2 integrated over the unit sphere for n = 1 (n(n+1) = 2)
    m2 = lambda r: 2 * abs(_h1(1, k * r)) ** 2
    n2 = lambda r: 2 * (2 * abs(_h1(1, k * r) / (k * r)) ** 2
                        + abs((_h1(1, k * r) + k * r * _dh1(1, k * r)) / (k * r)) ** 2)
    # E = M, H = (k / i omega) N with omega = k in vacuum, or the reverse for TM
    exact = np.sqrt(quad(lambda r: (m2(r) + n2(r)) * r * r, 2.0, 3.0, epsabs=0, epsrel=1e-13)[0])
    assert V == pytest.approx(exact, rel=1e-8)


def test_annulus_bounds_checked():
    with pytest.raises(InvalidParameterError):
        annulus_l2_norm(lambda p: np.zeros(p.shape), 1.5, 3.0)


def test_nonconvergent_quadrature_reports_achieved():
    wild = lambda p: np.cos(40 * p[:, :1] * p[:, 1:2]) * np.ones((1, 3))
    with pytest.raises(QuadratureError) as info:
        annulus_l2_norm(wild, tol=1e-14, max_order=16)
    assert info.value.achieved > 1e-14


# --- records ----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def patch():
    return PatchCurrent()


def test_record_self_consistency(patch):
    sol = solve_source(RadialLayeredMedium.paper_inclusion(0.1), patch, 1.0)
    rec = visibility(sol)
    assert rec.V > 0
    assert rec.self_consistency < 1e-6
    assert rec.n_max == sol.n_max


def test_two_algebraic_paths(patch):
    sol = solve_source(RadialLayeredMedium.paper_inclusion(0.1), patch, 1.0)
    rec = visibility(sol)

    def total_minus_free(p):
        E, H = eval_field(sol, p)
        Ei, Hi = sol.incident.field(p, sol.omega)
        return E - Ei, H - Hi

    V2 = _norm_at_order(total_minus_free, 2.0, 3.0, rec.quad_order)
    assert V2 == pytest.approx(rec.V, rel=1e-10)


def test_rotation_invariance(patch):
    med = RadialLayeredMedium.paper_inclusion(0.1)
    V0 = visibility(solve_source(med, patch, 1.0), tol=1e-10).V
    V1 = visibility(solve_source(med, patch.rotated_z(0.9), 1.0), tol=1e-10).V
    assert V1 == pytest.approx(V0, rel=1e-8)


def test_linear_in_amplitude():
    med = RadialLayeredMedium.paper_inclusion(0.1)
    V1 = visibility(solve_source(med, ShellCurrent(), 1.0)).V
    V3 = visibility(solve_source(med, ShellCurrent(amplitude=3.0), 1.0)).V
    assert V3 == pytest.approx(3 * V1, rel=1e-10)


# --- sweeps --------------------------------------------------------------------------------

def test_rho_sweep_cubic():
    res = rho_scaling_sweep(1.0, (0.1, 0.05, 0.025))
    assert 2.7 <= res.slope <= 3.3
    assert res.ratios[-1] == pytest.approx(8.0, rel=0.15)
    assert not res.degenerate


def test_vacuum_sweep_is_degenerate():
    res = rho_scaling_sweep(1.0, (0.1, 0.05, 0.025), medium_factory=vacuum_medium)
    assert res.degenerate
    assert res.slope is None
    assert all(r.V <= 1e-12 * r.incident_scale for r in res.records)


@pytest.mark.parametrize("rhos", [(0.1, 0.05), (0.1, 0.05, 0.5), (0.05, 0.1, 0.025)])
def test_rho_sweep_arguments(rhos):
    with pytest.raises(InvalidParameterError):
        rho_scaling_sweep(1.0, rhos)


def test_fit_slope_exact_power():
    rhos = np.array([0.1, 0.05, 0.025])
    slope, resid = fit_slope(rhos, 7 * rhos**3, [1e-8] * 3)
    assert slope == pytest.approx(3.0, abs=1e-10)
    assert resid < 1e-10


def test_low_regime_bounded_for_patch_source(patch):
    rows = omega_regime_report(0.05, (0.1, 0.2, 0.5), source=patch)
    assert spread([r.low for r in rows]) < 50
    assert all(r.regime == "low" for r in rows)


def test_middle_regime_envelope():
    rows = omega_regime_report(0.05, (2.0, 4.0, 8.0))
    assert all(r.middle <= 10 * rows[0].middle for r in rows)


def test_high_regime_column_finite():
    rows = [omega_regime_report(rho, (2.0 / rho,))[0] for rho in (0.1, 0.05)]
    for r in rows:
        assert r.regime == "high"
        assert np.isfinite(r.high) and r.high > 0


def test_regime_labels():
    assert [regime_of(w, 0.5, 2.0) for w in (0.1, 1.0, 3.0)] == ["low", "middle", "high"]


def test_regime_report_rejects_nonpositive_frequency():
    with pytest.raises(InvalidParameterError):
        omega_regime_report(0.05, (0.0, 1.0))
