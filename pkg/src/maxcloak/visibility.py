"""Degree-of-visibility metrics: annulus norms of the difference field and sweeps."""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError, QuadratureError
from .mie import RadialLayeredMedium, difference_field, solve_source
from .quadrature import shell_rule, sphere_rule
from .specfun import N_MAX_CAP
from .sources import ShellCurrent


def _energy_density(values):
    if isinstance(values, tuple):
        return sum(np.sum(np.abs(v) ** 2, axis=-1) for v in values)
    return np.sum(np.abs(values) ** 2, axis=-1)


def _norm_at_order(evaluator, R_in, R_out, order):
    q = shell_rule(R_in, R_out, order)
    return math.sqrt(float(np.sum(q.weights * _energy_density(evaluator(q.points)))))


def annulus_l2_norm(evaluator, R_in=2.0, R_out=3.0, order=8, tol=1e-6, max_order=64,
                    return_info=False):
    """L2 norm of ``(|E|^2 + |H|^2)^(1/2)`` over ``R_in < |x| < R_out``.

    ``evaluator(points)`` returns ``(E, H)`` or a single (N, 3) array.  The
    rule (radial Gauss-Legendre times a product sphere rule) is doubled
    until the value changes by less than ``tol`` relative.

    Returns the norm, or ``(norm, order, relative_change)`` with
    ``return_info``.
    """
    if not (2.0 <= R_in < R_out):
        raise InvalidParameterError("need 2 <= R_in < R_out")
    prev = _norm_at_order(evaluator, R_in, R_out, order)
    change = math.inf
    while 2 * order <= max_order:
        order *= 2
        cur = _norm_at_order(evaluator, R_in, R_out, order)
        change = abs(cur - prev) / cur if cur > 0 else abs(cur - prev)
        prev = cur
        if change < tol:
            break
    if not change < tol:
        raise QuadratureError(f"annulus quadrature reached {change:.2e}, wanted {tol:.0e}",
                              achieved=change)
    if return_info:
        return prev, order, change
    return prev


def incident_scale(solution, R_in=2.0, R_out=3.0, order=12):
    """Rough size of the incident field over the annulus.

    The incident series is evaluated on the sphere ``|x| = R_in`` and its
    mean square is spread over the annulus volume; used only as a reference
    scale for degenerate (no-scattering) detection.
    """
    sph = sphere_rule(order)
    pts = R_in * sph.directions
    E, H = solution.incident.field(pts, solution.omega)
    mean_sq = float(np.sum(sph.weights * _energy_density((E, H)))) / (4 * np.pi)
    vol = 4 * np.pi * (R_out**3 - R_in**3) / 3
    return math.sqrt(mean_sq * vol)


@dataclass
class VisibilityRecord:
    rho: float
    omega: float
    V: float
    quad_order: int
    n_max: int
    quad_change: float
    trunc_change: float
    incident_scale: float
    cond_max: float

    @property
    def self_consistency(self):
        return max(self.quad_change, self.trunc_change)

    def as_row(self):
        return asdict(self)


def visibility(solution, R_in=2.0, R_out=3.0, tol=1e-6):
    """Visibility record of a solved small-inclusion problem."""
    diff = difference_field(solution, solution.incident)
    V, order, change = annulus_l2_norm(diff, R_in, R_out, tol=tol, return_info=True)
    # truncation check: drop the upper half of the degrees
    half = replace(solution, scattered=solution.scattered.truncated(max(1, solution.n_max // 2)))
    V_half = _norm_at_order(difference_field(half, half.incident), R_in, R_out, order)
    trunc = abs(V - V_half) / V if V > 0 else abs(V - V_half)
    rho = solution.medium.outer_radius
    return VisibilityRecord(rho, solution.omega, V, order, solution.n_max, change, trunc,
                            incident_scale(solution, R_in, R_out), float(solution.condition.max()))


def default_medium(rho, eps_core=1.0, mu_core=1.0):
    return RadialLayeredMedium.paper_inclusion(rho, eps_core, mu_core)


def vacuum_medium(rho, eps_core=1.0, mu_core=1.0):
    return RadialLayeredMedium.vacuum((rho / 2, rho))


@dataclass(frozen=True)
class _Job:
    rho: float
    omega: float
    source: object
    medium_factory: object
    eps_core: float
    mu_core: float
    R_in: float
    R_out: float
    tol: float
    cap: int = N_MAX_CAP


def _run_job(job):
    med = job.medium_factory(job.rho, job.eps_core, job.mu_core)
    sol = solve_source(med, job.source, job.omega, cap=job.cap)
    return visibility(sol, job.R_in, job.R_out, job.tol)


def _map(jobs, workers):
    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_job, jobs))


@dataclass
class RhoSweep:
    omega: float
    records: list
    slope: float = None
    slope_residual: float = None
    ratios: list = field(default_factory=list)
    degenerate: bool = False


DEGENERATE_LEVEL = 1e-12


def fit_slope(rhos, values, rel_errors):
    """Weighted least-squares slope of ``log V`` against ``log rho``.

    Weights are inverse standard deviations taken from the relative
    self-consistency of each V (floored at 1e-12).
    """
    x = np.log(np.asarray(rhos, float))
    y = np.log(np.asarray(values, float))
    sig = np.maximum(np.asarray(rel_errors, float), 1e-12)
    coef, res, *_ = np.polyfit(x, y, 1, w=1.0 / sig, full=True)
    resid = float(np.sqrt(np.mean((np.polyval(coef, x) - y) ** 2)))
    return float(coef[0]), resid


def rho_scaling_sweep(omega, rhos, R=3.0, source=None, medium_factory=default_medium,
                      eps_core=1.0, mu_core=1.0, tol=1e-6, workers=1, cap=N_MAX_CAP):
    """V for each rho at fixed omega, with the fitted exponent of V in rho.

    A sweep where every V is below ``1e-12`` of the incident scale is
    flagged ``degenerate`` and carries no slope.
    """
    rhos = [float(r) for r in rhos]
    if len(rhos) < 3:
        raise InvalidParameterError("need at least three values of rho")
    if any(r >= 0.3 or r <= 0 for r in rhos):
        raise InvalidParameterError("rho values must lie in (0, 0.3)")
    if any(b >= a for a, b in zip(rhos, rhos[1:])):
        raise InvalidParameterError("rho values must be strictly decreasing")
    source = source or ShellCurrent()
    jobs = [_Job(r, float(omega), source, medium_factory, eps_core, mu_core, 2.0, R, tol, cap)
            for r in rhos]
    records = _map(jobs, workers)
    out = RhoSweep(float(omega), records)
    if all(rec.V <= DEGENERATE_LEVEL * rec.incident_scale for rec in records):
        out.degenerate = True
        return out
    out.slope, out.slope_residual = fit_slope(rhos, [r.V for r in records],
                                              [r.self_consistency for r in records])
    out.ratios = [a.V / b.V for a, b in zip(records, records[1:])]
    return out


@dataclass
class RegimeRow:
    omega: float
    V: float
    low: float
    middle: float
    high: float
    regime: str
    record: VisibilityRecord


def regime_of(omega, omega0=1.0, omega1=1.0):
    if omega <= omega0:
        return "low"
    if omega <= omega1:
        return "middle"
    return "high"


def omega_regime_report(rho, omegas, R=3.0, source=None, medium_factory=default_medium,
                        eps_core=1.0, mu_core=1.0, omega0=1.0, omega1=1.0, tol=1e-6, workers=1,
                        cap=N_MAX_CAP):
    """Normalized visibility columns for the three frequency regimes.

    ``low = V omega / rho^3``, ``middle = V / (omega^3 rho^3)`` and
    ``high = V / (omega^(17/2) rho^3)``; each is an upper-bound shape, so
    only boundedness over its regime is meaningful.
    """
    if any(w <= 0 for w in omegas):
        raise InvalidParameterError("frequencies must be positive")
    source = source or ShellCurrent()
    jobs = [_Job(float(rho), float(w), source, medium_factory, eps_core, mu_core, 2.0, R, tol, cap)
            for w in omegas]
    records = _map(jobs, workers)
    rows = []
    r3 = rho**3
    for w, rec in zip(omegas, records):
        rows.append(RegimeRow(float(w), rec.V, rec.V * w / r3, rec.V / (w**3 * r3),
                              rec.V / (w**8.5 * r3), regime_of(w, omega0, omega1), rec))
    return rows


def spread(values):
    """max/min of a list of positive numbers."""
    v = np.asarray(values, float)
    return float(v.max() / v.min())
