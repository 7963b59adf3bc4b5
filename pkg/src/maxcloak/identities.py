"""Numerical checks of integral identities satisfied by Maxwell fields.

* Stratton-Chu reconstruction of a radiating exterior field from its traces
  on a sphere.
* The Morawetz-type multiplier identity for ``curl curl u - omega^2 u = j``
  on a convex domain, with multiplier ``(curl conj(u)) x x``.
* The energy identity of the rescaled transmission problem, which balances
  the power absorbed in the lossy shell against interface and far-sphere
  fluxes.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidParameterError, UnsupportedRegionError
from .quadrature import gauss_legendre, sphere_rule


@dataclass
class IdentityReport:
    """Two sides of an identity and their relative residual."""

    name: str
    lhs: float
    rhs: float
    terms: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    error: float = None

    @property
    def residual(self):
        """``|lhs - rhs|`` (or ``error`` for vector-valued sides) over the larger side."""
        err = abs(self.lhs - self.rhs) if self.error is None else self.error
        return err / max(abs(self.lhs), abs(self.rhs), 1e-300)

    def passed(self, tol):
        return self.residual < tol

    def as_row(self):
        return {"identity": self.name, "lhs": self.lhs, "rhs": self.rhs, "residual": self.residual,
                **{f"meta_{k}": v for k, v in self.meta.items()}}


# ---------------------------------------------------------------------------
# sphere sampling

@dataclass(frozen=True)
class SurfaceData:
    """Traces ``E x nu``, ``H x nu`` and ``E . nu`` on a sphere (outward ``nu``)."""

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    E_cross_nu: np.ndarray
    H_cross_nu: np.ndarray
    E_dot_nu: np.ndarray
    radius: float
    center: np.ndarray


def sphere_nodes(radius, order, center=(0.0, 0.0, 0.0)):
    sph = sphere_rule(order)
    nu = sph.directions
    c = np.asarray(center, dtype=float)
    return c + radius * nu, nu, radius**2 * sph.weights


def sample_surface(evaluator, radius=1.0, order=24, center=(0.0, 0.0, 0.0)):
    """Traces of the field ``evaluator(points) -> (E, H)`` on a sphere."""
    pts, nu, w = sphere_nodes(radius, order, center)
    E, H = evaluator(pts)
    return SurfaceData(pts, nu, w, np.cross(E, nu), np.cross(H, nu), np.sum(E * nu, axis=-1),
                       float(radius), np.asarray(center, dtype=float))


def zero_surface(radius=1.0, order=24):
    pts, nu, w = sphere_nodes(radius, order)
    z = np.zeros(pts.shape, complex)
    return SurfaceData(pts, nu, w, z, z.copy(), np.zeros(len(w), complex), float(radius), np.zeros(3))


def stratton_chu_reconstruct(data, k, x, omega=None, mu=1.0):
    """Exterior electric field from sphere traces.

    ``E(x) = int grad_x G x (nu x E) + i omega mu int (nu x H) G - int (nu . E) grad_x G``

    valid for a radiating field outside the sphere.  ``omega`` defaults to
    ``k / sqrt(mu)`` (unit permittivity).
    """
    if omega is None:
        omega = k / np.sqrt(mu)
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    dist = np.linalg.norm(pts - data.center, axis=-1)
    if np.any(dist <= data.radius * (1 + 1e-12)):
        raise DomainError("evaluation point must lie strictly outside the sphere")
    nxE = -data.E_cross_nu
    nxH = -data.H_cross_nu
    out = np.empty(pts.shape, complex)
    for i, p in enumerate(pts):
        d = p - data.points
        R = np.linalg.norm(d, axis=-1)
        G = np.exp(1j * k * R) / (4 * np.pi * R)
        gradG = (G * (1j * k - 1.0 / R) / R)[:, None] * d
        w = data.weights[:, None]
        out[i] = (np.sum(w * np.cross(gradG, nxE), axis=0)
                  + 1j * omega * mu * np.sum(w * nxH * G[:, None], axis=0)
                  - np.sum(w * data.E_dot_nu[:, None] * gradG, axis=0))
    return out[0] if x.ndim == 1 else out


def stratton_chu_check(evaluator, k, x, radius=1.0, order=24, omega=None, mu=1.0):
    """Compare the reconstruction with direct evaluation at points ``x``.

    A large residual flags data that do not come from a radiating field.
    """
    data = sample_surface(evaluator, radius, order)
    rec = stratton_chu_reconstruct(data, k, x, omega, mu)
    direct, _ = evaluator(np.atleast_2d(x))
    rec = np.atleast_2d(rec)
    n_rec = float(np.linalg.norm(rec))
    n_dir = float(np.linalg.norm(direct))
    diff = float(np.linalg.norm(rec - direct))
    return IdentityReport("stratton-chu", n_rec, n_dir, {}, {"order": order, "radius": radius},
                          error=diff)


# ---------------------------------------------------------------------------
# domains and the multiplier identity

@dataclass(frozen=True)
class Ball:
    radius: float
    center: tuple = (0.0, 0.0, 0.0)

    def volume_rule(self, order):
        r, wr = gauss_legendre(order, 0.0, self.radius)
        sph = sphere_rule(order)
        dirs = sph.directions
        pts = np.asarray(self.center, float) + (r[:, None, None] * dirs[None]).reshape(-1, 3)
        w = np.outer(wr * r**2, sph.weights).ravel()
        return pts, w

    def surface_rule(self, order):
        return sphere_nodes(self.radius, order, self.center)


@dataclass(frozen=True)
class Annulus:
    r_in: float
    r_out: float
    center: tuple = (0.0, 0.0, 0.0)


def wave_evaluator(coeffs):
    """``points -> (u, curl u)`` for a modal field with its own wavenumber.

    With ``omega = k`` and unit permeability, ``curl E = i k H``.
    """
    k = coeffs.k

    def evaluate(points):
        E, H = coeffs.field(points, omega=k)
        return E, 1j * k * H

    return evaluate


def morawetz_residual(u, j, omega, domain, order=24):
    """Multiplier identity for ``curl curl u - omega^2 u = j`` on a convex domain.

    With the position vector ``x`` as multiplier weight, the identity reads

        int omega^2 |u|^2 + |curl u|^2
          = int_bd omega^2 (conj(u) x nu).(u x x) + ((curl conj u) x nu).((curl u) x x)
          - int_bd omega^2 (conj(u).nu)(u.x) + (curl conj u . nu)(curl u . x)
          + 2 Re int j . (curl conj u) x x

    ``u(points)`` returns ``(u, curl u)``; ``j(points)`` returns the source or
    ``j`` is None.  The left side is reported as ``lhs`` and the remainder as
    ``rhs``.
    """
    if isinstance(domain, Annulus):
        raise UnsupportedRegionError("the multiplier identity needs a convex domain")
    if not isinstance(domain, Ball):
        raise InvalidParameterError("domain must be a Ball")
    pts, w = domain.volume_rule(order)
    U, CU = u(pts)
    vol = float(np.sum(w * (omega**2 * np.sum(np.abs(U) ** 2, -1) + np.sum(np.abs(CU) ** 2, -1))))
    src = 0.0
    if j is not None:
        Jv = j(pts)
        src = 2 * float(np.real(np.sum(w * np.sum(Jv * np.cross(CU.conj(), pts), -1))))
    bp, nu, bw = domain.surface_rule(order)
    Ub, CUb = u(bp)
    tang = np.sum(bw * (omega**2 * np.sum(np.cross(Ub.conj(), nu) * np.cross(Ub, bp), -1)
                        + np.sum(np.cross(CUb.conj(), nu) * np.cross(CUb, bp), -1)))
    norm = np.sum(bw * (omega**2 * np.sum(Ub.conj() * nu, -1) * np.sum(Ub * bp, -1)
                        + np.sum(CUb.conj() * nu, -1) * np.sum(CUb * bp, -1)))
    rhs = complex(tang - norm) + src
    terms = {"volume": vol, "tangential": complex(tang), "normal": complex(norm), "source": src,
             "imag_boundary": float(np.imag(tang - norm))}
    return IdentityReport("morawetz", vol, rhs, terms, {"order": order})


# ---------------------------------------------------------------------------
# energy identity of the rescaled problem

def _rescaled_fields(solution, rho):
    """Evaluators of the rescaled difference field and the rescaled incident field."""
    from .mie import eval_field

    def total(xt):
        return eval_field(solution, rho * np.atleast_2d(xt))

    def scattered(xt):
        return eval_field(solution, rho * np.atleast_2d(xt), part="scattered")

    def incident(xt):
        return solution.incident.field(rho * np.atleast_2d(xt), solution.omega)

    return total, scattered, incident


def energy_identity_residual(solution, R=10.0, order=32):
    """Energy balance of the rescaled transmission problem.

    In the coordinate ``x~ = x / rho`` (``rho`` the outer radius of the
    medium) the difference field solves a transmission problem whose jumps
    on ``|x~| = 1`` are ``h1 = -E(rho x~) x nu`` and ``h2 = -H(rho x~) x nu``
    with ``(E, H)`` the incident field, and whose conductivity is
    ``rho * sigma``.  Then

        int sigma~ |E~|^2 + Re int_{|x~|=R} (H~ x nu) . conj(E~)
            = Re int_{|x~|=1} h2 . conj(E~_ext) - conj(h1) . H~_int

    ``lhs`` is the left side (absorbed power plus far flux), ``rhs`` the
    interface terms.
    """
    med = solution.medium
    rho = med.outer_radius
    if R <= 1.0:
        raise InvalidParameterError("R must exceed 1")
    if med.eps_ext != 1.0 or med.mu_ext != 1.0:
        raise InvalidParameterError("expects a medium in the small-inclusion picture")
    total, scattered, incident = _rescaled_fields(solution, rho)
    # absorbed power, region by region
    absorbed = 0.0
    inner = 0.0
    for j, outer in enumerate(t / rho for t in med.radii):
        s = rho * med.sigma[j]
        if s > 0:
            r, wr = gauss_legendre(order, inner, outer)
            sph = sphere_rule(order)
            pts = (r[:, None, None] * sph.directions[None]).reshape(-1, 3)
            w = np.outer(wr * r**2, sph.weights).ravel()
            E, _ = total(pts)
            absorbed += s * float(np.sum(w * np.sum(np.abs(E) ** 2, -1)))
        inner = outer
    # far sphere
    bp, nu, bw = sphere_nodes(R, order)
    Es, Hs = scattered(bp)
    far = float(np.real(np.sum(bw * np.sum(np.cross(Hs, nu) * Es.conj(), -1))))
    # interface |x~| = 1: evaluate just inside and outside along the normal
    bp, nu, bw = sphere_nodes(1.0, order)
    eps = 1e-12
    Ei, Hi = incident(bp)
    h1 = -np.cross(Ei, nu)
    h2 = -np.cross(Hi, nu)
    Eext, _ = scattered(bp * (1 + eps))
    _, Hint = total(bp * (1 - eps))
    jump = float(np.real(np.sum(bw * (np.sum(h2 * Eext.conj(), -1) - np.sum(h1.conj() * Hint, -1)))))
    terms = {"absorbed": absorbed, "far_flux": far, "interface": jump}
    return IdentityReport("energy", absorbed + far, jump, terms, {"R": R, "order": order, "rho": rho})


# ---------------------------------------------------------------------------
# standard suite

def single_mode(n_max, index, polarization, k, kind):
    """Coefficients with one unit entry at mode ``index``."""
    from .specfun import ModalCoefficients

    c = ModalCoefficients.zeros(n_max, k, kind)
    (c.te if polarization == "TE" else c.tm)[index] = 1.0
    return c


def standard_suite(rho=0.1, omega=1.0, R=10.0, source=None, order=24, controls=False):
    """Identity checks on analytic modes followed by the energy balance of a solve.

    Returns a list of :class:`IdentityReport`.  With ``controls`` a
    Stratton-Chu entry with a regular wave is added as a negative control:
    its residual is expected to be of order one and it is marked
    ``meta['expect'] = 'mismatch'``.
    """
    from .mie import RadialLayeredMedium, solve_source
    from .sources import ShellCurrent

    x = np.array([[2.0, 0.0, 0.0], [0.0, 1.5, 1.2], [-1.0, -1.0, 1.3]])
    reports = []
    for pol in ("TE", "TM"):
        c = single_mode(1, 1, pol, omega, "outgoing")
        rep = stratton_chu_check(lambda p, c=c: c.field(p, omega=omega), omega, x, order=order)
        rep.name = f"stratton-chu {pol} outgoing n=1"
        reports.append(rep)
    if controls:
        c = single_mode(2, 4, "TE", omega, "regular")
        rep = stratton_chu_check(lambda p: c.field(p, omega=omega), omega, x, order=order)
        rep.name = "stratton-chu TE regular n=2"
        rep.meta["expect"] = "mismatch"
        reports.append(rep)
    # outgoing waves are singular at the origin, so use a ball away from it
    for c, dom, label in [(single_mode(1, 1, "TE", omega, "outgoing"), Ball(1.0, (3.0, 0.0, 0.0)),
                           "outgoing n=1"),
                          (single_mode(2, 4, "TM", omega, "regular"), Ball(1.0), "regular n=2")]:
        rep = morawetz_residual(wave_evaluator(c), None, omega, dom, order)
        rep.name = f"morawetz {label}"
        reports.append(rep)
    sol = solve_source(RadialLayeredMedium.paper_inclusion(rho), source or ShellCurrent(), omega)
    rep = energy_identity_residual(sol, R, max(order, 32))
    reports.append(rep)
    return reports
