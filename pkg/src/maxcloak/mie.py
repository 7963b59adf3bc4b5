"""Modal solution of scattering by concentric isotropic spherical shells.

Each homogeneous region ``j`` carries regular and outgoing waves

    E = sum_l a_l^TE j-wave + b_l^TE h-wave  (and likewise TM)

with wavenumber ``k_j = omega sqrt(eps_j mu_j)``, ``Im k_j >= 0``.  The
innermost region holds regular waves only and the exterior holds the given
incident (regular) waves plus outgoing scattered waves, which makes the
exterior field radiating.  Continuity of tangential E and H on every
interface gives, per degree ``n`` and polarization, a 2x2 relation between
neighbouring regions written with Riccati-Bessel functions
``psi = z j_n(z)``, ``xi = z h_n(z)``:

    TE:  [psi/k, xi/k; psi'/mu, xi'/mu] [a; b]
    TM:  [psi'/k, xi'/k; psi/mu, xi/mu] [a; b]

(rows: tangential E times r, tangential H times i omega r).

The same conditions are solved twice: by chaining the 2x2 relations outward
from the core, and as one dense system over all interfaces.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IllConditionedModeWarning,
    InterfacePointError,
    InvalidParameterError,
    TruncationError,
    UnsupportedRegionError,
)
from .specfun import N_MAX_CAP, ModalCoefficients, mode_degrees, riccati, spherical_coordinates
from .transform import BlowupMap, MediumDescriptor

COND_WARN = 1e12
_ON_INTERFACE = 1e-14


@dataclass(frozen=True)
class RadialLayeredMedium:
    """Concentric isotropic shells inside an isotropic exterior.

    ``radii[j]`` is the outer radius of region ``j``; region 0 is the core
    ball.  ``eps``, ``mu`` and ``sigma`` list one value per bounded region.
    The exterior is vacuum unless ``eps_ext`` / ``mu_ext`` say otherwise
    (the rescaled picture uses ``rho`` for both).
    """

    radii: tuple
    eps: tuple
    mu: tuple
    sigma: tuple
    eps_ext: float = 1.0
    mu_ext: float = 1.0

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        n = len(radii)
        if n == 0:
            raise InvalidParameterError("need at least one interface")
        if not (len(self.eps) == len(self.mu) == len(self.sigma) == n):
            raise InvalidParameterError("eps, mu and sigma need one value per region")
        if radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise InvalidParameterError("radii must be positive and strictly increasing")
        if min(self.eps) <= 0 or min(self.mu) <= 0 or min(self.sigma) < 0:
            raise InvalidParameterError("eps, mu must be positive and sigma non-negative")
        if self.eps_ext <= 0 or self.mu_ext <= 0:
            raise InvalidParameterError("exterior eps and mu must be positive")
        object.__setattr__(self, "radii", radii)
        for name in ("eps", "mu", "sigma"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @classmethod
    def from_descriptor(cls, descriptor):
        """Isotropic layered form of the small-inclusion or rescaled picture."""
        d = descriptor
        rho = d.rho
        if d.picture == "small-inclusion":
            return cls((rho / 2, rho), (d.eps_core / rho, 1 / rho), (d.mu_core / rho, 1 / rho),
                       (0.0, 1 / rho))
        if d.picture == "rescaled":
            return cls((0.5, 1.0), (d.eps_core, 1.0), (d.mu_core, 1.0), (0.0, 1.0),
                       eps_ext=rho, mu_ext=rho)
        raise UnsupportedRegionError(
            "the cloak picture is anisotropic; solve the small-inclusion picture and map with cloak_field")

    @classmethod
    def paper_inclusion(cls, rho, eps_core=1.0, mu_core=1.0):
        return cls.from_descriptor(MediumDescriptor("small-inclusion", rho, eps_core, mu_core))

    @classmethod
    def vacuum(cls, radii=(0.5, 1.0)):
        n = len(radii)
        return cls(tuple(radii), (1.0,) * n, (1.0,) * n, (0.0,) * n)

    @property
    def n_regions(self):
        return len(self.radii) + 1

    @property
    def outer_radius(self):
        return self.radii[-1]

    def region_material(self, omega):
        """Effective permittivities, permeabilities and wavenumbers of all regions."""
        if omega <= 0:
            raise InvalidParameterError("omega must be positive")
        eps = np.array([e + 1j * s / omega for e, s in zip(self.eps, self.sigma)] + [self.eps_ext],
                       dtype=complex)
        mu = np.array(list(self.mu) + [self.mu_ext], dtype=complex)
        k = omega * np.sqrt(eps * mu)
        k = np.where(k.imag < 0, -k, k)
        return eps, mu, k

    def region_of(self, r):
        for a in self.radii:
            if abs(r - a) <= _ON_INTERFACE * a:
                raise InterfacePointError(f"point lies on the interface |x| = {a}")
        return int(np.searchsorted(self.radii, r))


# ---------------------------------------------------------------------------
# per-degree interface matrices

def _interface_blocks(k, mu, r, n_max):
    """2x2 blocks ``[row, col]`` for every degree 1..n_max and both polarizations.

    Returns an array of shape (2, n_max, 2, 2) indexed [pol, n-1].
    """
    z = np.asarray(k * r, dtype=complex)
    psi, dpsi = riccati("j", n_max, z)
    xi, dxi = riccati("h1", n_max, z)
    psi, dpsi, xi, dxi = psi[1:], dpsi[1:], xi[1:], dxi[1:]
    out = np.empty((2, n_max, 2, 2), dtype=complex)
    out[0, :, 0, 0], out[0, :, 0, 1] = psi / k, xi / k
    out[0, :, 1, 0], out[0, :, 1, 1] = dpsi / mu, dxi / mu
    out[1, :, 0, 0], out[1, :, 0, 1] = dpsi / k, dxi / k
    out[1, :, 1, 0], out[1, :, 1, 1] = psi / mu, xi / mu
    return out


def _interface_stack(medium, omega, n_max):
    """Blocks (inner side, outer side) at every interface."""
    _, mu, k = medium.region_material(omega)
    inner = [_interface_blocks(k[i], mu[i], r, n_max) for i, r in enumerate(medium.radii)]
    outer = [_interface_blocks(k[i + 1], mu[i + 1], r, n_max) for i, r in enumerate(medium.radii)]
    return inner, outer


def _chain_response(inner, outer):
    """Region states for unit incident amplitude by outward chaining.

    Returns ``states`` of shape (n_regions, 2, n_max, 2): ``[a, b]`` per
    region, polarization and degree, normalized so the exterior regular
    amplitude is 1.
    """
    n_if = len(inner)
    shape = inner[0].shape[:2]
    state = np.zeros(shape + (2,), dtype=complex)
    state[..., 0] = 1.0
    states = [state]
    logs = [np.zeros(shape)]
    log_scale = np.zeros(shape)
    for i in range(n_if):
        rhs = np.einsum("pnij,pnj->pni", inner[i], state)
        state = np.linalg.solve(outer[i], rhs[..., None])[..., 0]
        norm = np.max(np.abs(state), axis=-1)
        norm = np.where(norm == 0, 1.0, norm)
        state = state / norm[..., None]
        log_scale = log_scale + np.log(norm)
        states.append(state)
        logs.append(log_scale.copy())
    alpha = states[-1][..., 0]
    out = np.empty((n_if + 1,) + shape + (2,), dtype=complex)
    for j, (s, lg) in enumerate(zip(states, logs)):
        out[j] = s * (np.exp(lg - log_scale) / alpha)[..., None]
    return out


def _dense_response(inner, outer):
    """Same as :func:`_chain_response` from one dense solve per mode.

    Also returns the 2-norm condition number of each row/column-equilibrated
    system, shape (2, n_max).
    """
    n_if = len(inner)
    n_pol, n_max = inner[0].shape[:2]
    size = 2 * n_if
    out = np.zeros((n_if + 1, n_pol, n_max, 2), dtype=complex)
    cond = np.empty((n_pol, n_max))
    for p in range(n_pol):
        for n in range(n_max):
            A = np.zeros((size, size), dtype=complex)
            rhs = np.zeros(size, dtype=complex)
            for i in range(n_if):
                rows = slice(2 * i, 2 * i + 2)
                Mi, Mo = inner[i][p, n], outer[i][p, n]
                # unknown layout: core a at column 0, shell j (a, b) at
                # columns 2j-1, 2j, exterior b at the last column
                if i == 0:
                    A[rows, 0] = Mi[:, 0]
                else:
                    A[rows, 2 * i - 1:2 * i + 1] = Mi
                if i == n_if - 1:
                    A[rows, size - 1] = -Mo[:, 1]
                    rhs[rows] = Mo[:, 0]
                else:
                    A[rows, 2 * i + 1:2 * i + 3] = -Mo
            # columns first: each wave is normalized where it is largest,
            # which removes the z**(n+1) / z**(-n) growth of the basis
            col = np.max(np.abs(A), axis=0)
            Ac = A / col[None, :]
            row = np.max(np.abs(Ac), axis=1)
            As = Ac / row[:, None]
            cond[p, n] = np.linalg.cond(As)
            y = np.linalg.solve(As, rhs / row)
            x = y / col
            out[0, p, n] = (x[0], 0.0)
            for j in range(1, n_if):
                out[j, p, n] = x[2 * j - 1:2 * j + 1]
            out[n_if, p, n] = (1.0, x[size - 1])
    return out, cond


def _wave_scales(inner, outer):
    """Size of every region's regular and outgoing basis waves on its boundary.

    Shape (n_regions, 2, n_max, 2); used to compare coefficients at the
    level of the fields they produce.
    """
    n_if = len(inner)
    shape = inner[0].shape[:2]
    out = np.ones((n_if + 1,) + shape + (2,))
    for j in range(n_if + 1):
        blocks = []
        if j < n_if:
            blocks.append(inner[j])
        if j > 0:
            blocks.append(outer[j - 1])
        for c in range(2):
            out[j, ..., c] = np.max([np.abs(B[..., :, c]).max(axis=-1) for B in blocks], axis=0)
    return out


# ---------------------------------------------------------------------------
# solution container

@dataclass(frozen=True)
class FrequencySolution:
    """Modal solution at one frequency.

    ``regions[j]`` is the pair (regular, outgoing) of :class:`ModalCoefficients`
    for bounded region ``j``; the core's outgoing part is identically zero.
    ``response`` holds the per-degree unit-incident states from the chained
    solve and ``response_dense`` from the dense solve.
    """

    omega: float
    medium: RadialLayeredMedium
    incident: ModalCoefficients
    scattered: ModalCoefficients
    regions: tuple
    condition: np.ndarray
    response: np.ndarray = field(repr=False)
    response_dense: np.ndarray = field(repr=False)
    wave_scales: np.ndarray = field(repr=False)

    @property
    def n_max(self):
        return self.incident.n_max

    @property
    def dual_path_discrepancy(self):
        """Largest per-mode relative difference between the two solves.

        For each region and mode the coefficient differences are weighted by
        the size of the basis wave they multiply, so this compares the modal
        fields rather than raw coefficients.
        """
        return float(self.mode_discrepancy().max())

    def mode_discrepancy(self):
        """Field-level relative difference per (region, polarization, degree)."""
        s = self.wave_scales
        a, b = self.response * s, self.response_dense * s
        diff = np.abs(a - b).sum(axis=-1)
        size = np.maximum(np.abs(a).sum(axis=-1), np.abs(b).sum(axis=-1))
        return np.where(size > 0, diff / np.where(size > 0, size, 1.0), 0.0)

    def transfer(self):
        """Scattered-to-incident ratio per (polarization, degree)."""
        return self.response[-1, ..., 1]


def _broadcast(per_degree, n_max):
    nl, _ = mode_degrees(n_max)
    return per_degree[:, :, nl - 1, :]


def solve_modes(medium, incident, omega, warn=True):
    """Solve the transmission problem for the given incident waves.

    Parameters
    ----------
    medium : RadialLayeredMedium
    incident : ModalCoefficients
        Regular waves in the exterior region.
    omega : float

    Returns
    -------
    FrequencySolution
    """
    if omega <= 0:
        raise InvalidParameterError("omega must be positive")
    if incident.kind != "regular":
        raise InvalidParameterError("incident coefficients must be of regular kind")
    if not (np.all(np.isfinite(incident.te)) and np.all(np.isfinite(incident.tm))):
        raise InvalidParameterError("incident coefficients must be finite")
    _, mu, k = medium.region_material(omega)
    if not np.isclose(incident.k, k[-1], rtol=1e-12, atol=0):
        raise InvalidParameterError("incident wavenumber does not match the exterior medium")
    n_max = incident.n_max
    inner, outer = _interface_stack(medium, omega, n_max)
    resp = _chain_response(inner, outer)
    dense, cond = _dense_response(inner, outer)
    if warn and np.any(cond > COND_WARN):
        for p, n in zip(*np.nonzero(cond > COND_WARN)):
            warnings.warn(
                f"mode n={n + 1} pol={'TE' if p == 0 else 'TM'} has condition number {cond[p, n]:.3e}",
                IllConditionedModeWarning, stacklevel=2)
    scales = _wave_scales(inner, outer)
    # scattering ratios below ~psi/xi = 1e-280 fall into the subnormal range;
    # such modes contribute nothing representable and are set to zero
    tiny = scales[-1, ..., 0] / scales[-1, ..., 1] < 1e-280
    resp[-1][tiny, 1] = 0.0
    dense[-1][tiny, 1] = 0.0
    full = _broadcast(resp, n_max)  # (regions, pol, L, 2)
    te_in, tm_in = incident.te, incident.tm
    regions = []
    for j in range(medium.n_regions - 1):
        reg = ModalCoefficients(full[j, 0, :, 0] * te_in, full[j, 1, :, 0] * tm_in, k[j], "regular")
        out = ModalCoefficients(full[j, 0, :, 1] * te_in, full[j, 1, :, 1] * tm_in, k[j], "outgoing")
        regions.append((reg, out))
    scattered = ModalCoefficients(full[-1, 0, :, 1] * te_in, full[-1, 1, :, 1] * tm_in, k[-1],
                                  "outgoing")
    return FrequencySolution(float(omega), medium, incident, scattered, tuple(regions), cond,
                             resp, dense, scales)


def initial_n_max(medium, omega, margin=16):
    return int(np.ceil(omega * medium.outer_radius)) + margin


def _field_scale(coeffs, r):
    """Coefficient norm weighted by the radial function size at radius ``r``."""
    from .specfun import spherical_bessel

    nl, _ = mode_degrees(coeffs.n_max)
    kind = "j" if coeffs.kind == "regular" else "h1"
    f, _ = spherical_bessel(kind, coeffs.n_max, np.asarray(coeffs.k * r, dtype=complex))
    w = np.abs(f[nl])
    return float(np.sqrt(np.sum(w**2 * (np.abs(coeffs.te) ** 2 + np.abs(coeffs.tm) ** 2))))


def solve_source(medium, source, omega, n_max=None, tol=1e-10, cap=N_MAX_CAP, r_probe=2.0):
    """Solve for the field of a current source outside the medium.

    The truncation degree starts at ``ceil(omega * r_outer) + 16`` and is
    doubled until the scattered field size at ``r_probe`` (a weighted
    coefficient norm) changes by less than ``tol`` relative.  Changes below
    ``1e-14`` of the incident size there count as converged.
    """
    from .sources import modal_expand_incident

    n = n_max or min(initial_n_max(medium, omega), cap)
    inc = modal_expand_incident(source, omega, n)
    sol = solve_modes(medium, inc, omega)
    if n_max is not None:
        return sol
    r_probe = max(r_probe, medium.outer_radius)
    while True:
        norm0 = _field_scale(sol.scattered, r_probe)
        if n >= cap:
            raise TruncationError(f"scattered series not converged at n_max={cap}")
        n = min(2 * n, cap)
        inc = modal_expand_incident(source, omega, n)
        sol = solve_modes(medium, inc, omega)
        norm1 = _field_scale(sol.scattered, r_probe)
        floor = 1e-14 * _field_scale(sol.incident, r_probe)
        if abs(norm1 - norm0) <= max(tol * norm1, floor):
            return sol


# ---------------------------------------------------------------------------
# field evaluation

def _group_by_region(medium, pts):
    r = np.linalg.norm(pts, axis=-1)
    return np.array([medium.region_of(ri) for ri in r], dtype=int)


def _trim_for(coeffs, r, rel_tol=1e-18):
    """Drop trailing degrees whose waves are negligible at radius ``r``.

    Regular waves grow with r and outgoing waves shrink, so callers pass the
    largest (regular) or smallest (outgoing) radius where the series is used.
    """
    from .specfun import spherical_bessel

    n_max = coeffs.n_max
    kind = "j" if coeffs.kind == "regular" else "h1"
    f, d = spherical_bessel(kind, n_max, np.asarray(coeffs.k * r, dtype=complex))
    nl, _ = mode_degrees(n_max)
    w = (np.abs(f) + np.abs(d))[nl] * nl
    size = np.maximum(np.abs(coeffs.te), np.abs(coeffs.tm)) * w
    peak = size.max()
    if peak == 0.0:
        return coeffs.truncated(1)
    keep = nl[size > rel_tol * peak]
    return coeffs.truncated(int(keep.max()))


def eval_field(solution, points, part="total"):
    """Field of the solution at ``points``.

    ``part`` selects 'total', 'scattered' or 'incident' in the exterior
    region; inside the medium the total field is always returned.
    """
    med = solution.medium
    omega = solution.omega
    x = np.asarray(points, dtype=float)
    pts = np.atleast_2d(x)
    reg = _group_by_region(med, pts)
    eps, mu, k = med.region_material(omega)
    E = np.zeros(pts.shape, complex)
    H = np.zeros(pts.shape, complex)
    for j in np.unique(reg):
        sel = reg == j
        p = pts[sel]
        r = np.linalg.norm(p, axis=-1)
        if j == med.n_regions - 1:
            Es = np.zeros(p.shape, complex)
            Hs = np.zeros(p.shape, complex)
            if part not in ("total", "scattered", "incident"):
                raise InvalidParameterError(f"unknown field part {part!r}")
            if part in ("total", "scattered"):
                e, h = _trim_for(solution.scattered, r.min()).field(p, omega, mu[j])
                Es += e
                Hs += h
            if part in ("total", "incident"):
                e, h = _trim_for(solution.incident, r.max()).field(p, omega, mu[j])
                Es += e
                Hs += h
        else:
            a, b = solution.regions[j]
            Es, Hs = _trim_for(a, r.max()).field(p, omega, mu[j])
            if j > 0:
                e, h = _trim_for(b, r.min()).field(p, omega, mu[j])
                Es += e
                Hs += h
        E[sel], H[sel] = Es, Hs
    if x.ndim == 1:
        return E[0], H[0]
    return E, H


def scattered_farfield(solution, direction):
    """Far-field amplitudes ``(A_E, A_H)`` with ``E_sc ~ A_E exp(ikr)/r``."""
    d = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise InvalidParameterError("direction must be a unit vector")
    from .specfun import vector_harmonics

    sc = solution.scattered
    _, mu, k = solution.medium.region_material(solution.omega)
    k, mu = k[-1], mu[-1]
    _, theta, phi, _ = spherical_coordinates(d[None, :])
    C, B, _ = vector_harmonics(theta, phi, sc.n_max)
    nl, _ = mode_degrees(sc.n_max)
    ph1 = (-1j) ** (nl + 1)
    ph0 = (-1j) ** nl
    AE = (sc.te * ph1) @ C[0] + (sc.tm * ph0) @ B[0]
    AH = (sc.te * ph0) @ B[0] + (sc.tm * ph1) @ C[0]
    return AE / k, AH / (1j * solution.omega * mu)


def silver_muller_residual(solution, R, order=16):
    """Largest ``|Z H_sc x x - |x| E_sc|`` over the sphere ``|x| = R``.

    ``Z = sqrt(mu / eps)`` of the exterior.  For a radiating field the
    residual is ``O(1/R)``.
    """
    if R <= solution.medium.outer_radius:
        raise InvalidParameterError("R must exceed the outer radius of the medium")
    from .quadrature import sphere_rule

    pts = R * sphere_rule(order).directions
    E, H = eval_field(solution, pts, part="scattered")
    eps, mu, _ = solution.medium.region_material(solution.omega)
    Z = np.sqrt(mu[-1] / eps[-1])
    res = Z * np.cross(H, pts) - R * E
    return float(np.max(np.linalg.norm(res, axis=-1)))


def difference_field(solution, incident):
    """Evaluator of ``(E_rho, H_rho) - (E, H)`` outside the medium, ``(E_rho, H_rho)`` inside."""
    if not np.isclose(solution.incident.k, incident.k, rtol=1e-14, atol=0):
        raise InvalidParameterError("solution and incident field are at different frequencies")
    med = solution.medium

    def evaluate(points):
        x = np.asarray(points, dtype=float)
        pts = np.atleast_2d(x)
        r = np.linalg.norm(pts, axis=-1)
        outside = r > med.outer_radius
        E = np.zeros(pts.shape, complex)
        H = np.zeros(pts.shape, complex)
        if outside.any():
            E[outside], H[outside] = eval_field(solution, pts[outside], part="scattered")
        if (~outside).any():
            E[~outside], H[~outside] = eval_field(solution, pts[~outside])
        if x.ndim == 1:
            return E[0], H[0]
        return E, H

    return evaluate


def cloak_field(solution, points, source=None):
    """Fields of the physical cloak from a small-inclusion solution.

    Outside ``B_2`` the cloak and small-inclusion fields coincide.  Inside,
    the small-inclusion field at ``x = F^{-1}(y)`` is pushed forward,
    ``E_c(y) = DF(x)^{-T} E_rho(x)`` and likewise for H.  When ``source`` is
    given, the incident part outside the inclusion comes from the free-field
    quadrature rather than the multipole series.
    """
    med = solution.medium
    rho = med.outer_radius
    fmap = BlowupMap(rho)
    y = np.asarray(points, dtype=float)
    pts = np.atleast_2d(y)
    E = np.zeros(pts.shape, complex)
    H = np.zeros(pts.shape, complex)
    xs = np.array([fmap.inverse(p) for p in pts])
    r = np.linalg.norm(xs, axis=-1)
    out = r > rho
    if source is not None and out.any():
        from .sources import free_field

        Ei, Hi = free_field(source, solution.omega, xs[out])
        Es, Hs = eval_field(solution, xs[out], part="scattered")
        Ex_out, Hx_out = Ei + Es, Hi + Hs
    elif out.any():
        Ex_out, Hx_out = eval_field(solution, xs[out])
    Ex = np.zeros(pts.shape, complex)
    Hx = np.zeros(pts.shape, complex)
    if out.any():
        Ex[out], Hx[out] = Ex_out, Hx_out
    if (~out).any():
        Ex[~out], Hx[~out] = eval_field(solution, xs[~out])
    for i, p in enumerate(pts):
        if np.linalg.norm(p) > 2.0:
            E[i], H[i] = Ex[i], Hx[i]
            continue
        D = fmap.jacobian(xs[i])
        E[i] = np.linalg.solve(D.T, Ex[i])
        H[i] = np.linalg.solve(D.T, Hx[i])
    if y.ndim == 1:
        return E[0], H[0]
    return E, H
