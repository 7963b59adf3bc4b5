"""Divergence-free current sources, their free-space fields and multipole data.

Every current is built as ``J = curl(chi c) = grad(chi) x c`` for a smooth
compactly supported scalar ``chi`` and a constant vector ``c``, so
``div J = 0`` holds identically.  The free field solves

    curl E = i omega H,   curl H = -i omega E + J

and is ``E = i omega A``, ``H = curl A`` with ``A(x) = int J(y) G(x, y) dy``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, QuadratureError, UnsupportedRegionError
from .quadrature import gauss_legendre, sphere_rule
from .specfun import (
    N_MAX_CAP,
    ModalCoefficients,
    _radial_parts,
    mode_degrees,
    n_modes,
    scalar_harmonics,
    spherical_bessel,
    unit_vectors,
    vector_harmonics,
)


def _bump(s, power):
    """``(1 - s^2)^p`` on ``|s| < 1`` and its derivative in ``s``."""
    inside = np.abs(s) < 1.0
    base = np.where(inside, 1.0 - s * s, 0.0)
    val = base**power
    der = np.where(inside, -2.0 * power * s * base ** (power - 1), 0.0)
    return val, der


@dataclass(frozen=True)
class TensorNodes:
    """Volume quadrature nodes arranged as radial nodes x angular nodes."""

    radii: np.ndarray        # (n_r,)
    radial_weights: np.ndarray  # (n_r,), includes r**2
    theta: np.ndarray        # (n_a,)
    phi: np.ndarray          # (n_a,)
    angular_weights: np.ndarray  # (n_a,), includes sin(theta)

    @property
    def points(self):
        rhat, _, _ = unit_vectors(self.theta, self.phi)
        return (self.radii[:, None, None] * rhat[None, :, :]).reshape(-1, 3)

    @property
    def weights(self):
        return np.outer(self.radial_weights, self.angular_weights).ravel()


class CurrentDensity:
    """Base class for time-harmonic, divergence-free current profiles."""

    r_in: float
    r_out: float
    amplitude: float
    c: np.ndarray
    default_order = 16

    def __init__(self):
        self._projection_cache = {}

    def chi(self, points):
        """Scalar profile and its Cartesian gradient at ``points`` (N, 3)."""
        raise NotImplementedError

    def nodes(self, order):
        raise NotImplementedError

    def contains(self, x):
        raise NotImplementedError

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        _, grad = self.chi(pts)
        return np.cross(grad, self.c)

    def l2_norm(self, order=None):
        q = order or 2 * self.default_order
        nd = self.nodes(q)
        J = self(nd.points)
        return float(np.sqrt(np.sum(nd.weights * np.sum(J * J, axis=-1))))

    # -- multipole projections --------------------------------------------

    def projection_nodes(self, order, n_max):
        """Nodes used for the multipole projections up to degree ``n_max``."""
        return self.nodes(order)

    def _projections(self, order, n_max):
        """Angular projections of J onto conj(C), conj(B), conj(Y) on each radial node."""
        key = (order, n_max)
        if key not in self._projection_cache:
            nd = self.projection_nodes(order, n_max)
            n_r = nd.radii.size
            L = n_modes(n_max)
            PC = np.zeros((n_r, L), complex)
            PB = np.zeros((n_r, L), complex)
            PY = np.zeros((n_r, L), complex)
            step = max(1, 400_000 // L)
            for start in range(0, nd.theta.size, step):
                sl = slice(start, start + step)
                th, ph, wa = nd.theta[sl], nd.phi[sl], nd.angular_weights[sl]
                Y, dY, mY = scalar_harmonics(th, ph, n_max)
                rhat, that, phat = unit_vectors(th, ph)
                pts = nd.radii[:, None, None] * rhat[None, :, :]
                Jw = self(pts.reshape(-1, 3)).reshape(n_r, th.size, 3) * wa[None, :, None]
                Jr = np.einsum("rak,ak->ra", Jw, rhat)
                Jt = np.einsum("rak,ak->ra", Jw, that)
                Jp = np.einsum("rak,ak->ra", Jw, phat)
                cm, cd = mY.conj(), dY.conj()
                PC += Jt @ cm - Jp @ cd
                PB += Jt @ cd + Jp @ cm
                PY += Jr @ Y.conj()
            self._projection_cache[key] = (nd, PC, PB, PY)
        return self._projection_cache[key]


class ShellCurrent(CurrentDensity):
    """``J = curl(chi(|x|) c)`` with a polynomial radial bump on ``[r_in, r_out]``.

    ``chi(r) = amplitude * (1 - s^2)^power`` with ``s`` the position in the
    shell mapped to ``[-1, 1]``; ``J`` is ``C^(power-1)`` and vanishes
    identically outside the open shell.
    """

    default_order = 16

    def __init__(self, r_in=3.5, r_out=4.5, c=(0.0, 0.0, 1.0), amplitude=1.0, power=6):
        super().__init__()
        if not (2.0 < r_in < r_out):
            raise InvalidParameterError("need 2 < r_in < r_out")
        if power < 2:
            raise InvalidParameterError("bump power must be >= 2")
        self.r_in, self.r_out = float(r_in), float(r_out)
        self.c = np.asarray(c, dtype=float)
        self.amplitude = float(amplitude)
        self.power = int(power)

    def __repr__(self):
        return (f"ShellCurrent(r_in={self.r_in}, r_out={self.r_out}, c={self.c.tolist()}, "
                f"amplitude={self.amplitude}, power={self.power})")

    def _radial(self, r):
        half = 0.5 * (self.r_out - self.r_in)
        s = (r - 0.5 * (self.r_in + self.r_out)) / half
        v, d = _bump(s, self.power)
        return self.amplitude * v, self.amplitude * d / half

    def chi(self, points):
        r = np.linalg.norm(points, axis=-1)
        v, d = self._radial(r)
        rs = np.where(r == 0, 1.0, r)
        return v, (d / rs)[:, None] * points

    def contains(self, x):
        return self.r_in < np.linalg.norm(x) < self.r_out

    def nodes(self, order):
        r, wr = gauss_legendre(order, self.r_in, self.r_out)
        sph = sphere_rule(max(order, 8))
        return TensorNodes(r, wr * r**2, sph.theta, sph.phi, sph.weights)

    def projection_nodes(self, order, n_max):
        # J has angular degree 1, so its products with degree <= n_max
        # harmonics are integrated exactly by this fixed rule
        r, wr = gauss_legendre(order, self.r_in, self.r_out)
        sph = sphere_rule(n_max // 2 + 3)
        return TensorNodes(r, wr * r**2, sph.theta, sph.phi, sph.weights)


class PatchCurrent(CurrentDensity):
    """``J = curl(chi c)`` with ``chi`` a product bump on a spherical box.

    The box is ``r_in < r < r_out``, ``theta0 < theta < theta1``,
    ``phi0 < phi < phi1``; it has no rotational symmetry, so its multipole
    content spans all orders ``m``.
    """

    default_order = 20

    def __init__(self, r_in=3.5, r_out=4.5, theta=(0.6, 1.4), phi=(-0.5, 0.6),
                 c=(0.3, -0.5, 1.0), amplitude=1.0, power=6):
        super().__init__()
        if not (2.0 < r_in < r_out):
            raise InvalidParameterError("need 2 < r_in < r_out")
        if not (0.0 < theta[0] < theta[1] < np.pi):
            raise InvalidParameterError("theta range must lie strictly inside (0, pi)")
        if not (phi[0] < phi[1] and phi[1] - phi[0] < 2 * np.pi):
            raise InvalidParameterError("invalid phi range")
        self.r_in, self.r_out = float(r_in), float(r_out)
        self.theta_range = (float(theta[0]), float(theta[1]))
        self.phi_range = (float(phi[0]), float(phi[1]))
        self.c = np.asarray(c, dtype=float)
        self.amplitude = float(amplitude)
        self.power = int(power)

    def __repr__(self):
        return (f"PatchCurrent(r_in={self.r_in}, r_out={self.r_out}, theta={self.theta_range}, "
                f"phi={self.phi_range}, c={self.c.tolist()}, amplitude={self.amplitude}, "
                f"power={self.power})")

    def _factor(self, x, lo, hi):
        half = 0.5 * (hi - lo)
        v, d = _bump((x - 0.5 * (lo + hi)) / half, self.power)
        return v, d / half

    def _wrap_phi(self, phi):
        lo = self.phi_range[0]
        return lo + np.mod(phi - lo, 2 * np.pi)

    def chi(self, points):
        r = np.linalg.norm(points, axis=-1)
        rho = np.hypot(points[:, 0], points[:, 1])
        theta = np.arctan2(rho, points[:, 2])
        phi = self._wrap_phi(np.arctan2(points[:, 1], points[:, 0]))
        fr, dr = self._factor(r, self.r_in, self.r_out)
        ft, dt = self._factor(theta, *self.theta_range)
        fp, dp = self._factor(phi, *self.phi_range)
        a = self.amplitude
        rhat, that, phat = unit_vectors(theta, phi)
        rs = np.where(r == 0, 1.0, r)
        st = np.where(np.sin(theta) == 0, 1.0, np.sin(theta))
        grad = a * ((dr * ft * fp)[:, None] * rhat
                    + (fr * dt * fp / rs)[:, None] * that
                    + (fr * ft * dp / (rs * st))[:, None] * phat)
        return a * fr * ft * fp, grad

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        theta = np.arctan2(np.hypot(x[0], x[1]), x[2])
        phi = self._wrap_phi(np.arctan2(x[1], x[0]))
        return (self.r_in < r < self.r_out and self.theta_range[0] < theta < self.theta_range[1]
                and phi < self.phi_range[1])

    def nodes(self, order):
        r, wr = gauss_legendre(order, self.r_in, self.r_out)
        t, wt = gauss_legendre(order, *self.theta_range)
        p, wp = gauss_legendre(order, *self.phi_range)
        T, P = np.meshgrid(t, p, indexing="ij")
        W = np.outer(wt * np.sin(t), wp)
        return TensorNodes(r, wr * r**2, T.ravel(), P.ravel(), W.ravel())

    def rotated_z(self, angle):
        """The same profile rigidly rotated about the z axis by ``angle``."""
        ca, sa = np.cos(angle), np.sin(angle)
        R = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
        return PatchCurrent(self.r_in, self.r_out, self.theta_range,
                            (self.phi_range[0] + angle, self.phi_range[1] + angle),
                            R @ self.c, self.amplitude, self.power)


def make_divfree_current(profile="shell", **params):
    """Build a divergence-free current; ``profile`` is 'shell' or 'patch'."""
    if profile == "shell":
        return ShellCurrent(**params)
    if profile == "patch":
        return PatchCurrent(**params)
    raise InvalidParameterError(f"unknown current profile {profile!r}")


# ---------------------------------------------------------------------------
# free field by volume quadrature

def _free_field_at_order(J, omega, pts, order):
    nd = J.nodes(order)
    y = nd.points
    w = nd.weights
    Jy = J(y) * w[:, None]
    keep = np.any(Jy != 0, axis=1)
    y, Jy = y[keep], Jy[keep]
    E = np.zeros(pts.shape, complex)
    H = np.zeros(pts.shape, complex)
    step = max(1, 1_000_000 // max(1, y.shape[0]))
    for start in range(0, pts.shape[0], step):
        x = pts[start:start + step]
        d = x[:, None, :] - y[None, :, :]
        R = np.linalg.norm(d, axis=-1)
        G = np.exp(1j * omega * R) / (4.0 * np.pi * R)
        A = np.einsum("pn,nk->pk", G, Jy)
        gradG = (G * (1j * omega - 1.0 / R) / R)[..., None] * d
        E[start:start + step] = 1j * omega * A
        H[start:start + step] = np.cross(gradG, Jy[None, :, :]).sum(axis=1)
    return E, H


def free_field(J, omega, x, order=None, tol=1e-8, max_order=128):
    """Field radiated in vacuum by ``J`` at point(s) ``x`` off the support.

    The order of the tensor Gauss rule over the support is doubled until the
    result changes by less than ``tol`` (relative); ``QuadratureError`` if
    ``max_order`` is reached first.
    """
    if omega <= 0:
        raise InvalidParameterError("omega must be positive")
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    for p in pts:
        if J.contains(p):
            raise UnsupportedRegionError(f"evaluation point {p} lies inside the source support")
    q = order or J.default_order
    E0, H0 = _free_field_at_order(J, omega, pts, q)
    change = np.inf
    while q * 2 <= max_order:
        q *= 2
        E1, H1 = _free_field_at_order(J, omega, pts, q)
        scale = max(np.abs(E1).max(), np.abs(H1).max(), 1e-300)
        change = max(np.abs(E1 - E0).max(), np.abs(H1 - H0).max()) / scale
        E0, H0 = E1, H1
        if change < tol:
            break
    else:
        if change >= tol:
            raise QuadratureError(f"free-field quadrature did not reach {tol:g}", achieved=change)
    if x.ndim == 1:
        return E0[0], H0[0]
    return E0, H0


# ---------------------------------------------------------------------------
# multipole expansion about the origin

def _expand_at_order(J, omega, n_max, order):
    nd, PC, PB, PY = J._projections(order, n_max)
    nl, _ = mode_degrees(n_max)
    nn1 = nl * (nl + 1.0)
    z = omega * nd.radii.astype(complex)
    f, f_over_z, g = _radial_parts("outgoing", n_max, z)
    f, f_over_z, g = f[:, nl], f_over_z[:, nl], g[:, nl]
    W = nd.radial_weights[:, None]
    pref = -omega**2 / nn1
    te = pref * np.sum(W * f * PC, axis=0)
    tm = pref * np.sum(W * (nn1 * f_over_z * PY + g * PB), axis=0)
    return te, tm


def modal_expand_incident(J, omega, n_max, order=None, tol=1e-8, max_order=128, cap=N_MAX_CAP):
    """Regular-wave coefficients of the free field of ``J`` inside ``B_{r_in}``.

    Uses the multipole expansion of the electric dyadic Green function:
    for ``|x| < |y|``, ``E(x) = sum_l te_l M_l(omega x) + tm_l N_l(omega x)``
    with ``te_l = -omega^2/(n(n+1)) int conj_ang(M^out_l)(omega y) . J(y) dy``
    and likewise for ``tm_l`` with ``N``.
    """
    if omega <= 0:
        raise InvalidParameterError("omega must be positive")
    if not (1 <= n_max <= cap):
        raise InvalidParameterError(f"n_max must lie in [1, {cap}]")
    q = order or max(J.default_order, (n_max + 3) // 2 + 4)
    # Compare coefficients through the size of the wave they multiply at the
    # inner support radius; unweighted high-degree coefficients carry
    # harmless round-off amplified by h_n.
    nl, _ = mode_degrees(n_max)
    jn, _ = spherical_bessel("j", n_max, np.asarray(omega * J.r_in, dtype=complex))
    weight = np.abs(jn[..., nl]).ravel()
    te0, tm0 = _expand_at_order(J, omega, n_max, q)
    while True:
        if 2 * q > max_order:
            raise QuadratureError("incident expansion quadrature did not converge")
        q *= 2
        te1, tm1 = _expand_at_order(J, omega, n_max, q)
        scale = max(np.abs(weight * te1).max(), np.abs(weight * tm1).max())
        change = max(np.abs(weight * (te1 - te0)).max(), np.abs(weight * (tm1 - tm0)).max())
        te0, tm0 = te1, tm1
        if change <= tol * scale or scale == 0.0:
            break
    return ModalCoefficients(te0, tm0, omega, "regular")


def plane_wave_coeffs(direction, polarization, omega, n_max):
    """Regular-wave coefficients of ``E = p exp(i omega d . x)``."""
    d = np.asarray(direction, dtype=float)
    p = np.asarray(polarization, dtype=complex)
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise InvalidParameterError("direction must be a unit vector")
    if abs(np.dot(d, p)) > 1e-12 * max(1.0, np.linalg.norm(p)):
        raise InvalidParameterError("polarization must be orthogonal to the direction")
    theta = np.arccos(np.clip(d[2], -1.0, 1.0))
    phi = np.arctan2(d[1], d[0])
    C, B, _ = vector_harmonics(np.array([theta]), np.array([phi]), n_max)
    nl, _ = mode_degrees(n_max)
    nn1 = nl * (nl + 1.0)
    te = 4 * np.pi * (1j**nl) / nn1 * (C[0].conj() @ p)
    tm = 4 * np.pi * (1j ** (nl - 1)) / nn1 * (B[0].conj() @ p)
    return ModalCoefficients(te, tm, omega, "regular")
