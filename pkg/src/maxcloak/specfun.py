"""Special functions for the spherical-wave representation of Maxwell fields.

Conventions
-----------
Time dependence ``exp(-i omega t)``; a field pair solves
``curl E = i omega mu H`` and ``curl H = -i omega eps E`` in a homogeneous
region with wavenumber ``k = omega * sqrt(eps * mu)``.

Degrees ``n >= 1`` and orders ``|m| <= n`` are flattened into a single mode
index ``l = n**2 + n + m - 1``.  The scalar harmonics ``Y_nm`` are
orthonormal on the unit sphere and carry the Condon-Shortley phase.  With

    C_nm = theta_hat (i m / sin(theta)) Y_nm - phi_hat dY_nm/dtheta
    B_nm = theta_hat dY_nm/dtheta + phi_hat (i m / sin(theta)) Y_nm
    P_nm = r_hat Y_nm

the vector waves are ``M = z_n(kr) C`` and
``N = n(n+1) z_n(kr)/(kr) P + [kr z_n(kr)]'/(kr) B``, where ``z_n`` is
``j_n`` (regular kind) or ``h_n^(1)`` (outgoing kind).  They satisfy
``curl M = k N`` and ``curl N = k M``.  ``TE`` refers to the M family and
``TM`` to the N family.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidParameterError

N_MAX_CAP = 60
POLARIZATIONS = ("TE", "TM")
KINDS = ("regular", "outgoing")

# point-chunk size for field evaluation; bounds peak memory
_CHUNK = 2048


def n_modes(n_max):
    return n_max * n_max + 2 * n_max


def mode_index(n, m):
    return n * n + n + m - 1


def mode_degrees(n_max):
    """Degree ``n`` and order ``m`` for every flattened mode index."""
    n = np.concatenate([np.full(2 * k + 1, k) for k in range(1, n_max + 1)]) if n_max else np.zeros(0, int)
    m = np.concatenate([np.arange(-k, k + 1) for k in range(1, n_max + 1)]) if n_max else np.zeros(0, int)
    return n.astype(int), m.astype(int)


@dataclass(frozen=True)
class SphericalWaveIndex:
    n: int
    m: int
    pol: str = "TE"
    kind: str = "regular"

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError("degree n must be >= 1 (no monopole Maxwell modes)")
        if abs(self.m) > self.n:
            raise InvalidParameterError(f"order m={self.m} outside [-{self.n}, {self.n}]")
        if self.pol not in POLARIZATIONS:
            raise InvalidParameterError(f"polarization must be one of {POLARIZATIONS}")
        if self.kind not in KINDS:
            raise InvalidParameterError(f"kind must be one of {KINDS}")

    @property
    def flat(self):
        return mode_index(self.n, self.m)


# ---------------------------------------------------------------------------
# spherical Bessel functions

def _sph_jn(n_top, z):
    """j_0..j_{n_top} by Miller's downward recurrence, normalized by j_0 or j_1."""
    out = np.zeros(z.shape + (n_top + 1,), dtype=complex)
    if z.size == 0:
        return out
    zero = np.abs(z) < 1e-30
    zz = np.where(zero, 1.0, z)
    amax = float(np.abs(zz).max())
    start = max(n_top, int(np.ceil(amax))) + 40 + int(4 * amax ** (1.0 / 3.0))
    f_up = np.zeros_like(zz)
    f = np.full_like(zz, 1e-200)
    for n in range(start, 0, -1):
        f_down = (2 * n + 1) / zz * f - f_up
        f_up, f = f, f_down
        if n - 1 <= n_top:
            out[..., n - 1] = f
        big = np.abs(f) > 1e200
        if big.any():
            s = np.where(big, 1e-200, 1.0)
            f = f * s
            f_up = f_up * s
            out *= s[..., None]
    sin, cos = np.sin(zz), np.cos(zz)
    j0 = sin / zz
    j1 = sin / zz**2 - cos / zz
    use0 = np.abs(j0) >= np.abs(j1)
    if n_top >= 1:
        scale = np.where(use0, j0 / out[..., 0], j1 / np.where(use0, 1.0, out[..., 1]))
    else:
        scale = j0 / out[..., 0]
    out *= scale[..., None]
    if zero.any():
        # leading series term z**n / (2n+1)!!
        zs = z[zero][..., None]
        n = np.arange(n_top + 1)
        dfact = np.cumprod(np.concatenate([[1.0], 2.0 * n[1:] + 1.0]))
        with np.errstate(under="ignore"):
            out[zero] = zs**n / dfact
    return out


def _sph_h1(n_top, z):
    """h_n^(1) by upward recurrence; stable for Im z >= 0."""
    if np.any(z == 0):
        raise DomainError("y_n and h_n are singular at z = 0")
    out = np.empty(z.shape + (n_top + 1,), dtype=complex)
    e = np.exp(1j * z)
    out[..., 0] = -1j * e / z
    if n_top >= 1:
        out[..., 1] = -e / z * (1.0 + 1j / z)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_top):
            out[..., n + 1] = (2 * n + 1) / z * out[..., n] - out[..., n - 1]
    return out


def _sph_yn(n_top, z):
    if np.any(z == 0):
        raise DomainError("y_n and h_n are singular at z = 0")
    if np.all(z.imag >= 0):
        return 1j * (_sph_jn(n_top, z) - _sph_h1(n_top, z))
    out = np.empty(z.shape + (n_top + 1,), dtype=complex)
    sin, cos = np.sin(z), np.cos(z)
    out[..., 0] = -cos / z
    if n_top >= 1:
        out[..., 1] = -cos / z**2 - sin / z
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_top):
            out[..., n + 1] = (2 * n + 1) / z * out[..., n] - out[..., n - 1]
    return out


def _check_n(n_max, cap):
    if n_max < 0:
        raise InvalidParameterError("n_max must be non-negative")
    if n_max > cap:
        raise InvalidParameterError(f"n_max={n_max} exceeds cap {cap}")


def spherical_bessel(kind, n_max, z, cap=N_MAX_CAP):
    """Spherical Bessel functions of orders ``0..n_max`` and their derivatives.

    Parameters
    ----------
    kind : {'j', 'y', 'h1'}
    n_max : int
    z : complex scalar or array

    Returns
    -------
    values, derivatives : complex arrays of shape ``z.shape + (n_max + 1,)``
    """
    _check_n(n_max, cap)
    z = np.asarray(z, dtype=complex)
    top = n_max + 1
    if kind == "j":
        f = _sph_jn(top, z)
    elif kind == "y":
        f = _sph_yn(top, z)
    elif kind == "h1":
        f = _sph_h1(top, z)
    else:
        raise InvalidParameterError(f"unknown Bessel kind {kind!r}")
    d = np.empty(z.shape + (n_max + 1,), dtype=complex)
    d[..., 0] = -f[..., 1]
    if n_max >= 1:
        n = np.arange(1, n_max + 1)
        zz = np.where(z == 0, 1.0, z)[..., None]
        d[..., 1:] = f[..., :n_max] - (n + 1) / zz * f[..., 1 : n_max + 1]
        if kind == "j" and np.any(z == 0):
            d[z == 0, 1:] = 0.0
            if n_max >= 1:
                d[z == 0, 1] = 1.0 / 3.0
    return f[..., : n_max + 1], d


def riccati(kind, n_max, z):
    """Riccati-Bessel ``z f_n(z)`` and its derivative for ``n = 0..n_max``.

    ``kind='j'`` gives psi_n, ``kind='h1'`` gives xi_n.
    """
    z = np.asarray(z, dtype=complex)
    f, d = spherical_bessel(kind, n_max, z)
    zz = z[..., None]
    return zz * f, f + zz * d


def _radial_parts(kind, n_max, z):
    """``f_n(z)``, ``f_n(z)/z`` and ``[z f_n(z)]'/z`` for n = 0..n_max."""
    top = n_max
    f = _sph_jn(top, z) if kind == "regular" else _sph_h1(top, z)
    zero = z == 0
    f_over_z = f / np.where(zero, 1.0, z)[..., None]
    g = np.zeros_like(f)
    n = np.arange(1, n_max + 1)
    g[..., 1:] = f[..., :n_max] - n * f_over_z[..., 1:]
    if zero.any():
        # limits of j_n(z)/z and [z j_n(z)]'/z at the origin
        f_over_z[zero] = 0.0
        g[zero] = 0.0
        if n_max >= 1:
            f_over_z[zero, 1] = 1.0 / 3.0
            g[zero, 1] = 2.0 / 3.0
    return f, f_over_z, g


# ---------------------------------------------------------------------------
# angular functions

def legendre_normalized(theta, n_max):
    """Normalized associated Legendre functions for ``m >= 0``.

    Returns ``P``, ``U`` and ``dP`` with shape ``(len(theta), n_max+1, n_max+1)``
    indexed ``[.., n, m]``: ``P = Pbar_n^m(cos theta)``,
    ``U = Pbar_n^m / sin(theta)`` (for ``m >= 1``, finite at the poles) and
    ``dP = d Pbar_n^m / d theta``.
    """
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    shape = theta.shape + (n_max + 1, n_max + 1)
    P = np.zeros(shape)
    U = np.zeros(shape)
    P[..., 0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(0, n_max + 1):
        if m >= 1:
            f = -np.sqrt((2 * m + 1) / (2.0 * m))
            U[..., m, m] = f * P[..., m - 1, m - 1]
            P[..., m, m] = s * U[..., m, m]
        if m + 1 <= n_max:
            f = np.sqrt(2 * m + 3.0)
            P[..., m + 1, m] = f * c * P[..., m, m]
            U[..., m + 1, m] = f * c * U[..., m, m]
        for n in range(m + 2, n_max + 1):
            a = np.sqrt((4.0 * n * n - 1) / (n * n - m * m))
            b = np.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1) ** 2 - 1))
            P[..., n, m] = a * (c * P[..., n - 1, m] - b * P[..., n - 2, m])
            U[..., n, m] = a * (c * U[..., n - 1, m] - b * U[..., n - 2, m])
    dP = np.zeros(shape)
    for n in range(1, n_max + 1):
        dP[..., n, 0] = np.sqrt(n * (n + 1.0)) * P[..., n, 1]
        for m in range(1, n + 1):
            coef = np.sqrt((2 * n + 1.0) / (2 * n - 1) * (n - m) * (n + m))
            dP[..., n, m] = n * c * U[..., n, m] - coef * U[..., n - 1, m]
    return P, U, dP


def scalar_harmonics(theta, phi, n_max):
    """``Y``, ``dY/dtheta`` and ``i m Y / sin(theta)`` for all modes, shape (N, L)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    P, U, dP = legendre_normalized(theta, n_max)
    L = n_modes(n_max)
    Y = np.empty(theta.shape + (L,), dtype=complex)
    dY = np.empty_like(Y)
    mY = np.empty_like(Y)
    for m in range(0, n_max + 1):
        e = np.exp(1j * m * phi)
        sign = (-1) ** m
        for n in range(max(m, 1), n_max + 1):
            lp = mode_index(n, m)
            Y[..., lp] = P[..., n, m] * e
            dY[..., lp] = dP[..., n, m] * e
            mY[..., lp] = 1j * m * U[..., n, m] * e
            if m:
                ln = mode_index(n, -m)
                ec = np.conj(e)
                Y[..., ln] = sign * P[..., n, m] * ec
                dY[..., ln] = sign * dP[..., n, m] * ec
                mY[..., ln] = -1j * m * sign * U[..., n, m] * ec
    return Y, dY, mY


def spherical_coordinates(points):
    """r, theta, phi and the local unit vectors of Cartesian ``points`` (N, 3)."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(x, axis=-1)
    rho = np.hypot(x[..., 0], x[..., 1])
    theta = np.arctan2(rho, x[..., 2])
    phi = np.arctan2(x[..., 1], x[..., 0])
    return r, theta, phi, unit_vectors(theta, phi)


def unit_vectors(theta, phi):
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    rhat = np.stack([st * cp, st * sp, ct], axis=-1)
    that = np.stack([ct * cp, ct * sp, -st], axis=-1)
    phat = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    return rhat, that, phat


def vector_harmonics(theta, phi, n_max):
    """Cartesian ``C``, ``B`` and ``P`` vector harmonics, each of shape (N, L, 3)."""
    Y, dY, mY = scalar_harmonics(theta, phi, n_max)
    rhat, that, phat = unit_vectors(np.atleast_1d(theta), np.atleast_1d(phi))
    C = mY[..., None] * that[:, None, :] - dY[..., None] * phat[:, None, :]
    B = dY[..., None] * that[:, None, :] + mY[..., None] * phat[:, None, :]
    Pv = Y[..., None] * rhat[:, None, :]
    return C, B, Pv


# ---------------------------------------------------------------------------
# field evaluation

def _infer_n_max(L):
    n_max = int(round(np.sqrt(L + 1) - 1))
    if n_modes(n_max) != L:
        raise InvalidParameterError(f"coefficient length {L} is not n_max**2 + 2*n_max")
    return n_max


def expand_field(te, tm, k, points, kind="regular", omega=None, mu=1.0):
    """Evaluate ``sum te_l M_l + tm_l N_l`` and the matching H field.

    Parameters
    ----------
    te, tm : (L,) complex coefficient arrays
    k : complex wavenumber of the region
    points : (N, 3) Cartesian evaluation points
    kind : 'regular' or 'outgoing'
    omega : angular frequency; defaults to ``k / sqrt(mu)`` (unit permittivity)
    mu : relative permeability of the region

    Returns
    -------
    E, H : (N, 3) complex arrays
    """
    te = np.asarray(te, dtype=complex)
    tm = np.asarray(tm, dtype=complex)
    n_max = _infer_n_max(te.size)
    if kind not in KINDS:
        raise InvalidParameterError(f"kind must be one of {KINDS}")
    if k == 0:
        raise InvalidParameterError("wavenumber must be nonzero")
    if omega is None:
        omega = k / np.sqrt(mu)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    E = np.zeros(pts.shape, dtype=complex)
    H = np.zeros(pts.shape, dtype=complex)
    if n_max == 0 or pts.shape[0] == 0:
        return E, H
    nl, _ = mode_degrees(n_max)
    nn1 = nl * (nl + 1.0)
    h_factor = k / (1j * omega * mu)
    for start in range(0, pts.shape[0], _CHUNK):
        sl = slice(start, start + _CHUNK)
        r, theta, phi, (rhat, that, phat) = spherical_coordinates(pts[sl])
        at_origin = r == 0
        if at_origin.any():
            if kind == "outgoing":
                raise DomainError("outgoing waves are singular at the origin")
        z = k * r.astype(complex)
        f, f_over_z, g = _radial_parts(kind, n_max, z)
        f, f_over_z, g = f[:, nl], f_over_z[:, nl], g[:, nl]
        Y, dY, mY = scalar_harmonics(theta, phi, n_max)
        # E
        er = (Y * (tm * nn1) * f_over_z).sum(-1)
        et = (mY * te * f + dY * tm * g).sum(-1)
        ep = (-dY * te * f + mY * tm * g).sum(-1)
        E[sl] = er[:, None] * rhat + et[:, None] * that + ep[:, None] * phat
        # H: roles of TE and TM swap
        hr = (Y * (te * nn1) * f_over_z).sum(-1)
        ht = (mY * tm * f + dY * te * g).sum(-1)
        hp = (-dY * tm * f + mY * te * g).sum(-1)
        H[sl] = h_factor * (hr[:, None] * rhat + ht[:, None] * that + hp[:, None] * phat)
    return E, H


def vector_wave(index, k, x, omega=None, mu=1.0):
    """Single vector spherical wave and its H field at point(s) ``x``."""
    L = n_modes(index.n)
    te = np.zeros(L, dtype=complex)
    tm = np.zeros(L, dtype=complex)
    (te if index.pol == "TE" else tm)[index.flat] = 1.0
    x = np.asarray(x, dtype=float)
    E, H = expand_field(te, tm, k, x.reshape(-1, 3), index.kind, omega, mu)
    if x.ndim == 1:
        return E[0], H[0]
    return E, H


# ---------------------------------------------------------------------------
# Green kernel

def _separation(x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    R = np.linalg.norm(d, axis=-1)
    if np.any(R == 0):
        raise DomainError("Green kernel is singular at x = y")
    return d, R


def green_scalar(k, x, y):
    """``exp(i k |x - y|) / (4 pi |x - y|)``."""
    if np.imag(k) < 0:
        raise InvalidParameterError("Im k must be >= 0")
    _, R = _separation(x, y)
    return np.exp(1j * k * R) / (4.0 * np.pi * R)


def green_gradient(k, x, y):
    """Gradient of the scalar kernel with respect to ``x``."""
    d, R = _separation(x, y)
    G = np.exp(1j * k * R) / (4.0 * np.pi * R)
    return (G * (1j * k - 1.0 / R) / R)[..., None] * d


# ---------------------------------------------------------------------------
# coefficient container

@dataclass(frozen=True)
class ModalCoefficients:
    """Expansion coefficients ``E = sum te_l M_l + tm_l N_l`` in one region.

    ``k`` is the wavenumber of the region the waves live in, ``kind`` selects
    regular (``j_n``) or outgoing (``h_n``) radial functions.
    """

    te: np.ndarray
    tm: np.ndarray
    k: complex
    kind: str = "regular"

    def __post_init__(self):
        te = np.asarray(self.te, dtype=complex)
        tm = np.asarray(self.tm, dtype=complex)
        if te.shape != tm.shape or te.ndim != 1:
            raise InvalidParameterError("te and tm must be 1-D arrays of equal length")
        _infer_n_max(te.size)
        if self.kind not in KINDS:
            raise InvalidParameterError(f"kind must be one of {KINDS}")
        object.__setattr__(self, "te", te)
        object.__setattr__(self, "tm", tm)

    @classmethod
    def zeros(cls, n_max, k, kind="regular"):
        L = n_modes(n_max)
        return cls(np.zeros(L, complex), np.zeros(L, complex), k, kind)

    @property
    def n_max(self):
        return _infer_n_max(self.te.size)

    def field(self, points, omega=None, mu=1.0):
        return expand_field(self.te, self.tm, self.k, points, self.kind, omega, mu)

    def degree_magnitudes(self):
        """Largest coefficient magnitude of each degree n = 1..n_max."""
        nl, _ = mode_degrees(self.n_max)
        mags = np.maximum(np.abs(self.te), np.abs(self.tm))
        out = np.zeros(self.n_max)
        np.maximum.at(out, nl - 1, mags)
        return out

    def truncated(self, n_max):
        """Copy restricted (or zero-padded) to degrees ``<= n_max``."""
        L = n_modes(n_max)
        te = np.zeros(L, complex)
        tm = np.zeros(L, complex)
        m = min(L, self.te.size)
        te[:m] = self.te[:m]
        tm[:m] = self.tm[:m]
        return ModalCoefficients(te, tm, self.k, self.kind)

    def trimmed(self, rel_tol=1e-20):
        """Drop trailing degrees whose coefficients are below ``rel_tol`` of the peak."""
        mags = self.degree_magnitudes()
        peak = mags.max() if mags.size else 0.0
        if peak == 0.0:
            return self.truncated(1)
        keep = np.nonzero(mags > rel_tol * peak)[0]
        return self.truncated(max(1, int(keep[-1]) + 1))

    def scaled(self, factor):
        return ModalCoefficients(self.te * factor, self.tm * factor, self.k, self.kind)

    def __add__(self, other):
        if self.kind != other.kind or self.k != other.k:
            raise InvalidParameterError("cannot add coefficients of different regions")
        n = max(self.n_max, other.n_max)
        a, b = self.truncated(n), other.truncated(n)
        return ModalCoefficients(a.te + b.te, a.tm + b.tm, self.k, self.kind)
