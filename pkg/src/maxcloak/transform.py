"""Radial coordinate maps, tensor push-forward and the three cloak media.

The blow-up map expands the small ball ``B_rho`` onto ``B_1``, stretches the
shell ``B_2 \\ B_rho`` affinely (in ``|x|``) onto ``B_2 \\ B_1`` and is the
identity outside ``B_2``.  Media are described in three equivalent pictures:

* ``cloak``: the physical device (push-forward layer, lossy layer, core);
* ``small-inclusion``: the cloak pulled back through the blow-up map, which
  is vacuum outside ``B_rho``;
* ``rescaled``: the small-inclusion picture in the coordinate ``x / rho``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InterfacePointError, InvalidParameterError, SingularMapError

PICTURES = ("cloak", "small-inclusion", "rescaled")

# relative distance to an interface sphere that counts as "on" it
_ON_INTERFACE = 1e-14


def _check_rho(rho):
    if not (0.0 < rho < 1.0):
        raise InvalidParameterError(f"rho must lie in (0, 1), got {rho!r}")


def _check_off_interfaces(r, radii):
    for a in radii:
        if abs(r - a) <= _ON_INTERFACE * a:
            raise InterfacePointError(f"point lies on the interface |x| = {a}")


class RadialMap:
    """A map ``x -> f(|x|) x / |x|`` given by a radial profile."""

    def radial(self, r):
        raise NotImplementedError

    def radial_inverse(self, s):
        raise NotImplementedError

    def radial_derivative(self, r):
        raise NotImplementedError

    interfaces = ()

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        if r == 0.0:
            return np.zeros(3)
        return self.radial(r) / r * x

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        s = np.linalg.norm(y)
        if s == 0.0:
            return np.zeros(3)
        return self.radial_inverse(s) / s * y

    def jacobian(self, x):
        """Analytic ``DF(x)``; raises on the interface spheres of the map."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        _check_off_interfaces(r, self.interfaces)
        if r == 0.0:
            return self.radial_derivative(0.0) * np.eye(3)
        u = x / r
        radial = np.outer(u, u)
        return self.radial_derivative(r) * radial + self.radial(r) / r * (np.eye(3) - radial)


class BlowupMap(RadialMap):
    """The regularized blow-up map with parameter ``rho`` in (0, 1)."""

    def __init__(self, rho):
        _check_rho(rho)
        self.rho = float(rho)
        self.interfaces = (self.rho, 2.0)

    def __repr__(self):
        return f"BlowupMap(rho={self.rho})"

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x) >= 2.0:
            return x.copy()
        return super().forward(x)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if np.linalg.norm(y) >= 2.0:
            return y.copy()
        return super().inverse(y)

    def radial(self, r):
        rho = self.rho
        if r >= 2.0:
            return r
        if r >= rho:
            return (2.0 - 2.0 * rho) / (2.0 - rho) + r / (2.0 - rho)
        return r / rho

    def radial_inverse(self, s):
        rho = self.rho
        if s >= 2.0:
            return s
        if s >= 1.0:
            return (2.0 - rho) * s - (2.0 - 2.0 * rho)
        return rho * s

    def radial_derivative(self, r):
        if r > 2.0:
            return 1.0
        if r > self.rho:
            return 1.0 / (2.0 - self.rho)
        return 1.0 / self.rho


class ScalingMap(RadialMap):
    """``x -> scale * x``."""

    def __init__(self, scale):
        if scale == 0:
            raise SingularMapError("scaling map with zero factor")
        self.scale = float(scale)

    def __repr__(self):
        return f"ScalingMap({self.scale})"

    def radial(self, r):
        return self.scale * r

    def radial_inverse(self, s):
        return s / self.scale

    def radial_derivative(self, r):
        return self.scale


class IdentityMap(ScalingMap):
    def __init__(self):
        super().__init__(1.0)

    def __repr__(self):
        return "IdentityMap()"


def forward_map(rho, x):
    return BlowupMap(rho).forward(x)


def inverse_map(rho, y):
    return BlowupMap(rho).inverse(y)


def jacobian(rho, x):
    return BlowupMap(rho).jacobian(x)


def _as_tensor_field(A):
    if callable(A):
        return A
    A = np.asarray(A, dtype=float)
    return lambda x: A


def push_forward_tensor(A, fmap):
    """Return ``y -> (DF A DF^T / |det DF|)(F^{-1}(y))`` as a callable."""
    field = _as_tensor_field(A)

    def pushed(y):
        x = fmap.inverse(y)
        D = fmap.jacobian(x)
        det = np.linalg.det(D)
        if det == 0.0:
            raise SingularMapError(f"singular Jacobian at {x}")
        return D @ field(x) @ D.T / abs(det)

    return pushed


def pull_back_field(E_hat, fmap):
    """``x -> DF(x)^T E_hat(F(x))``."""

    def pulled(x):
        D = fmap.jacobian(x)
        return D.T @ E_hat(fmap.forward(x))

    return pulled


def push_forward_field(E, fmap):
    """``y -> DF(x)^{-T} E(x)`` with ``x = F^{-1}(y)``; inverse of :func:`pull_back_field`."""

    def pushed(y):
        x = fmap.inverse(y)
        D = fmap.jacobian(x)
        return np.linalg.solve(D.T, E(x))

    return pushed


@dataclass(frozen=True)
class MaterialTensor:
    """Relative permittivity, permeability and conductivity at a point."""

    eps: np.ndarray
    mu: np.ndarray
    sigma: float

    def effective_eps(self, omega):
        """Complex permittivity ``eps + i sigma / omega``."""
        if omega <= 0:
            raise InvalidParameterError("omega must be positive")
        return self.eps + 1j * self.sigma / omega * np.eye(3)

    def check_elliptic(self, Lambda):
        """True if eps and mu are symmetric with spectra inside [1/Lambda, Lambda]."""
        for T in (self.eps, self.mu):
            if not np.allclose(T, T.T, rtol=0, atol=1e-12):
                return False
            w = np.linalg.eigvalsh(T)
            if w.min() < 1.0 / Lambda - 1e-12 or w.max() > Lambda + 1e-12:
                return False
        return True


def _iso(eps, mu, sigma):
    return MaterialTensor(eps * np.eye(3), mu * np.eye(3), float(sigma))


@dataclass(frozen=True)
class MediumDescriptor:
    """One of the three pictures of the cloaked configuration.

    The cloaked core is homogeneous and isotropic with scalar ``eps_core`` and
    ``mu_core``.
    """

    picture: str
    rho: float
    eps_core: float = 1.0
    mu_core: float = 1.0

    def __post_init__(self):
        if self.picture not in PICTURES:
            raise InvalidParameterError(f"picture must be one of {PICTURES}")
        _check_rho(self.rho)
        if self.eps_core <= 0 or self.mu_core <= 0:
            raise InvalidParameterError("core eps and mu must be positive scalars")

    @property
    def interfaces(self):
        if self.picture == "cloak":
            return (0.5, 1.0, 2.0)
        if self.picture == "small-inclusion":
            return (self.rho / 2.0, self.rho)
        return (0.5, 1.0)


def eval_medium(descriptor, x):
    """Material triple of ``descriptor`` at point ``x``."""
    d = descriptor
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    _check_off_interfaces(r, d.interfaces)
    rho = d.rho
    if d.picture == "cloak":
        if r > 2.0:
            return _iso(1.0, 1.0, 0.0)
        if r > 1.0:
            T = push_forward_tensor(np.eye(3), BlowupMap(rho))(x)
            return MaterialTensor(T, T.copy(), 0.0)
        if r > 0.5:
            return _iso(1.0, 1.0, 1.0)
        return _iso(d.eps_core, d.mu_core, 0.0)
    if d.picture == "small-inclusion":
        if r > rho:
            return _iso(1.0, 1.0, 0.0)
        if r > rho / 2.0:
            return _iso(1.0 / rho, 1.0 / rho, 1.0 / rho)
        return _iso(d.eps_core / rho, d.mu_core / rho, 0.0)
    if r > 1.0:
        return _iso(rho, rho, 0.0)
    if r > 0.5:
        return _iso(1.0, 1.0, 1.0)
    return _iso(d.eps_core, d.mu_core, 0.0)
