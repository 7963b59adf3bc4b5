"""Tensor-product quadrature rules on intervals, spheres and spherical shells."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a=-1.0, b=1.0):
    """Gauss-Legendre nodes and weights mapped to ``[a, b]``."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


@dataclass(frozen=True)
class SphereRule:
    """Product rule on the unit sphere.

    Gauss-Legendre in ``cos(theta)`` times the trapezoid rule in ``phi``;
    exact for spherical harmonics of degree below ``2 * n_theta``.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    @property
    def directions(self):
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)], axis=-1)

    def __len__(self):
        return self.weights.size


def sphere_rule(n_theta, n_phi=None):
    n_phi = 2 * n_theta if n_phi is None else n_phi
    ct, wt = gauss_legendre(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    th = np.arccos(ct)
    T, P = np.meshgrid(th, phi, indexing="ij")
    W = np.outer(wt, np.full(n_phi, 2.0 * np.pi / n_phi))
    return SphereRule(T.ravel(), P.ravel(), W.ravel())


@dataclass(frozen=True)
class ShellRule:
    """Nodes and weights for a volume integral over ``R_in < |x| < R_out``."""

    points: np.ndarray
    weights: np.ndarray
    order: int


def shell_rule(r_in, r_out, order, center=(0.0, 0.0, 0.0)):
    """Radial Gauss-Legendre (``order`` nodes) times a sphere rule.

    The angular rule uses ``order`` polar and ``2 * order`` azimuthal nodes.
    """
    r, wr = gauss_legendre(order, r_in, r_out)
    sph = sphere_rule(order)
    dirs = sph.directions
    pts = r[:, None, None] * dirs[None, :, :]
    w = (wr * r**2)[:, None] * sph.weights[None, :]
    pts = pts.reshape(-1, 3) + np.asarray(center, dtype=float)
    return ShellRule(pts, w.ravel(), order)


def ball_rule(radius, order, center=(0.0, 0.0, 0.0)):
    return shell_rule(0.0, radius, order, center)
