"""Weights with a large complex Hessian on a thin shell inside ``B(p, r)``.

``psi(z) = gamma(rho(z))`` with ``gamma(t) = exp(2t) - 1`` and
``rho(z) = (|z-p|^2 - r^2) / eps``. Then ``-1 <= psi <= 0`` on the ball,
``psi = 0`` on the sphere and ``psi > 0`` outside. The complex Hessian is

    d^2 psi / dz dzbar = gamma''(rho) |z-p|^2 / eps^2 + gamma'(rho) / eps,

which is at least ``1/eps`` wherever ``gamma'(rho) >= 1``, i.e. on the
shell ``r - delta <= |z-p| <= r`` with ``delta = r - sqrt(r^2 - eps ln(2)/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PROFILE = "exp(2t)-1"


def gamma(t):
    return np.expm1(2 * np.asarray(t, dtype=float))


def gamma_prime(t):
    return 2 * np.exp(2 * np.asarray(t, dtype=float))


def gamma_second(t):
    return 4 * np.exp(2 * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class ShellWeight:
    epsilon: float
    center: complex
    radius: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("shell weight needs epsilon > 0")
        if not self.radius > 0:
            raise ValueError("shell weight needs r > 0")
        object.__setattr__(self, "center", complex(self.center))

    def rho(self, z):
        return (np.abs(np.asarray(z) - self.center) ** 2 - self.radius**2) / self.epsilon

    def __call__(self, z):
        return gamma(self.rho(z))

    psi = __call__

    def dbar(self, z):
        """``d psi / dzbar = gamma'(rho) (z - p) / eps``."""
        z = np.asarray(z, dtype=complex)
        return gamma_prime(self.rho(z)) * (z - self.center) / self.epsilon

    def complex_hessian(self, z):
        d2 = np.abs(np.asarray(z) - self.center) ** 2
        t = self.rho(z)
        return gamma_second(t) * d2 / self.epsilon**2 + gamma_prime(t) / self.epsilon

    def fd_hessian(self, z, step: float = 1e-4):
        """Complex Hessian from the five-point Laplacian, ``Delta psi / 4``."""
        z = np.asarray(z, dtype=complex)
        h = step
        lap = (self(z + h) + self(z - h) + self(z + 1j * h) + self(z - 1j * h) - 4 * self(z)) / h**2
        return lap / 4

    @property
    def delta(self) -> float:
        """Width of the shell on which the Hessian is at least ``1/eps``."""
        inner = self.radius**2 - self.epsilon * math.log(2) / 2
        return self.radius - math.sqrt(max(inner, 0.0))

    def shell_points(self, n_radii: int = 16, n_angles: int = 64) -> np.ndarray:
        """Polar sample of the closed shell ``r - delta <= |z - p| <= r``."""
        rad = np.linspace(self.radius - self.delta, self.radius, n_radii)
        ang = 2 * np.pi * np.arange(n_angles) / n_angles
        return (self.center + rad[:, None] * np.exp(1j * ang)[None, :]).ravel()

    def metadata(self) -> dict:
        return {"epsilon": self.epsilon, "center": [self.center.real, self.center.imag],
                "radius": self.radius, "profile": PROFILE, "shell_width": self.delta}


def shell_weight(epsilon: float, p=0.0, r: float = 1.0) -> ShellWeight:
    return ShellWeight(float(epsilon), complex(p), float(r))
