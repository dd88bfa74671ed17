"""Model domains in C and C^2 and quadrature rules over them.

Points are complex numbers. A rule stores its nodes as a complex array of
shape ``(n, dim)`` so the same code paths serve one and two variables.

Quadrature schemes
------------------
* disc / annulus : polar tensor grid, Gauss-Legendre in the radius and the
  trapezoid rule in the angle. Monomial moments are exact up to high degree.
* lens           : Cartesian midpoint grid clipped by both membership tests,
  boundary cells subdivided once.
* bidisc         : tensor product of the two factor disc rules.
* ``scheme="grid"`` on any planar domain: plain clipped lattice with uniform
  weights. The dbar solvers need the lattice structure for finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from .errors import GeometryError

# "p on the boundary" tolerance, relative to the domain diameter
BOUNDARY_TOL = 1e-9
SUBDIVISION = 4


@dataclass(frozen=True)
class UnitDisc:
    radius: float = 1.0

    dimension = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("disc radius must be positive")

    @property
    def label(self) -> str:
        return f"disc(r={self.radius:g})"

    def contains_points(self, z):
        return np.abs(z) < self.radius

    def boundary_distance(self, z):
        return np.abs(np.abs(z) - self.radius)

    def bbox(self):
        r = self.radius
        return (-r, r, -r, r)

    def measure(self) -> float:
        return math.pi * self.radius**2

    @property
    def diameter(self) -> float:
        return 2 * self.radius


@dataclass(frozen=True)
class Annulus:
    inner_radius: float
    outer_radius: float

    dimension = 1

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise GeometryError("annulus needs 0 < inner_radius < outer_radius")

    @property
    def label(self) -> str:
        return f"annulus({self.inner_radius:g},{self.outer_radius:g})"

    def contains_points(self, z):
        a = np.abs(z)
        return (a > self.inner_radius) & (a < self.outer_radius)

    def boundary_distance(self, z):
        a = np.abs(z)
        return np.minimum(np.abs(a - self.inner_radius), np.abs(a - self.outer_radius))

    def bbox(self):
        r = self.outer_radius
        return (-r, r, -r, r)

    def measure(self) -> float:
        return math.pi * (self.outer_radius**2 - self.inner_radius**2)

    @property
    def diameter(self) -> float:
        return 2 * self.outer_radius


@dataclass(frozen=True)
class Lens:
    """The localization set ``base ∩ B(center, radius)`` with ``center`` on the base boundary."""

    base: Union[UnitDisc, Annulus]
    center: complex
    radius: float

    dimension = 1

    def __post_init__(self):
        if getattr(self.base, "dimension", None) != 1 or isinstance(self.base, Lens):
            raise GeometryError("lens base must be a disc or an annulus")
        if not self.radius > 0:
            raise GeometryError("lens radius must be positive")
        object.__setattr__(self, "center", complex(self.center))
        if self.base.boundary_distance(self.center) > BOUNDARY_TOL * self.base.diameter:
            raise GeometryError(
                f"lens center {self.center} is not on the boundary of {self.base.label}")

    @property
    def label(self) -> str:
        p = self.center
        return f"lens({self.base.label},p={p.real:g}{p.imag:+g}i,r={self.radius:g})"

    def contains_points(self, z):
        return self.base.contains_points(z) & (np.abs(z - self.center) < self.radius)

    def boundary_distance(self, z):
        ball = np.abs(np.abs(z - self.center) - self.radius)
        return np.minimum(self.base.boundary_distance(z), ball)

    def bbox(self):
        x0, x1, y0, y1 = self.base.bbox()
        p, r = self.center, self.radius
        return (max(x0, p.real - r), min(x1, p.real + r),
                max(y0, p.imag - r), min(y1, p.imag + r))

    def measure(self) -> Optional[float]:
        return None

    @property
    def diameter(self) -> float:
        x0, x1, y0, y1 = self.bbox()
        return math.hypot(x1 - x0, y1 - y0)


@dataclass(frozen=True)
class Bidisc:
    radius1: float = 1.0
    radius2: float = 1.0

    dimension = 2

    def __post_init__(self):
        if not (self.radius1 > 0 and self.radius2 > 0):
            raise GeometryError("bidisc radii must be positive")

    @property
    def factors(self):
        return (UnitDisc(self.radius1), UnitDisc(self.radius2))

    @property
    def label(self) -> str:
        return f"bidisc({self.radius1:g},{self.radius2:g})"

    def contains_points(self, zw):
        zw = np.asarray(zw)
        return (np.abs(zw[..., 0]) < self.radius1) & (np.abs(zw[..., 1]) < self.radius2)

    def measure(self) -> float:
        return math.pi**2 * self.radius1**2 * self.radius2**2

    @property
    def diameter(self) -> float:
        return 2 * math.hypot(self.radius1, self.radius2)


Domain = Union[UnitDisc, Annulus, Lens, Bidisc]


def contains(domain: Domain, z) -> bool:
    """Membership of a single point: a complex number in C, a pair in C^2."""
    if domain.dimension == 1:
        if np.ndim(z) != 0:
            raise ValueError(f"{domain.label} is one-dimensional; got a point of shape {np.shape(z)}")
        return bool(domain.contains_points(complex(z)))
    if np.shape(z) != (2,):
        raise ValueError(f"{domain.label} is two-dimensional; got a point of shape {np.shape(z)}")
    return bool(domain.contains_points(np.asarray(z, dtype=complex)))


@dataclass(frozen=True)
class Lattice:
    """Integer grid coordinates of the nodes of a clipped Cartesian rule.

    Node ``j`` sits at ``origin + spacing * (ij[j, 0] + 1j * ij[j, 1])``.
    """

    origin: complex
    spacing: float
    shape: tuple
    ij: np.ndarray = field(repr=False)

    def index_grid(self) -> np.ndarray:
        """Array of ``shape`` holding the node index at each lattice site, -1 outside."""
        grid = np.full(self.shape, -1, dtype=np.int64)
        grid[self.ij[:, 0], self.ij[:, 1]] = np.arange(len(self.ij))
        return grid


@dataclass(frozen=True)
class QuadratureRule:
    domain: Domain
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    resolution: int
    scheme: str
    lattice: Optional[Lattice] = field(default=None, repr=False)

    def __len__(self):
        return len(self.weights)

    @property
    def dimension(self) -> int:
        return self.nodes.shape[1]

    @property
    def z(self) -> np.ndarray:
        """Nodes of a planar rule as a flat complex array."""
        return self.nodes[:, 0]

    def total_weight(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values) -> complex:
        return np.dot(self.weights, values)

    def norm(self, values) -> float:
        return float(np.sqrt(np.dot(self.weights, np.abs(values) ** 2)))


def _polar_rule(domain, resolution: int, r0: float, r1: float) -> QuadratureRule:
    n_r = max(resolution // 2, 4)
    n_t = resolution
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (r1 - r0) * x + 0.5 * (r1 + r0)
    wr = 0.5 * (r1 - r0) * w * r
    theta = 2 * np.pi * np.arange(n_t) / n_t
    nodes = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = np.repeat(wr * (2 * np.pi / n_t), n_t)
    return QuadratureRule(domain, nodes[:, None], weights, resolution, "polar")


def _grid_geometry(domain, resolution: int):
    x0, x1, y0, y1 = domain.bbox()
    h = max(x1 - x0, y1 - y0) / resolution
    nx = max(int(math.ceil((x1 - x0) / h - 1e-12)), 1)
    ny = max(int(math.ceil((y1 - y0) / h - 1e-12)), 1)
    # center the lattice on the box so symmetric domains get symmetric grids
    ox = 0.5 * (x0 + x1) - 0.5 * nx * h
    oy = 0.5 * (y0 + y1) - 0.5 * ny * h
    return complex(ox, oy), h, nx, ny


def _cell_centers(origin, h, nx, ny):
    i = np.arange(nx)
    j = np.arange(ny)
    return origin + h * ((i[:, None] + 0.5) + 1j * (j[None, :] + 0.5))


def lattice_rule(domain, resolution: int) -> QuadratureRule:
    """Cell-center rule on a clipped lattice with uniform weights ``h^2``."""
    if domain.dimension != 1:
        raise ValueError("lattice rules exist only for planar domains")
    origin, h, nx, ny = _grid_geometry(domain, resolution)
    # grid points sit at cell centers, so shift the origin to the first center
    centers = _cell_centers(origin, h, nx, ny)
    mask = domain.contains_points(centers)
    ij = np.argwhere(mask)
    nodes = centers[ij[:, 0], ij[:, 1]]
    lattice = Lattice(origin + 0.5 * h * (1 + 1j), h, (nx, ny), ij)
    weights = np.full(len(nodes), h * h)
    return QuadratureRule(domain, nodes[:, None], weights, resolution, "grid", lattice)


def _clipped_rule(domain, resolution: int) -> QuadratureRule:
    origin, h, nx, ny = _grid_geometry(domain, resolution)
    centers = _cell_centers(origin, h, nx, ny)
    corners = origin + h * (np.arange(nx + 1)[:, None] + 1j * np.arange(ny + 1)[None, :])
    c_in = domain.contains_points(corners)
    m_in = domain.contains_points(centers)
    votes = (c_in[:-1, :-1].astype(int) + c_in[1:, :-1] + c_in[:-1, 1:] + c_in[1:, 1:] + m_in)
    inner = votes == 5
    mixed = (votes > 0) & ~inner

    nodes = [centers[inner]]
    weights = [np.full(int(inner.sum()), h * h)]
    s = SUBDIVISION
    offsets = ((np.arange(s)[:, None] + 0.5) + 1j * (np.arange(s)[None, :] + 0.5)).ravel() * (h / s)
    cell_origins = (centers[mixed] - 0.5 * h * (1 + 1j))
    sub = (cell_origins[:, None] + offsets[None, :]).ravel()
    sub = sub[domain.contains_points(sub)]
    nodes.append(sub)
    weights.append(np.full(len(sub), (h / s) ** 2))
    return QuadratureRule(domain, np.concatenate(nodes)[:, None], np.concatenate(weights),
                          resolution, "clipped")


def _product_rule(domain: Bidisc, resolution: int) -> QuadratureRule:
    a = _polar_rule(None, resolution, 0.0, domain.radius1)
    b = _polar_rule(None, resolution, 0.0, domain.radius2)
    na, nb = len(a), len(b)
    nodes = np.empty((na * nb, 2), dtype=complex)
    nodes[:, 0] = np.repeat(a.z, nb)
    nodes[:, 1] = np.tile(b.z, na)
    weights = np.outer(a.weights, b.weights).ravel()
    return QuadratureRule(domain, nodes, weights, resolution, "product")


def build_quadrature(domain: Domain, resolution: int, scheme: Optional[str] = None) -> QuadratureRule:
    """Quadrature rule with positive weights whose nodes all lie inside ``domain``.

    ``scheme`` may be ``"grid"`` to force a plain lattice rule on a planar
    domain; by default the scheme follows the domain kind (see module doc).
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    if isinstance(domain, Lens) and not flood_fill_connected(domain, resolution):
        raise GeometryError(f"{domain.label} is not connected at resolution {resolution}")
    if scheme == "grid":
        return lattice_rule(domain, resolution)
    if scheme not in (None, "default"):
        raise ValueError(f"unknown quadrature scheme {scheme!r}")
    if isinstance(domain, UnitDisc):
        return _polar_rule(domain, resolution, 0.0, domain.radius)
    if isinstance(domain, Annulus):
        return _polar_rule(domain, resolution, domain.inner_radius, domain.outer_radius)
    if isinstance(domain, Lens):
        return _clipped_rule(domain, resolution)
    if isinstance(domain, Bidisc):
        return _product_rule(domain, resolution)
    raise TypeError(f"unsupported domain {domain!r}")


def flood_fill_connected(domain: Domain, resolution: int) -> bool:
    """True iff the grid cells whose centers lie in ``domain`` form one 4-connected component."""
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    if isinstance(domain, Bidisc):
        return all(flood_fill_connected(f, resolution) for f in domain.factors)
    origin, h, nx, ny = _grid_geometry(domain, resolution)
    mask = domain.contains_points(_cell_centers(origin, h, nx, ny))
    _, count = ndimage.label(mask)
    return count == 1
