"""Expected zero densities and counts for the Gaussian ensembles.

All densities derive from d_mu0 = (1/pi) d ddbar log G(z, zbar).  For the
two built-in kernels this has closed forms:

  kac      (1/pi) [ 1/(1-u)^2 - (N+1)^2 u^N / (1 - u^(N+1))^2 ],  u = |z|^2
  kostlan  N / (pi (1 + u)^2)

The apparent singularity of the Kac form at |z| = 1 is removable; inside a
narrow band around it we evaluate the same quantity through the power sums
S, S', S'' of the variance series, which has no cancellation.  A central
finite-difference Laplacian of log G is kept as an independent
cross-validation route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .ensembles import EnsembleKind, EnsembleSpec, _power_sums, kernel
from .errors import QuadratureError, RandcritError

# Width of the band around |z| = 1 (in u = |z|^2) where the Kac closed form
# is replaced by the cancellation-free power-sum evaluation.
_COMPLEX_BRANCH_TOL = 1e-4
# Same for the real-axis Kac density, per-contract value.
_REAL_BRANCH_TOL = 1e-5
# Roundoff clamp for the sqrt argument of the real density.
_SQRT_CLAMP = -1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell grid over [xmin, xmax] x [ymin, ymax]."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("grid ranges must be nonempty")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("bin counts must be >= 1")

    @property
    def cell_area(self) -> float:
        return ((self.xmax - self.xmin) / self.nx) * ((self.ymax - self.ymin) / self.ny)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        dx = (self.xmax - self.xmin) / self.nx
        dy = (self.ymax - self.ymin) / self.ny
        xs = self.xmin + dx * (np.arange(self.nx) + 0.5)
        ys = self.ymin + dy * (np.arange(self.ny) + 0.5)
        return xs, ys


@dataclass(frozen=True)
class DensityGrid:
    grid: GridSpec
    values: np.ndarray  # (nx, ny), zeros per unit area

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.nx, self.grid.ny):
            raise ValueError("values shape does not match grid")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("density values must be finite and >= 0")

    @property
    def total_mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)

    def to_csv(self, path) -> None:
        """Write rows `x,y,density`, row-major (x outer, y inner)."""
        xs, ys = self.grid.centers()
        with open(path, "w", newline="\n") as fh:
            fh.write("x,y,density\n")
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    fh.write(f"{x:.17g},{y:.17g},{self.values[i, j]:.17g}\n")


@dataclass(frozen=True)
class Annulus:
    r0: float
    r1: float  # may be inf

    def __post_init__(self):
        if not (0 <= self.r0 < self.r1):
            raise ValueError("need 0 <= r0 < r1")


@dataclass(frozen=True)
class Rectangle:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    @property
    def is_empty(self) -> bool:
        return self.xmax <= self.xmin or self.ymax <= self.ymin


def _kac_radial_density(degree: int, u: float) -> float:
    """Kac zero density at u = |z|^2, stable on both sides of u = 1."""
    m = degree + 1
    if abs(1.0 - u) < _COMPLEX_BRANCH_TOL:
        s, s1, s2 = _power_sums_real(degree, u)
        return (s1 / s + u * (s2 * s - s1 * s1) / (s * s)) / math.pi
    t1 = 1.0 / (1.0 - u) ** 2
    if u < 1.0:
        t2 = m * m * u ** (m - 1) / (1.0 - u ** m) ** 2
    else:
        # same quantity rewritten in powers of 1/u to avoid overflow
        t2 = m * m * u ** (-m - 1.0) / (1.0 - u ** (-m)) ** 2
    return (t1 - t2) / math.pi


def _power_sums_real(degree: int, u: float) -> tuple[float, float, float]:
    s = s1 = s2 = 0.0
    for _ in range(degree, -1, -1):
        s2 = s2 * u + 2.0 * s1
        s1 = s1 * u + s
        s = s * u + 1.0
    return s, s1, s2


def complex_zero_density(e: EnsembleSpec, z: complex) -> float:
    """Expected zeros per unit area at z, from the closed-form kernels."""
    if not np.isfinite(z):
        raise ValueError("z must be finite")
    u = abs(complex(z)) ** 2
    if e.kind is EnsembleKind.KAC:
        return _kac_radial_density(e.degree, u)
    return e.degree / (math.pi * (1.0 + u) ** 2)


def finite_difference_density(e: EnsembleSpec, z: complex, h: float = 1e-4,
                              richardson_check: bool = True) -> float:
    """(1/pi) d ddbar log G by a central 5-point Laplacian, step h.

    Cross-validation route for complex_zero_density.  With
    richardson_check, disagreement beyond 1e-4 relative between steps h
    and 2h raises QuadratureError (flags ill-conditioning).
    """
    def lap(step: float) -> float:
        z0 = complex(z)
        vals = []
        for dz in (step, -step, 1j * step, -1j * step, 0.0):
            w = z0 + dz
            g = kernel(e, w, np.conj(w)).value.real
            vals.append(math.log(g))
        return (vals[0] + vals[1] + vals[2] + vals[3] - 4.0 * vals[4]) / step**2

    # d ddbar = (1/4) Laplacian
    d1 = lap(h) / (4.0 * math.pi)
    if richardson_check:
        d2 = lap(2.0 * h) / (4.0 * math.pi)
        scale = max(abs(d1), 1e-12)
        if abs(d1 - d2) / scale > 1e-4:
            raise QuadratureError(
                f"finite-difference density ill-conditioned at z={z}: "
                f"h={d1}, 2h={d2}"
            )
    return d1


def real_zero_density(degree: int, t: float) -> float:
    """Kac real-axis zero density (zeros per unit length) at t."""
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    u = t * t
    m = degree + 1
    if abs(1.0 - u) < _REAL_BRANCH_TOL:
        s, s1, s2 = _power_sums_real(degree, u)
        arg = s1 / s + u * (s2 * s - s1 * s1) / (s * s)
    else:
        t1 = 1.0 / (1.0 - u) ** 2
        if u < 1.0:
            t2 = m * m * u ** (m - 1) / (1.0 - u ** m) ** 2
        else:
            t2 = m * m * u ** (-m - 1.0) / (1.0 - u ** (-m)) ** 2
        arg = t1 - t2
    if arg < 0:
        if arg < _SQRT_CLAMP:
            raise RandcritError(f"negative sqrt argument {arg} at t={t}")
        arg = 0.0
    return math.sqrt(arg) / math.pi


def expected_real_zeros(degree: int) -> float:
    """E_N: expected real zeros of a real Kac polynomial, by quadrature.

    The density is invariant under t -> 1/t (verified as a property test),
    so the full-line integral is twice the integral over [-1, 1], i.e.
    four times the integral over [0, 1].
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    val, err = integrate.quad(
        lambda t: real_zero_density(degree, t), 0.0, 1.0,
        epsabs=2.5e-7, epsrel=1e-9, limit=400,
        points=[1.0 - 1.0 / (degree + 1), 1.0],
    )
    if err > 2.5e-7 * 4:
        raise QuadratureError(f"E_N quadrature error estimate {4 * err} too large")
    return 4.0 * val


def region_mass(e: EnsembleSpec, region: Annulus | Rectangle) -> float:
    """Expected number of zeros in the region, by adaptive quadrature."""
    if isinstance(region, Annulus):
        return _annulus_mass(e, region)
    if isinstance(region, Rectangle):
        if region.is_empty:
            return 0.0
        val, err = integrate.dblquad(
            lambda y, x: complex_zero_density(e, x + 1j * y),
            region.xmin, region.xmax,
            lambda _: region.ymin, lambda _: region.ymax,
            epsabs=1e-10, epsrel=1e-6,
        )
        return val
    raise TypeError(f"unsupported region type {type(region)!r}")


def _annulus_mass(e: EnsembleSpec, ann: Annulus) -> float:
    # both built-in densities are radial
    def radial(r: float) -> float:
        return 2.0 * math.pi * r * complex_zero_density(e, r)

    pieces = []
    r0, r1 = ann.r0, ann.r1
    finite_top = min(r1, max(4.0, 2.0 * r0 if np.isfinite(r0) else 4.0))
    if np.isinf(r1):
        cut = max(r0, finite_top)
        if cut > r0:
            pieces.append((r0, cut))
        # tail via r = 1/s
        tail, terr = integrate.quad(
            lambda s: radial(1.0 / s) / s**2, 1e-12, 1.0 / cut,
            epsabs=1e-10, epsrel=1e-6, limit=300,
        )
    else:
        pieces.append((r0, r1))
        tail = 0.0
    total = tail
    for a, b in pieces:
        if b <= a:
            continue
        interior = [r for r in (1.0,) if a < r < b]  # Kac density peaks at r=1
        val, err = integrate.quad(
            radial, a, b, epsabs=1e-10, epsrel=1e-6, limit=400,
            points=interior or None,
        )
        total += val
    return total


def density_grid(e: EnsembleSpec, grid: GridSpec) -> DensityGrid:
    """Analytic density evaluated at the cell centers of the grid."""
    xs, ys = grid.centers()
    vals = np.empty((grid.nx, grid.ny))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            vals[i, j] = complex_zero_density(e, x + 1j * y)
    return DensityGrid(grid=grid, values=vals)
