"""Gaussian random polynomial ensembles and their two-point kernels.

An ensemble of degree-N polynomials f(z) = sum_i c_i z^i is defined by
per-coefficient variances sigma_i^2, with the coefficients drawn as
independent complex Gaussians, E[c_i conj(c_j)] = delta_ij sigma_i^2.
Two ensembles are built in:

  kac      sigma_i^2 = 1          G(z1, z2b) = (1 - w^(N+1)) / (1 - w)
  kostlan  sigma_i^2 = C(N, i)    G(z1, z2b) = (1 + w)^N

with w = z1 * z2b.  Everything downstream (zero densities, conditioning)
is driven by the kernel G, not by the measure normalization.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConditioningError, InvalidDegreeError, VarianceOverflowError
from .rng import complex_normals, stream

# Largest N for which the central Kostlan binomial C(N, N/2) still fits in a
# double (first overflow is at N = 1030).
KOSTLAN_DEGREE_CAP = 1029

# Below this distance from w = 1 the Kac closed form loses too many digits
# to cancellation; fall back to the explicit partial sum.
_KAC_SINGULAR_TOL = 1e-8


class EnsembleKind(enum.Enum):
    KAC = "kac"
    KOSTLAN = "kostlan"


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    degree: int
    variances: np.ndarray  # length degree+1, all > 0

    def __post_init__(self):
        v = np.asarray(self.variances, dtype=float)
        if v.shape != (self.degree + 1,):
            raise ValueError(f"variances must have length N+1={self.degree + 1}")
        if not np.all(v > 0) or not np.all(np.isfinite(v)):
            raise ValueError("variances must be positive and finite")
        object.__setattr__(self, "variances", v)


@dataclass(frozen=True)
class SampledSection:
    """One draw from an ensemble: the coefficient vector of f."""

    coefficients: np.ndarray  # complex, length N+1


@dataclass(frozen=True)
class KernelEval:
    """G(z1, z2b) and, when requested, its first mixed derivatives."""

    value: complex
    d1: complex | None = None       # dG/dz1
    d2bar: complex | None = None    # dG/dz2bar
    d1d2bar: complex | None = None  # d^2 G / dz1 dz2bar


def build_ensemble(kind: EnsembleKind | str, degree: int) -> EnsembleSpec:
    """Construct the variance vector for the named ensemble.

    Kostlan binomials are computed in exact integer arithmetic and then
    converted; degrees past KOSTLAN_DEGREE_CAP raise VarianceOverflowError
    because the central binomial no longer fits in a double.
    """
    kind = EnsembleKind(kind)
    if degree < 1:
        raise InvalidDegreeError(f"degree must be >= 1, got {degree}")
    if kind is EnsembleKind.KAC:
        var = np.ones(degree + 1)
    else:
        if degree > KOSTLAN_DEGREE_CAP:
            raise VarianceOverflowError(
                f"Kostlan binomials overflow double precision for N={degree} "
                f"(cap {KOSTLAN_DEGREE_CAP})"
            )
        var = np.array([float(math.comb(degree, i)) for i in range(degree + 1)])
    return EnsembleSpec(kind, degree, var)


def _power_sums(e: EnsembleSpec, w: complex) -> tuple[complex, complex, complex]:
    """S(w), S'(w), S''(w) for S(w) = sum_i sigma_i^2 w^i, by Horner."""
    s = s1 = s2 = 0.0 + 0.0j
    for i in range(e.degree, -1, -1):
        s2 = s2 * w + s1 * 2.0
        s1 = s1 * w + s
        s = s * w + e.variances[i]
    return s, s1, s2


def kernel(e: EnsembleSpec, z1: complex, z2bar: complex,
           with_derivs: bool = False) -> KernelEval:
    """Two-point function G(z1, z2bar) = sum_i sigma_i^2 (z1 z2bar)^i.

    The value uses the closed form per ensemble (with a partial-sum branch
    for Kac near z1*z2bar = 1); derivative terms are evaluated by direct
    summation.
    """
    if not (np.isfinite(z1) and np.isfinite(z2bar)):
        raise ValueError("kernel requires finite arguments")
    w = complex(z1) * complex(z2bar)
    if e.kind is EnsembleKind.KAC:
        if abs(1.0 - w) < _KAC_SINGULAR_TOL:
            value = _power_sums(e, w)[0]
        else:
            value = (1.0 - w ** (e.degree + 1)) / (1.0 - w)
    else:
        value = (1.0 + w) ** e.degree
    if not with_derivs:
        return KernelEval(value=value)
    _, s1, s2 = _power_sums(e, w)
    return KernelEval(
        value=value,
        d1=complex(z2bar) * s1,
        d2bar=complex(z1) * s1,
        d1d2bar=s1 + w * s2,
    )


def conditioned_kernel(e: EnsembleSpec, z: complex, z1: complex, z2bar: complex) -> complex:
    """Covariance of f(z1), conj(f(z2)) conditioned on f(z) = 0.

    G_z(z1, z2b) = G(z1, z2b) - G(z1, zb) G(z, z2b) / G(z, zb).
    """
    g_zz = kernel(e, z, np.conj(z)).value
    if abs(g_zz) == 0.0:
        raise DegenerateConditioningError(f"G(z, zbar) = 0 at z={z}")
    return (
        kernel(e, z1, z2bar).value
        - kernel(e, z1, np.conj(z)).value * kernel(e, z, z2bar).value / g_zz
    )


def sample_section(e: EnsembleSpec, seed: int, index: int = 0) -> SampledSection:
    """Draw one polynomial; fully determined by (seed, index)."""
    rng = stream(seed, index)
    scales = np.sqrt(e.variances)
    return SampledSection(coefficients=complex_normals(rng, scales))


def evaluate_section(s: SampledSection, z) -> complex | np.ndarray:
    """Horner evaluation of sum_i c_i z^i; accepts scalar or array z."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    for c in s.coefficients[::-1]:
        out = out * z + c
    return out if out.shape else complex(out)
