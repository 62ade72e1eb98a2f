"""Toy special-geometry period models.

Two closed-form models stand in for Calabi-Yau complex-structure moduli
spaces:

  cubic  one modulus z (Im z > 0), prepotential F = -kappa (X1)^3 / (6 X0)
         in the gauge X0 = 1, periods Pi = (1, z, dF/dX1, dF/dX0)
         = (1, z, -kappa z^2/2, kappa z^3/6); e^{-K} = (4 kappa/3) (Im z)^3,
         metric g = 3/(4 y^2).

  rigid  no complex-structure moduli; the variable is the dilaton-axion
         tau (Im tau > 0) with K = -log(i Pi^dag eta Pi) - log Im tau,
         Pi = (1, i); metric g = 1/(4 y^2).

Symplectic convention: the intersection form eta is fixed per model such
that e^{-K} = i Pi^dag eta Pi is positive on the admissible domain:

  cubic  eta = [[0,0,0,1],[0,0,1,0],[0,-1,0,0],[-1,0,0,0]]
  rigid  eta = [[0,-1],[1,0]]

All covariant calculus (D = d + dK, Christoffel Gamma = g^-1 dg) is in
closed form and cross-checked against finite differences in the tests.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ContractViolationError, DomainError, QuadratureError

# Points closer than this to the real axis are inadmissible (metric blowup).
DOMAIN_MARGIN = 1e-6

_ETA_CUBIC = np.array(
    [[0, 0, 0, 1], [0, 0, 1, 0], [0, -1, 0, 0], [-1, 0, 0, 0]], dtype=np.int64
)
_ETA_RIGID = np.array([[0, -1], [1, 0]], dtype=np.int64)


class ModelKind(enum.Enum):
    CUBIC = "cubic"
    RIGID = "rigid"


@dataclass(frozen=True)
class PeriodModel:
    kind: ModelKind
    kappa: float      # cubic self-coupling; unused for rigid
    n_moduli: int     # complex dimension of the search space (z or tau)
    b3: int
    eta: np.ndarray

    @property
    def is_rigid(self) -> bool:
        return self.kind is ModelKind.RIGID


def cubic_model(kappa: float = 6.0) -> PeriodModel:
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return PeriodModel(ModelKind.CUBIC, kappa, 1, 4, _ETA_CUBIC)


def rigid_model() -> PeriodModel:
    return PeriodModel(ModelKind.RIGID, 0.0, 1, 2, _ETA_RIGID)


def model_from_config(cfg: dict) -> PeriodModel:
    """Build a model from {"kind": ..., "kappa": ...} (JSON-friendly)."""
    kind = ModelKind(cfg["kind"])
    if kind is ModelKind.CUBIC:
        return cubic_model(float(cfg.get("kappa", 6.0)))
    return rigid_model()


def model_config(m: PeriodModel) -> dict:
    cfg = {"kind": m.kind.value, "eta": m.eta.tolist()}
    if m.kind is ModelKind.CUBIC:
        cfg["kappa"] = m.kappa
    return cfg


@dataclass(frozen=True)
class ChargeVector:
    gamma: np.ndarray  # b3 integers

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=np.int64))


@dataclass(frozen=True)
class FluxVector:
    f: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", np.asarray(self.f, dtype=np.int64))
        object.__setattr__(self, "h", np.asarray(self.h, dtype=np.int64))


@dataclass(frozen=True)
class Region:
    """Coordinate rectangle in moduli space (z- or tau-plane)."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    @property
    def is_empty(self) -> bool:
        return self.xmax <= self.xmin or self.ymax <= self.ymin

    def contains(self, p: complex) -> bool:
        return (self.xmin <= p.real <= self.xmax
                and self.ymin <= p.imag <= self.ymax)


def check_admissible(m: PeriodModel, p: complex) -> None:
    if not np.isfinite(p) or p.imag < DOMAIN_MARGIN:
        raise DomainError(f"point {p} outside admissible domain (Im >= {DOMAIN_MARGIN})")


def check_region(m: PeriodModel, region: Region) -> None:
    if region.is_empty:
        return
    if region.ymin < DOMAIN_MARGIN:
        raise DomainError(f"region dips below Im = {DOMAIN_MARGIN}")


# ---------------------------------------------------------------------------
# periods and Kahler data
# ---------------------------------------------------------------------------

def period_vector(m: PeriodModel, p: complex) -> np.ndarray:
    check_admissible(m, p)
    if m.is_rigid:
        return np.array([1.0, 1j])
    k = m.kappa
    z = complex(p)
    return np.array([1.0, z, -k * z**2 / 2.0, k * z**3 / 6.0])


def period_derivatives(m: PeriodModel, p: complex) -> tuple[np.ndarray, np.ndarray]:
    """(dPi/dz, d2Pi/dz2); zero for the rigid model."""
    check_admissible(m, p)
    if m.is_rigid:
        return np.zeros(2, complex), np.zeros(2, complex)
    k = m.kappa
    z = complex(p)
    d1 = np.array([0.0, 1.0, -k * z, k * z**2 / 2.0])
    d2 = np.array([0.0, 0.0, -k, k * z])
    return d1, d2


def period_norm(m: PeriodModel, p: complex) -> float:
    """i Pi^dag eta Pi = e^{-K_period}; positive on the admissible domain."""
    pi = period_vector(m, p)
    val = (1j * np.conj(pi) @ m.eta @ pi).real
    if val <= 0:
        raise DomainError(f"e^-K nonpositive at {p}")
    return float(val)


def kahler_potential(m: PeriodModel, p: complex) -> float:
    """Full K: period part, plus -log(Im tau) for the rigid model."""
    k = -np.log(period_norm(m, p))
    if m.is_rigid:
        k -= np.log(p.imag)
    return float(k)


@dataclass(frozen=True)
class KahlerData:
    """Closed-form local Kahler calculus at one point."""

    K: float
    dK: complex       # dK/dz
    g: float          # metric dz dzbar component
    d2K: complex      # d^2K/dz^2 (holomorphic twice)
    gamma: complex    # Christoffel g^-1 dg


def kahler_data(m: PeriodModel, p: complex) -> KahlerData:
    check_admissible(m, p)
    y = p.imag
    if m.is_rigid:
        # K = -log 2 - log y
        return KahlerData(
            K=kahler_potential(m, p),
            dK=0.5j / y,
            g=1.0 / (4.0 * y**2),
            d2K=-1.0 / (4.0 * y**2),
            gamma=1j / y,
        )
    # K = -log((4 kappa / 3) y^3)
    return KahlerData(
        K=kahler_potential(m, p),
        dK=1.5j / y,
        g=3.0 / (4.0 * y**2),
        d2K=-3.0 / (4.0 * y**2),
        gamma=1j / y,
    )


def metric_density(m: PeriodModel, p: complex) -> float:
    return kahler_data(m, p).g


def metric_and_volume(m: PeriodModel, region: Region,
                      n_samples_per_axis: int = 3) -> tuple[list, float]:
    """Metric samples over the region and vol(R) = int_R g dx dy.

    The volume is by adaptive quadrature at relative tolerance 1e-6; for
    both models g is x-independent so the integral is effectively 1-d.
    """
    if region.is_empty:
        return [], 0.0
    check_region(m, region)
    xs = np.linspace(region.xmin, region.xmax, n_samples_per_axis)
    ys = np.linspace(region.ymin, region.ymax, n_samples_per_axis)
    samples = [(x + 1j * y, metric_density(m, x + 1j * y)) for x in xs for y in ys]
    val, err = integrate.quad(
        lambda y: metric_density(m, region.xmin + 1j * y),
        region.ymin, region.ymax, epsrel=1e-6, epsabs=0.0,
    )
    vol = val * (region.xmax - region.xmin)
    if err * (region.xmax - region.xmin) > 1e-6 * max(vol, 1e-300):
        raise QuadratureError("volume quadrature did not converge")
    return samples, float(vol)


# ---------------------------------------------------------------------------
# central charge / superpotential and covariant derivatives
# ---------------------------------------------------------------------------

def charge_poly(m: PeriodModel, q: ChargeVector | FluxVector,
                tau: complex | None = None) -> np.ndarray:
    """Ascending coefficients of Z(z) = q^T eta Pi(z) as a polynomial in z.

    For a FluxVector the combined charge is f + tau*h (tau required); the
    rigid model's "polynomial" is the constant W.
    """
    if isinstance(q, FluxVector):
        if tau is None:
            raise ValueError("flux charge needs tau")
        vec = q.f + complex(tau) * q.h
    else:
        vec = q.gamma.astype(complex)
    row = vec @ m.eta.astype(complex)
    if m.is_rigid:
        # Pi = (1, i): Z = row[0] + i row[1], a constant
        return np.array([row[0] + 1j * row[1]])
    k = m.kappa
    # Pi = (1, z, -k z^2/2, k z^3/6)
    return np.array([
        row[0],
        row[1],
        -k / 2.0 * row[2],
        k / 6.0 * row[3],
    ])


def _poly_derivs(c: np.ndarray, z: complex) -> tuple[complex, complex, complex]:
    p = dp = ddp = 0.0 + 0.0j
    for a in c[::-1]:
        ddp = ddp * z + 2.0 * dp
        dp = dp * z + p
        p = p * z + a
    return p, dp, ddp


def central_charge(m: PeriodModel, q: ChargeVector | FluxVector, p: complex) -> complex:
    """Z = gamma^T eta Pi, or W = (f + tau h)^T eta Pi at p = tau."""
    check_admissible(m, p)
    if isinstance(q, FluxVector):
        vec = (q.f + complex(p) * q.h).astype(complex)
    else:
        vec = q.gamma.astype(complex)
    return complex(vec @ m.eta.astype(complex) @ period_vector(m, p))


def normalized_Z2(m: PeriodModel, q: ChargeVector, p: complex) -> float:
    """|Z|^2 / (i Pi^dag eta Pi): the projectively invariant period bound."""
    z = central_charge(m, q, p)
    return float(abs(z) ** 2 / period_norm(m, p))


def covariant_derivative(m: PeriodModel, q: ChargeVector | FluxVector,
                         p: complex) -> np.ndarray:
    """DZ = dZ + (dK) Z over the model's modulus (z, or tau for rigid)."""
    check_admissible(m, p)
    kd = kahler_data(m, p)
    if isinstance(q, FluxVector):
        if m.is_rigid:
            # W = A + tau B holomorphic in tau
            a = central_charge(m, FluxVector(q.f, np.zeros_like(q.h)), p)
            b = central_charge(m, FluxVector(np.zeros_like(q.f), q.h), p) / complex(p)
            w = a + complex(p) * b
            return np.array([b + kd.dK * w])
        raise ValueError("flux charges only live on the rigid model")
    c = charge_poly(m, q)
    z, dz, _ = _poly_derivs(c, p)
    return np.array([dz + kd.dK * z])


def second_covariant_derivative(m: PeriodModel, q: ChargeVector | FluxVector,
                                p: complex) -> complex:
    """DDZ = (d + dK - Gamma)(DZ), in closed form."""
    check_admissible(m, p)
    kd = kahler_data(m, p)
    if isinstance(q, FluxVector) and m.is_rigid:
        b = central_charge(m, FluxVector(np.zeros_like(q.f), q.h), p) / complex(p)
        w = central_charge(m, q, p)
        dw, ddw = b, 0.0
    else:
        c = charge_poly(m, q)
        w, dw, ddw = _poly_derivs(c, p)
    dZ = dw + kd.dK * w
    # d(DZ) = ddw + d2K w + dK dw
    d_dZ = ddw + kd.d2K * w + kd.dK * dw
    return complex(d_dZ + (kd.dK - kd.gamma) * dZ)


# ---------------------------------------------------------------------------
# Hessian and curvature
# ---------------------------------------------------------------------------

def hessian_matrix(m: PeriodModel, q: ChargeVector | FluxVector, p: complex,
                   frame: bool = True) -> np.ndarray:
    """Complex Hessian blocks at an approximate critical point.

    Layout (n = 1): [[DDZ, omega sbar], [omega s, conj(DDZ)]], using
    d Dbar sbar = omega sbar (holomorphy of the section) and d Ds = DDs
    (valid at a critical point, which is why the call is contract-checked).

    With frame=True the entries are expressed in a unitary frame (indices
    rescaled by 1/sqrt(g)) with the section normalized by e^{K/2}; there
    det H = |Z_norm|^2 - |DDZ_frame|^2, which at an attractor point
    collapses to the normalized |Z|^2.
    """
    dz = covariant_derivative(m, q, p)[0]
    w = central_charge(m, q, p)
    scale = max(abs(w), 1.0)
    if abs(dz) > 1e-6 * scale:
        raise ContractViolationError(
            f"hessian_matrix called away from a critical point: |DZ|={abs(dz)}"
        )
    kd = kahler_data(m, p)
    ddz = second_covariant_derivative(m, q, p)
    if frame:
        ek2 = np.exp(kahler_potential(m, p) / 2.0)
        s = ek2 * w
        off = ddz * ek2 / kd.g
        return np.array([[np.conj(s), off], [np.conj(off), s]])
    return np.array([
        [ddz, kd.g * np.conj(w)],
        [kd.g * w, np.conj(ddz)],
    ])


@dataclass(frozen=True)
class CurvatureData:
    """Pointwise curvature package, all as densities per unit dx dy.

    index_density is the det(R + omega 1) factor entering the flux index
    formula, pinned to the Weil-Petersson density (see package docs for
    the normalization convention).
    """

    yukawa: complex
    metric: float
    ricci: float          # -d ddbar log(det g) coordinate density
    index_density: float


def curvature_quantities(m: PeriodModel, p: complex) -> CurvatureData:
    check_admissible(m, p)
    kd = kahler_data(m, p)
    y = p.imag
    # log g = const - 2 log y for both models; d ddbar log y = -1/(4 y^2)
    ricci = -2.0 * (1.0 / (4.0 * y**2))
    yukawa = m.kappa if not m.is_rigid else 0.0
    return CurvatureData(
        yukawa=yukawa,
        metric=kd.g,
        ricci=ricci,
        index_density=kd.g,
    )


def yukawa_identity_residual(m: PeriodModel, q: ChargeVector, p: complex) -> float:
    """|DDZ - (-i) e^K F_zzz_bar-convention g^-1 conj(DZ)| for the cubic model.

    Special-geometry identity DDZ = i e^K (d^3F/dz^3) g^{-1} conj(DZ) with
    d^3F/dz^3 = -kappa; vanishes identically for period charges.
    """
    if m.is_rigid:
        raise ValueError("identity is specific to the cubic model")
    kd = kahler_data(m, p)
    ddz = second_covariant_derivative(m, q, p)
    dz = covariant_derivative(m, q, p)[0]
    rhs = 1j * np.exp(kd.K) * (-m.kappa) / kd.g * np.conj(dz)
    return float(abs(ddz - rhs))


def flux_length(f, h, eta) -> int:
    """L = f^T eta h in exact integer arithmetic.

    This is (1/Im tau) int Re F wedge Im F for F = f + tau h: with
    Re F = f + (Re tau) h and Im F = (Im tau) h the tau-dependence cancels
    and the wedge reduces to the intersection pairing of f with h.
    """
    f = np.asarray(f, dtype=object)
    h = np.asarray(h, dtype=object)
    eta = np.asarray(eta, dtype=object)
    return int(f @ eta @ h)


def save_model(m: PeriodModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_config(m), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> PeriodModel:
    with open(path) as fh:
        return model_from_config(json.load(fh))
