"""Attractor points and flux vacua: solvers, lattice censuses, predictions.

Two enumeration problems share one shape: scan a box of integer charge
vectors, solve a critical-point equation per charge, keep solutions in a
target region under a control-parameter bound, and compare the count
against a continuum density formula.

Attractor points (cubic model): nonzero critical points of the
normalized |Z|^2 on the z-upper-half-plane, bounded by |Z|_norm <= Zmax.
Flux vacua (rigid model): solutions of D_tau W = 0 for W = (f + tau h)
periods, bounded by the flux length L <= Lmax.

Normalization of the continuum predictions.  Both constants below are
pinned by a direct change of variables from charge space to
(value, position) space, cross-checked against lattice counts:

  attractors  N(region, Zmax) = 2 pi Zmax^4 * int_region g dx dy
              (gamma -> (Z, z*) has Jacobian 4 |Z|^2 e^{-2K} g; integrating
              |Z|^2 e^{-K} <= Zmax^2 gives the Zmax^4 / 2 factor)
  flux vacua  N(region, Lmax) = 2 pi Lmax^2 * int_region g dx dy,
              signed index = -(2 pi Lmax)^{b3} / (2 pi)^{b3-1} * int g
              (every rigid vacuum carries Morse sign -1; see
              enumerate_flux_vacua)
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ContractViolationError, DomainError
from .geometry import (
    ChargeVector,
    FluxVector,
    PeriodModel,
    Region,
    charge_poly,
    check_admissible,
    check_region,
    flux_length,
    kahler_data,
    kahler_potential,
    metric_and_volume,
    normalized_Z2,
)

# Critical-point gradient contract: |DZ| <= GRAD_TOL * (1 + |Z|).
GRAD_TOL = 1e-9
# Two critical points of the same charge within this distance are one point.
DEDUP_RADIUS = 1e-6
# Candidate prefilter: discard charges whose normalized |Z| exceeds
# PREFILTER_MARGIN * Zmax on every node of a coarse grid over the region.
# Validated against unfiltered enumeration (identical counts).
PREFILTER_MARGIN = 2.0
# Integer charges can land exactly on the census bound; admit them despite
# the last-ulp roundoff of |Z|^2.
_BOUND_RTOL = 1e-12
_PREFILTER_NODES = 7
_CHARGE_CHUNK = 500_000
_SOLVE_CHUNK = 20_000


@dataclass(frozen=True)
class CriticalPointRecord:
    source: ChargeVector | FluxVector
    location: complex
    value2: float            # normalized |Z|^2, or e^K |W|^2 for flux vacua
    w: complex | None        # W(tau*) for flux records
    L: int | None            # flux length for flux records
    gradient_norm: float
    hessian_sign: int
    converged: bool

    def source_components(self) -> tuple:
        if isinstance(self.source, FluxVector):
            return tuple(self.source.f) + tuple(self.source.h)
        return tuple(self.source.gamma)


@dataclass(frozen=True)
class CountReport:
    region: Region
    control: float           # Zmax or Lmax
    count: int
    signed_index: int
    prediction: float
    ratio: float             # count / prediction where defined, else nan
    box: int
    saturation_delta: int    # count lost when the box shrinks by one

    def __post_init__(self):
        if abs(self.signed_index) > self.count:
            raise ContractViolationError("|signed index| exceeds count")

    def to_json_dict(self) -> dict:
        return {
            "region": [self.region.xmin, self.region.xmax,
                       self.region.ymin, self.region.ymax],
            "control": self.control,
            "count": self.count,
            "signed_index": self.signed_index,
            "prediction": self.prediction,
            "ratio": self.ratio,
            "box": self.box,
            "saturation_delta": self.saturation_delta,
        }


def _make_report(region, control, count, signed_index, prediction, box,
                 saturation_delta) -> CountReport:
    ratio = count / prediction if prediction > 0 else float("nan")
    return CountReport(region, control, count, signed_index, prediction,
                       ratio, box, saturation_delta)


def records_to_csv(records, path) -> None:
    """Rows `s0,s1,s2,s3,x,y,value2,L,sign,converged` (L blank for charges)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("s0,s1,s2,s3,x,y,value2,L,sign,converged\n")
        for r in records:
            s = r.source_components()
            lfield = "" if r.L is None else str(r.L)
            fh.write(
                f"{s[0]},{s[1]},{s[2]},{s[3]},"
                f"{r.location.real:.17g},{r.location.imag:.17g},"
                f"{r.value2:.17g},{lfield},{r.hessian_sign},"
                f"{int(r.converged)}\n"
            )


# ---------------------------------------------------------------------------
# attractor flow and enumeration (cubic model)
# ---------------------------------------------------------------------------

def _z_and_derivs(m: PeriodModel, gamma: ChargeVector, z: complex):
    c = charge_poly(m, gamma)
    p = dp = ddp = 0.0 + 0.0j
    for a in c[::-1]:
        ddp = ddp * z + 2.0 * dp
        dp = dp * z + p
        p = p * z + a
    return p, dp, ddp


def _newton_refine(m: PeriodModel, gamma: ChargeVector, z: complex,
                   max_steps: int = 50) -> tuple[complex, float, float]:
    """Wirtinger-Newton on DZ = 0; returns (z, |DZ|, |Z|)."""
    for _ in range(max_steps):
        kd = kahler_data(m, z)
        zz, dz, ddz = _z_and_derivs(m, gamma, z)
        u = dz + kd.dK * zz
        gn = abs(u)
        if gn <= 1e-13 * (1.0 + abs(zz)):
            return z, gn, abs(zz)
        # d(DZ)/dz and d(DZ)/dzbar (the latter from dbar dK = g)
        a = ddz + kd.d2K * zz + kd.dK * dz
        b = kd.g * zz
        den = abs(a) ** 2 - abs(b) ** 2
        if den == 0:
            break
        step = (b * np.conj(u) - u * np.conj(a)) / den
        z2 = z + step
        if z2.imag <= 0:
            break
        z = z2
    kd = kahler_data(m, z)
    zz, dz, _ = _z_and_derivs(m, gamma, z)
    return z, abs(dz + kd.dK * zz), abs(zz)


def _hessian_sign(m: PeriodModel, q, p: complex) -> int:
    from .geometry import hessian_matrix

    h = hessian_matrix(m, q, p, frame=True)
    det = (h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]).real
    return 1 if det > 0 else -1


def attractor_flow(m: PeriodModel, gamma: ChargeVector, start: complex,
                   max_iter: int = 10_000) -> CriticalPointRecord | None:
    """Gradient flow of normalized |Z|^2 to an attractor point.

    Metric-preconditioned descent with backtracking (the objective is
    nonincreasing along accepted steps), then Newton on DZ = 0.  Returns
    None when the flow leaves the admissible domain or runs into the zero
    locus of Z; a record with converged=False when iterations run out.
    """
    if not np.any(gamma.gamma):
        raise ValueError("gamma must be nonzero")
    check_admissible(m, start)
    z = complex(start)
    lam = 1.0
    v = normalized_Z2(m, gamma, z)
    it = 0
    while it < max_iter:
        it += 1
        kd = kahler_data(m, z)
        zz, dz, _ = _z_and_derivs(m, gamma, z)
        if v < 1e-18:
            return None
        u = dz + kd.dK * zz
        if abs(u) <= 1e-7 * (1.0 + abs(zz)):
            break
        # steepest descent of V = e^K |Z|^2 in the moduli metric:
        # dV/dz = e^K conj(Z) DZ, step = -(1/g) conj(dV/dz)
        direction = -np.exp(kd.K) * zz * np.conj(u) / kd.g
        accepted = False
        while lam > 1e-14:
            z2 = z + lam * direction
            if z2.imag > 0:
                try:
                    v2 = normalized_Z2(m, gamma, z2)
                except DomainError:
                    v2 = np.inf
                if v2 <= v:
                    z, v = z2, v2
                    lam = min(lam * 2.0, 1.0)
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            break
    else:
        return CriticalPointRecord(gamma, z, normalized_Z2(m, gamma, z),
                                   None, None, abs(u), 0, False)
    z, gn, absz = _newton_refine(m, gamma, z)
    if z.imag <= 0 or absz**2 < 1e-18:
        return None
    try:
        check_admissible(m, z)
    except DomainError:
        return None
    v = normalized_Z2(m, gamma, z)
    converged = gn <= GRAD_TOL * (1.0 + absz)
    sign = _hessian_sign(m, gamma, z) if converged else 0
    return CriticalPointRecord(gamma, z, v, None, None, gn, sign, converged)


def _charge_polys_batch(m: PeriodModel, gams: np.ndarray) -> np.ndarray:
    """Ascending Z(z) coefficients for a (B, 4) integer charge batch."""
    rows = gams.astype(float) @ m.eta.astype(float)
    k = m.kappa
    return np.stack(
        [rows[:, 0], rows[:, 1], -k / 2.0 * rows[:, 2], k / 6.0 * rows[:, 3]],
        axis=1,
    ).astype(complex)


def _attractor_solve_batch(m: PeriodModel, gams: np.ndarray, region: Region,
                           zmax: float) -> list[CriticalPointRecord]:
    """All attractor points in region for a batch of charges.

    The critical-point equation DZ = 0 is equivalent to zbar = phi(z) with
    phi = (z Z' - 3 Z)/Z' = P/Q a ratio of quadratics; conjugating and
    substituting back reduces it to one degree-5 polynomial per charge,
    solved by batched companion-matrix eigenvalues and Newton-polished.
    """
    c = _charge_polys_batch(m, gams)
    c0, c1, c2, c3 = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
    pp = np.stack([-3 * c0, -2 * c1, -c2], axis=1)
    qq = np.stack([c1, 2 * c2, 3 * c3], axis=1)

    def mul3(a, b):
        out = np.zeros((a.shape[0], 5), complex)
        for i in range(3):
            for j in range(3):
                out[:, i + j] += a[:, i] * b[:, j]
        return out

    p2, pq, q2 = mul3(pp, pp), mul3(pp, qq), mul3(qq, qq)
    pb, qb = np.conj(pp), np.conj(qq)
    # conj(phi)(z) = A(z)/B(z) with A, B quartic
    aa = pb[:, 0:1] * q2 + pb[:, 1:2] * pq + pb[:, 2:3] * p2
    bb = qb[:, 0:1] * q2 + qb[:, 1:2] * pq + qb[:, 2:3] * p2
    quintic = np.zeros((c.shape[0], 6), complex)
    quintic[:, 1:6] += bb
    quintic[:, 0:5] -= aa
    lead = quintic[:, 5]
    ok = np.abs(lead) > 1e-12 * np.max(np.abs(quintic), axis=1)
    idx = np.nonzero(ok)[0]
    records: list[CriticalPointRecord] = []
    if len(idx) == 0:
        return records
    monic = quintic[idx] / lead[idx, None]
    comp = np.zeros((len(idx), 5, 5), complex)
    comp[:, 1:, 0:4] = np.eye(4)
    comp[:, :, 4] = -monic[:, 0:5]
    roots = np.linalg.eigvals(comp)

    def horner(co, zz):
        r = np.zeros_like(zz)
        for k in range(co.shape[1] - 1, -1, -1):
            r = r * zz + co[:, k][:, None]
        return r

    with np.errstate(all="ignore"):
        zv = horner(c[idx], roots)
        phi = horner(pp[idx], roots) / horner(qq[idx], roots)
        good = (np.abs(np.conj(phi) - roots) < 1e-6 * (1.0 + np.abs(roots)))
        good &= roots.imag > 0
    x, y = roots.real, roots.imag
    in_r = (x >= region.xmin) & (x <= region.xmax) \
        & (y >= region.ymin) & (y <= region.ymax)
    good &= in_r & (np.abs(zv) > 1e-10)
    for b in np.nonzero(good.any(axis=1))[0]:
        gamma = ChargeVector(gams[idx[b]])
        cand = sorted(roots[b][good[b]], key=lambda w: (w.real, w.imag))
        kept: list[complex] = []
        for z0 in cand:
            if any(abs(z0 - u) < DEDUP_RADIUS for u in kept):
                continue
            kept.append(z0)
            z1, gn, absz = _newton_refine(m, gamma, complex(z0))
            if z1.imag <= 0:
                continue
            v = normalized_Z2(m, gamma, z1)
            if v > zmax**2 * (1.0 + _BOUND_RTOL) or not region.contains(z1):
                continue
            converged = gn <= GRAD_TOL * (1.0 + absz)
            sign = _hessian_sign(m, gamma, z1) if converged else 0
            records.append(CriticalPointRecord(
                gamma, z1, v, None, None, gn, sign, converged))
    return records


def _iter_charge_chunks(box: int, chunk: int):
    """Yield (B, 4) int arrays covering the full charge box, zero excluded."""
    side = 2 * box + 1
    total = side**4
    for lo in range(0, total, chunk):
        flat = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        g = np.empty((len(flat), 4), dtype=np.int64)
        rest = flat
        for k in range(3, -1, -1):
            g[:, k] = rest % side - box
            rest = rest // side
        g = g[np.any(g != 0, axis=1)]
        if len(g):
            yield g


def _prefilter_charges(m: PeriodModel, gams: np.ndarray, region: Region,
                       zmax: float) -> np.ndarray:
    """Keep charges whose normalized |Z| dips below the margin on a grid."""
    xs = np.linspace(region.xmin, region.xmax, _PREFILTER_NODES)
    ys = np.linspace(region.ymin, region.ymax, _PREFILTER_NODES)
    zs = np.array([x + 1j * y for x in xs for y in ys])
    c = _charge_polys_batch(m, gams)
    pv = np.zeros((c.shape[0], len(zs)), complex)
    for k in range(3, -1, -1):
        pv = pv * zs[None, :] + c[:, k][:, None]
    emk = (4.0 * m.kappa / 3.0) * zs.imag**3
    vmin = np.min(np.abs(pv) ** 2 / emk[None, :], axis=1)
    return gams[vmin <= (PREFILTER_MARGIN * zmax) ** 2]


def enumerate_attractor_points(m: PeriodModel, region: Region, zmax: float,
                               charge_box: int, n_threads: int = 1,
                               ) -> tuple[CountReport, list[CriticalPointRecord]]:
    """Census of attractor points with normalized |Z| <= zmax.

    Scans every nonzero charge with sup-norm <= charge_box, solving the
    critical-point equation exactly per charge (the refinement limit of
    flowing from a dense start grid), deduplicating per charge at radius
    1e-6.  The saturation diagnostic re-counts with the box shrunk by one;
    a nonzero difference flags a possibly-too-small box.
    """
    if m.is_rigid:
        raise ValueError("attractor enumeration needs a moduli-space model")
    if zmax < 0 or charge_box < 1:
        raise ValueError("need zmax >= 0 and charge_box >= 1")
    check_region(m, region)
    prediction = attractor_count_prediction(m, region, zmax)
    if region.is_empty or zmax == 0.0:
        return _make_report(region, zmax, 0, 0, prediction, charge_box, 0), []

    candidates = []
    for chunk in _iter_charge_chunks(charge_box, _CHARGE_CHUNK):
        kept = _prefilter_charges(m, chunk, region, zmax)
        if len(kept):
            candidates.append(kept)
    if not candidates:
        return _make_report(region, zmax, 0, 0, prediction, charge_box, 0), []
    cand = np.concatenate(candidates)

    shards = [cand[lo: lo + _SOLVE_CHUNK] for lo in range(0, len(cand), _SOLVE_CHUNK)]

    def solve(shard):
        return _attractor_solve_batch(m, shard, region, zmax)

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(solve, shards))
    else:
        parts = [solve(s) for s in shards]
    records = [r for part in parts for r in part]

    count = len(records)
    signed = sum(r.hessian_sign for r in records)
    inner = sum(
        1 for r in records
        if np.max(np.abs(r.source.gamma)) <= charge_box - 1
    )
    report = _make_report(region, zmax, count, signed, prediction,
                          charge_box, count - inner)
    return report, records


def attractor_count_prediction(m: PeriodModel, region: Region, zmax: float) -> float:
    """Continuum prediction 2 pi zmax^4 vol(region); see module docstring."""
    if region.is_empty:
        return 0.0
    _, vol = metric_and_volume(m, region)
    return 2.0 * np.pi * zmax**4 * vol


# ---------------------------------------------------------------------------
# rigid flux vacua
# ---------------------------------------------------------------------------

def _flux_periods(m: PeriodModel, f, h) -> tuple[complex, complex]:
    """A = f^T eta Pi, B = h^T eta Pi for the rigid Pi = (1, i)."""
    eta = m.eta.astype(float)
    pi = np.array([1.0, 1j])
    a = complex(np.asarray(f, dtype=float) @ eta @ pi)
    b = complex(np.asarray(h, dtype=float) @ eta @ pi)
    return a, b


def rigid_vacuum_solve(m: PeriodModel, f, h):
    """Closed-form D_tau W = 0 for W = A + tau B: tau* = -conj(A)/conj(B).

    One line of algebra: D_tau W = B + (i/(2 Im tau)) W vanishes iff
    B (tau - taubar) + i (A + tau B) - ... reduces to taubar = -A/B
    conjugated, i.e. tau* = -Abar/Bbar.  Then W(tau*) = 2i Im(tau*) B and
    L = |B|^2 Im(tau*).  Returns (tau*, W, L) or None when B = 0 or the
    solution is below the real axis.
    """
    if not m.is_rigid:
        raise ValueError("flux vacua live on the rigid model")
    if not (np.any(np.asarray(f)) or np.any(np.asarray(h))):
        raise ValueError("(f, h) must be nonzero")
    a, b = _flux_periods(m, f, h)
    if b == 0:
        return None
    tau = -np.conj(a) / np.conj(b)
    if tau.imag <= 0:
        return None
    w = a + tau * b
    fl = flux_length(np.asarray(f), np.asarray(h), m.eta)
    return complex(tau), complex(w), fl


def _fundamental_domain_check(region: Region) -> None:
    if region.is_empty:
        return
    if region.xmin < -0.5 or region.xmax > 0.5:
        raise DomainError("region leaves |Re tau| <= 1/2")
    x_near = min(max(0.0, region.xmin), region.xmax)
    if x_near**2 + region.ymin**2 < 1.0 - 1e-12:
        raise DomainError("region dips inside |tau| = 1")


def enumerate_flux_vacua(m: PeriodModel, region: Region, lmax: int,
                         flux_box: int, n_threads: int = 1,
                         ) -> tuple[CountReport, list[CriticalPointRecord]]:
    """Census of rigid flux vacua with 0 < L <= lmax, tau* in region.

    The h-scan is pruned exactly: L = |B|^2 Im(tau*) <= lmax and
    Im(tau*) >= ymin force |B|^2 <= lmax / ymin.  Every rigid vacuum
    carries Morse sign -1: at the vacuum the holomorphic derivative of
    D_tau W cancels and the real Jacobian determinant is
    -|W|^2/(16 y^4) < 0.
    """
    if not m.is_rigid:
        raise ValueError("flux vacua live on the rigid model")
    if lmax < 1 or flux_box < 1:
        raise ValueError("need lmax >= 1 and flux_box >= 1")
    _fundamental_domain_check(region)
    prediction = -flux_index_prediction(m, region, lmax)
    if region.is_empty:
        return _make_report(region, lmax, 0, 0, prediction, flux_box, 0), []

    r = np.arange(-flux_box, flux_box + 1)
    h0g, h1g = np.meshgrid(r, r, indexing="ij")
    h0g, h1g = h0g.ravel(), h1g.ravel()
    eta = m.eta.astype(float)
    pi = np.array([1.0, 1j])
    hb = (np.stack([h0g, h1g], axis=1) @ eta @ pi)
    keep = (np.abs(hb) ** 2 <= lmax / region.ymin) & (np.abs(hb) > 0)
    h0g, h1g, hb = h0g[keep], h1g[keep], hb[keep]

    f0g, f1g = np.meshgrid(r, r, indexing="ij")
    f0g, f1g = f0g.ravel(), f1g.ravel()
    fb = (np.stack([f0g, f1g], axis=1) @ eta @ pi)
    # L = f^T eta h, vectorized over f for fixed h
    e01, e10 = m.eta[0, 1], m.eta[1, 0]

    def scan(h_indices):
        out = []
        for i in h_indices:
            tau = -np.conj(fb) / np.conj(hb[i])
            ell = e01 * f0g * h1g[i] + e10 * f1g * h0g[i]
            ok = ((tau.real >= region.xmin) & (tau.real <= region.xmax)
                  & (tau.imag >= region.ymin) & (tau.imag <= region.ymax)
                  & (ell > 0) & (ell <= lmax))
            for j in np.nonzero(ok)[0]:
                t = complex(tau[j])
                w = 2j * t.imag * hb[i]
                src = FluxVector(np.array([f0g[j], f1g[j]]),
                                 np.array([h0g[i], h1g[i]]))
                value2 = float(np.exp(kahler_potential(m, t)) * abs(w) ** 2)
                kd = kahler_data(m, t)
                gn = abs(hb[i] + kd.dK * w)
                out.append(CriticalPointRecord(
                    src, t, value2, complex(w), int(ell[j]), gn, -1, True))
        return out

    shards = [range(lo, min(lo + 64, len(hb))) for lo in range(0, len(hb), 64)]
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(scan, shards))
    else:
        parts = [scan(s) for s in shards]
    records = [rec for part in parts for rec in part]

    count = len(records)
    signed = sum(rec.hessian_sign for rec in records)
    inner = sum(
        1 for rec in records
        if max(np.max(np.abs(rec.source.f)), np.max(np.abs(rec.source.h)))
        <= flux_box - 1
    )
    report = _make_report(region, lmax, count, signed, prediction,
                          flux_box, count - inner)
    return report, records


def flux_index_prediction(m: PeriodModel, region: Region, lmax: float) -> float:
    """Signed-index prediction -(2 pi lmax)^b3 / (2 pi)^{b3-1} * int_R density.

    The curvature-and-metric index density for the rigid model reduces to
    the metric itself; the overall sign is -1 because every rigid vacuum
    has Morse sign -1.  |prediction| equals the continuum count.
    """
    from .geometry import curvature_quantities

    if region.is_empty:
        return 0.0
    check_region(m, region)
    from scipy import integrate

    val, _ = integrate.quad(
        lambda y: curvature_quantities(m, region.xmin + 1j * y).index_density,
        region.ymin, region.ymax, epsrel=1e-9, epsabs=0.0,
    )
    integral = val * (region.xmax - region.xmin)
    b3 = m.b3
    return -((2.0 * np.pi * lmax) ** b3) / (2.0 * np.pi) ** (b3 - 1) * integral


def continuum_flux_count(m: PeriodModel, region: Region, lmax: float,
                         n_samples: int, seed: int, box_radius: float,
                         n_threads: int = 1) -> tuple[float, float]:
    """Monte Carlo volume of the continuum flux set (lattice count estimate).

    Samples (f, h) uniformly in [-R, R]^4, applies the closed-form vacuum
    solve with real-valued fluxes, and scales the hit fraction by the box
    volume.  Warns when hits crowd the box boundary (R too small).
    """
    from .rng import stream

    if not m.is_rigid:
        raise ValueError("flux vacua live on the rigid model")
    if n_samples < 1 or box_radius <= 0:
        raise ValueError("need n_samples >= 1 and box_radius > 0")
    if region.is_empty:
        return 0.0, 0.0
    _fundamental_domain_check(region)
    eta = m.eta.astype(float)
    pi = np.array([1.0, 1j])
    e01, e10 = float(m.eta[0, 1]), float(m.eta[1, 0])
    chunk = 1 << 17

    def run_shard(shard_index: int, n: int) -> tuple[int, float]:
        rng = stream(seed, shard_index)
        draw = rng.uniform(-box_radius, box_radius, size=(n, 4))
        fb = draw[:, 0:2] @ eta @ pi
        hb = draw[:, 2:4] @ eta @ pi
        with np.errstate(all="ignore"):
            tau = -np.conj(fb) / np.conj(hb)
        ell = e01 * draw[:, 0] * draw[:, 3] + e10 * draw[:, 1] * draw[:, 2]
        ok = (np.abs(hb) > 0) & np.isfinite(tau)
        ok &= ((tau.real >= region.xmin) & (tau.real <= region.xmax)
               & (tau.imag >= region.ymin) & (tau.imag <= region.ymax)
               & (ell > 0) & (ell <= lmax))
        edge = float(np.max(np.abs(draw[ok]))) if ok.any() else 0.0
        return int(ok.sum()), edge

    shards = [(i, min(chunk, n_samples - lo))
              for i, lo in enumerate(range(0, n_samples, chunk))]
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(lambda s: run_shard(*s), shards))
    else:
        parts = [run_shard(*s) for s in shards]
    hits = sum(h for h, _ in parts)
    edge = max((e for _, e in parts), default=0.0)
    if edge > 0.98 * box_radius:
        warnings.warn(
            f"continuum_flux_count: hits reach {edge:.3g} of box radius "
            f"{box_radius:.3g}; the admissible set may be clipped",
            stacklevel=2,
        )
    volume = (2.0 * box_radius) ** 4
    p = hits / n_samples
    estimate = p * volume
    stderr = volume * float(np.sqrt(max(p * (1.0 - p), 0.0) / n_samples))
    return estimate, stderr


# ---------------------------------------------------------------------------
# |W|^2 statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class W2Stats:
    counts: np.ndarray     # histogram over [0, q]
    edges: np.ndarray
    q: float               # 25th percentile of the values
    n_lower: int           # records with value <= q
    ks_distance: float
    ks_pvalue: float


def w2_statistics(records, n_bins: int = 20) -> W2Stats:
    """Lower-range histogram and uniformity test of e^K |W|^2 over vacua.

    Takes the records' normalized values, restricts to [0, q] with q the
    25th percentile, and reports the Kolmogorov-Smirnov distance to the
    uniform law on [0, q].

    Caveat: in the two-flux rigid model e^K |W|^2 equals 2L identically,
    and the vacuum density grows linearly in L, so the lower range is
    quadratically -- not uniformly -- distributed; the KS test rejects
    regardless of sample size.  Uniformity is a feature of ensembles with
    more independent fluxes than this model has.
    """
    values = np.array([r.value2 for r in records], dtype=float)
    if len(values) < 100:
        raise ValueError(f"need >= 100 records, got {len(values)}")
    q = float(np.percentile(values, 25.0))
    sub = values[values <= q]
    counts, edges = np.histogram(sub, bins=n_bins, range=(0.0, q))
    ks = stats.kstest(sub, "uniform", args=(0.0, q))
    return W2Stats(counts=counts, edges=edges, q=q, n_lower=len(sub),
                   ks_distance=float(ks.statistic), ks_pvalue=float(ks.pvalue))


def save_report(report: CountReport, path, extra: dict | None = None) -> None:
    payload = report.to_json_dict()
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
