"""Empirical verification of the analytic zero densities.

Samples polynomials from an ensemble, finds all complex roots through
companion-matrix eigenvalues (one Newton polish each), and bins them into
histograms that can be compared cell-by-cell against the Kac-Rice
formulas.  All sampling is keyed by (seed, sample index), so results are
independent of sharding and thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ensembles import EnsembleSpec, sample_section
from .errors import InvalidDegreeError
from .kacrice import GridSpec
from .rng import stream

# Trailing coefficients below this relative level are treated as zero.
_TRIM_TOL = 1e-14
# Residual contract for polished roots: |f(root)| <= this * (1 + max|c_i|).
ROOT_RESIDUAL_TOL = 1e-8
# A polished root counts as real when |Im| <= this * (1 + |root|).
REAL_CLASSIFY_TOL = 1e-8

_CHUNK = 2048


@dataclass(frozen=True)
class RootSet:
    """Roots with residuals |f(r)| / max(1, |r|)^deg.

    The scaling makes the residual meaningful for roots outside the unit
    disk (it equals the plain residual of the reversed polynomial at 1/r);
    an unscaled |f(r)| grows like |r|^deg times roundoff and cannot meet
    any fixed bound.
    """

    roots: np.ndarray      # complex, length = trimmed degree
    residuals: np.ndarray  # scaled |f(root)|


@dataclass(frozen=True)
class EmpiricalDensity:
    grid: GridSpec
    counts: np.ndarray        # (nx, ny) int
    overflow: int             # roots outside the grid window
    n_samples: int
    degree: int

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.n_samples * self.grid.cell_area)

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(self.counts) / (self.n_samples * self.grid.cell_area)

    @property
    def total_roots(self) -> int:
        return int(self.counts.sum()) + self.overflow

    def to_csv(self, path) -> None:
        """Rows `x,y,count,density,stderr`, row-major."""
        xs, ys = self.grid.centers()
        dens, err = self.density, self.stderr
        with open(path, "w", newline="\n") as fh:
            fh.write("x,y,count,density,stderr\n")
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    fh.write(
                        f"{x:.17g},{y:.17g},{self.counts[i, j]},"
                        f"{dens[i, j]:.17g},{err[i, j]:.17g}\n"
                    )


def _polish(coeffs_desc: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """One Newton step per root; coefficients descending, roots any shape."""
    with np.errstate(all="ignore"):
        p = np.zeros_like(roots)
        dp = np.zeros_like(roots)
        for c in coeffs_desc:
            dp = dp * roots + p
            p = p * roots + c
        ok = np.abs(dp) > 0
        cand = roots - np.where(ok, p / np.where(ok, dp, 1.0), 0.0)
    return np.where(np.isfinite(cand), cand, roots)


def _poly_eval(coeffs_desc: np.ndarray, z: np.ndarray) -> np.ndarray:
    p = np.zeros_like(z)
    for c in coeffs_desc:
        p = p * z + c
    return p


def find_roots(coeffs) -> RootSet:
    """All complex roots of sum_i coeffs[i] z^i, with residuals.

    Trailing (highest-order) coefficients below 1e-14 * max|c_i| are
    trimmed first; the zero polynomial is an error and degree zero gives
    an empty root set.
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coeffs must be a nonempty 1-d sequence")
    scale = np.max(np.abs(c))
    if scale == 0:
        raise InvalidDegreeError("zero polynomial has no well-defined roots")
    keep = np.nonzero(np.abs(c) > _TRIM_TOL * scale)[0]
    deg = keep[-1]
    if deg == 0:
        return RootSet(roots=np.empty(0, complex), residuals=np.empty(0))
    c = c[: deg + 1]
    desc = c[::-1]
    roots = np.roots(desc)
    roots = _polish(desc, roots)
    residuals = np.abs(_poly_eval(desc, roots))
    residuals /= np.maximum(1.0, np.abs(roots)) ** deg
    return RootSet(roots=roots, residuals=residuals)


def _batched_roots(coeff_rows: np.ndarray) -> np.ndarray:
    """Roots of many same-degree polynomials; rows are ascending coeffs.

    Rows whose leading coefficient is (nearly) zero fall back to the
    scalar path; the result is a (B, N) complex array either way.
    """
    rows = np.asarray(coeff_rows, dtype=complex)
    b, n1 = rows.shape
    n = n1 - 1
    out = np.empty((b, n), dtype=complex)
    scale = np.max(np.abs(rows), axis=1)
    good = np.abs(rows[:, -1]) > _TRIM_TOL * scale
    idx = np.nonzero(good)[0]
    if len(idx):
        monic = rows[idx] / rows[idx, -1][:, None]
        comp = np.zeros((len(idx), n, n), dtype=complex)
        comp[:, 1:, :-1] = np.eye(n - 1)
        comp[:, :, -1] = -monic[:, :-1]
        ev = np.linalg.eigvals(comp)
        desc = rows[idx, ::-1]
        ev = _polish_rows(desc, ev)
        out[idx] = ev
    for i in np.nonzero(~good)[0]:
        rs = find_roots(rows[i]).roots
        pad = np.full(n, np.inf + 0j)
        pad[: len(rs)] = rs
        out[i] = pad
    return out


def _polish_rows(desc_rows: np.ndarray, roots: np.ndarray) -> np.ndarray:
    # Horner can overflow for far-out roots at high degree; keep the
    # unpolished eigenvalue wherever the Newton step is not finite
    with np.errstate(all="ignore"):
        p = np.zeros_like(roots)
        dp = np.zeros_like(roots)
        for k in range(desc_rows.shape[1]):
            c = desc_rows[:, k][:, None]
            dp = dp * roots + p
            p = p * roots + c
        ok = np.abs(dp) > 0
        cand = roots - np.where(ok, p / np.where(ok, dp, 1.0), 0.0)
    return np.where(np.isfinite(cand), cand, roots)


def empirical_zero_density(e: EnsembleSpec, n_samples: int, grid: GridSpec,
                           seed: int, n_threads: int = 1) -> EmpiricalDensity:
    """Histogram of roots over `n_samples` draws; deterministic in seed.

    Roots landing outside the grid window are tallied in an overflow
    bucket so total-mass invariants stay checkable.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")

    edges_x = np.linspace(grid.xmin, grid.xmax, grid.nx + 1)
    edges_y = np.linspace(grid.ymin, grid.ymax, grid.ny + 1)

    def run_shard(lo: int, hi: int):
        rows = np.stack(
            [sample_section(e, seed, i).coefficients for i in range(lo, hi)]
        )
        roots = _batched_roots(rows).ravel()
        finite = np.isfinite(roots)
        x, y = roots[finite].real, roots[finite].imag
        hist, _, _ = np.histogram2d(x, y, bins=[edges_x, edges_y])
        inside = ((x >= grid.xmin) & (x <= grid.xmax)
                  & (y >= grid.ymin) & (y <= grid.ymax))
        over = int((~inside).sum()) + int((~finite).sum())
        return hist.astype(np.int64), over

    shards = [(lo, min(lo + _CHUNK, n_samples)) for lo in range(0, n_samples, _CHUNK)]
    counts = np.zeros((grid.nx, grid.ny), dtype=np.int64)
    overflow = 0
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(lambda s: run_shard(*s), shards))
    else:
        results = [run_shard(*s) for s in shards]
    for hist, over in results:  # ordered merge
        counts += hist
        overflow += over
    return EmpiricalDensity(grid=grid, counts=counts, overflow=overflow,
                            n_samples=n_samples, degree=e.degree)


def empirical_real_zero_count(degree: int, n_samples: int, seed: int,
                              n_threads: int = 1) -> tuple[float, float]:
    """Mean and standard error of the number of real roots.

    Coefficients are independent real standard normals; a polished root
    counts as real when |Im root| <= 1e-8 * (1 + |root|).
    """
    if degree < 1:
        raise InvalidDegreeError("degree must be >= 1")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")

    def run_shard(lo: int, hi: int) -> np.ndarray:
        rows = np.stack(
            [stream(seed, i).standard_normal(degree + 1) for i in range(lo, hi)]
        ).astype(complex)
        roots = _batched_roots(rows)
        finite = np.isfinite(roots)
        is_real = finite & (np.abs(roots.imag) <= REAL_CLASSIFY_TOL * (1 + np.abs(roots)))
        return is_real.sum(axis=1).astype(float)

    shards = [(lo, min(lo + _CHUNK, n_samples)) for lo in range(0, n_samples, _CHUNK)]
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(lambda s: run_shard(*s), shards))
    else:
        parts = [run_shard(*s) for s in shards]
    counts = np.concatenate(parts)
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / math.sqrt(len(counts)))
    return mean, stderr
