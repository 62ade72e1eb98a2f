import math

import numpy as np
import pytest

from randcrit.ensembles import build_ensemble
from randcrit.kacrice import (
    Annulus,
    GridSpec,
    Rectangle,
    complex_zero_density,
    density_grid,
    expected_real_zeros,
    finite_difference_density,
    real_zero_density,
    region_mass,
)


def test_kostlan_density_at_origin():
    for n in (1, 8, 20):
        e = build_ensemble("kostlan", n)
        assert complex_zero_density(e, 0.0) == pytest.approx(n / math.pi, rel=1e-13)


def test_kac_density_at_origin():
    for n in (1, 5, 50):
        e = build_ensemble("kac", n)
        assert complex_zero_density(e, 0.0) == pytest.approx(1 / math.pi, rel=1e-12)


def test_kac_density_matches_finite_difference():
    e = build_ensemble("kac", 10)
    z = 0.9
    fd = finite_difference_density(e, z)
    assert complex_zero_density(e, z) == pytest.approx(fd, rel=1e-5)


def test_closed_form_vs_finite_difference_random_points():
    rng = np.random.default_rng(21)
    for kind in ("kac", "kostlan"):
        for n in (2, 10, 50):
            e = build_ensemble(kind, n)
            for _ in range(34):  # ~100 points per ensemble kind
                z = complex(*rng.uniform(-1.5, 1.5, 2))
                if abs(abs(z) - 1.0) < 5e-3 and kind == "kac":
                    continue  # FD step straddles the removable singularity
                fd = finite_difference_density(e, z)
                assert complex_zero_density(e, z) == pytest.approx(fd, rel=1e-4)


def test_kac_limit_branch_continuity():
    # branch value at |z| ~ 1 agrees with the closed form just outside
    for n in (5, 25, 200):
        inside = complex_zero_density(build_ensemble("kac", n), 1.0)
        near = complex_zero_density(build_ensemble("kac", n), 1.0 + 2e-4)
        assert inside == pytest.approx(near, rel=5e-2)


def test_real_density_at_zero_and_evenness():
    assert real_zero_density(4, 0.0) == pytest.approx(1 / math.pi, rel=1e-13)
    for t in (0.3, 0.77, 1.5):
        assert real_zero_density(7, t) == pytest.approx(real_zero_density(7, -t))


def test_real_density_limit_branch():
    n = 25
    at_one = real_zero_density(n, 0.99)
    lo = real_zero_density(n, 0.99 - 1e-6)
    hi = real_zero_density(n, 0.99 + 1e-6)
    assert at_one == pytest.approx(0.5 * (lo + hi), rel=1e-4)
    # directly on the removable point
    val = real_zero_density(n, 1.0)
    assert np.isfinite(val) and val > 0


def test_real_density_inversion_symmetry():
    # d(t) dt is invariant under t -> 1/t; as a pointwise statement
    # d(1/t)/t^2 = d(t)
    for n in (3, 12, 60):
        for t in (0.2, 0.5, 0.9):
            lhs = real_zero_density(n, 1.0 / t) / t**2
            assert lhs == pytest.approx(real_zero_density(n, t), rel=1e-10)


def test_expected_real_zeros_linear():
    assert expected_real_zeros(1) == pytest.approx(1.0, abs=1e-6)


def test_expected_real_zeros_log_asymptote():
    n = 10**4
    ratio = expected_real_zeros(n) / ((2 / math.pi) * math.log(n))
    assert abs(ratio - 1.0) <= 0.15


def test_region_mass_total_is_degree():
    for kind, n in (("kostlan", 8), ("kac", 8)):
        e = build_ensemble(kind, n)
        total = region_mass(e, Annulus(0.0, np.inf))
        assert total == pytest.approx(n, abs=1e-4)


def test_total_mass_moderate_degrees():
    for kind in ("kac", "kostlan"):
        e = build_ensemble(kind, 100)
        assert region_mass(e, Annulus(0.0, np.inf)) == pytest.approx(100, abs=1e-2)


def test_empty_regions():
    e = build_ensemble("kac", 5)
    assert region_mass(e, Rectangle(1.0, 1.0, 0.0, 2.0)) == 0.0


def test_kac_concentration_increases_with_degree():
    masses = []
    for n in (25, 100, 400):
        e = build_ensemble("kac", n)
        frac = region_mass(e, Annulus(0.9, 1.1)) / n
        masses.append(frac)
    assert masses[1] > 0.5
    assert masses[0] < masses[1] < masses[2]


def test_kac_concentration_non_decreasing_tight_annulus():
    for eps in (0.05, 0.1):
        prev = -1.0
        for n in (25, 100, 400):
            e = build_ensemble("kac", n)
            frac = region_mass(e, Annulus(1 - eps, 1 + eps)) / n
            assert frac >= prev
            prev = frac


def test_kostlan_fubini_study_invariance():
    # density * (1 + |z|^2)^2 is constant
    e = build_ensemble("kostlan", 15)
    rng = np.random.default_rng(8)
    base = complex_zero_density(e, 0.0) * 1.0
    for _ in range(30):
        z = complex(*rng.uniform(-2, 2, 2))
        val = complex_zero_density(e, z) * (1 + abs(z) ** 2) ** 2
        assert val == pytest.approx(base, rel=1e-10)


def test_density_grid_csv_roundtrip(tmp_path):
    e = build_ensemble("kostlan", 6)
    grid = GridSpec(-1, 1, -1, 1, 4, 4)
    dg = density_grid(e, grid)
    path = tmp_path / "density.csv"
    dg.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,density"
    assert len(lines) == 1 + 16
    x, y, d = lines[1].split(",")
    assert float(d) == pytest.approx(dg.values[0, 0])
    assert dg.total_mass == pytest.approx(dg.values.sum() * grid.cell_area)
