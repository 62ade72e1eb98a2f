import numpy as np
import pytest

from randcrit.errors import ContractViolationError, DomainError
from randcrit.geometry import (
    ChargeVector,
    FluxVector,
    Region,
    central_charge,
    covariant_derivative,
    cubic_model,
    curvature_quantities,
    flux_length,
    hessian_matrix,
    kahler_data,
    kahler_potential,
    metric_and_volume,
    normalized_Z2,
    period_norm,
    period_vector,
    rigid_model,
    second_covariant_derivative,
    yukawa_identity_residual,
)

CUBIC = cubic_model(6.0)
RIGID = rigid_model()


def _random_points(n, seed, ymin=0.3, ymax=2.5):
    rng = np.random.default_rng(seed)
    return [complex(x, y) for x, y in zip(rng.uniform(-2, 2, n),
                                          rng.uniform(ymin, ymax, n))]


def test_rigid_periods_constant():
    for tau in (1j, 0.3 + 1.7j):
        np.testing.assert_array_equal(period_vector(RIGID, tau), [1.0, 1j])


def test_cubic_periods_at_i():
    # (1, z, dF/dX1, dF/dX0) for F = -kappa (X1)^3/(6 X0), X0 = 1:
    # dF/dX1 = -kappa z^2/2, dF/dX0 = kappa z^3/6
    pi = period_vector(CUBIC, 1j)
    np.testing.assert_allclose(pi, [1.0, 1j, 3.0, -1j], atol=1e-14)


def test_periods_are_holomorphic():
    h = 1e-5
    z = 0.4 + 1.1j
    # Cauchy-Riemann: dPi/dx + i dPi/dy = 0
    dx = (period_vector(CUBIC, z + h) - period_vector(CUBIC, z - h)) / (2 * h)
    dy = (period_vector(CUBIC, z + 1j * h) - period_vector(CUBIC, z - 1j * h)) / (2 * h)
    assert np.max(np.abs(dx + 1j * dy)) <= 1e-8


def test_inadmissible_points_rejected():
    with pytest.raises(DomainError):
        period_vector(CUBIC, 0.5 - 0.1j)
    with pytest.raises(DomainError):
        kahler_potential(RIGID, 1.0 + 1e-9j)


def test_kahler_potential_closed_form():
    rng = np.random.default_rng(0)
    for _ in range(20):
        z = complex(rng.uniform(-2, 2), rng.uniform(0.1, 3))
        assert period_norm(CUBIC, z) == pytest.approx(8.0 * z.imag**3, rel=1e-12)
    assert period_norm(CUBIC, 1j) == pytest.approx(8.0)


def test_rigid_kahler_shift_invariance():
    tau = 0.21 + 1.4j
    assert kahler_potential(RIGID, tau + 1) == pytest.approx(
        kahler_potential(RIGID, tau), rel=1e-13)


def test_positivity_random_points():
    for m, pts in ((CUBIC, _random_points(500, 1)), (RIGID, _random_points(500, 2))):
        for p in pts:
            assert period_norm(m, p) > 0
            assert kahler_data(m, p).g > 0


def test_metric_matches_fd_hessian_of_K():
    h = 1e-4
    for m in (CUBIC, RIGID):
        for p in _random_points(10, 5, ymin=0.5):
            lap = (kahler_potential(m, p + h) + kahler_potential(m, p - h)
                   + kahler_potential(m, p + 1j * h) + kahler_potential(m, p - 1j * h)
                   - 4 * kahler_potential(m, p)) / h**2
            g_fd = lap / 4.0
            # full-K Hessian: for the cubic this is the metric; the rigid
            # model's period factor is constant so it also matches
            assert kahler_data(m, p).g == pytest.approx(g_fd, rel=1e-6)


def test_dK_matches_fd():
    h = 1e-6
    for m in (CUBIC, RIGID):
        p = -0.2 + 0.9j
        dx = (kahler_potential(m, p + h) - kahler_potential(m, p - h)) / (2 * h)
        dy = (kahler_potential(m, p + 1j * h) - kahler_potential(m, p - 1j * h)) / (2 * h)
        dk_fd = 0.5 * (dx - 1j * dy)
        assert kahler_data(m, p).dK == pytest.approx(dk_fd, rel=1e-8)


def test_volume_rigid_closed_form():
    _, vol = metric_and_volume(RIGID, Region(0, 1, 1, 2))
    assert vol == pytest.approx(1.0 / 8.0, rel=1e-9)


def test_volume_cubic_closed_form():
    _, vol = metric_and_volume(CUBIC, Region(-0.4, 0.4, 0.8, 1.6))
    exact = 0.8 * (3.0 / 4.0) * (1 / 0.8 - 1 / 1.6)
    assert vol == pytest.approx(exact, rel=1e-6)


def test_volume_empty_region():
    _, vol = metric_and_volume(CUBIC, Region(0, 0, 1, 2))
    assert vol == 0.0


def test_central_charge_linearity():
    rng = np.random.default_rng(7)
    z = 0.3 + 1.2j
    g1 = ChargeVector(rng.integers(-5, 6, 4))
    g2 = ChargeVector(rng.integers(-5, 6, 4))
    s = ChargeVector(g1.gamma + g2.gamma)
    lhs = central_charge(CUBIC, s, z)
    rhs = central_charge(CUBIC, g1, z) + central_charge(CUBIC, g2, z)
    assert lhs == pytest.approx(rhs, rel=1e-13)
    assert central_charge(CUBIC, ChargeVector([0, 0, 0, 0]), z) == 0


def test_flux_superpotential_hand_expansion():
    # W = (f + tau h)^T eta Pi expanded by hand for the model's eta
    tau = 1j
    f, h = np.array([0, 1]), np.array([1, 0])
    w = central_charge(RIGID, FluxVector(f, h), tau)
    eta = RIGID.eta.astype(complex)
    by_hand = (f + tau * h) @ eta @ np.array([1.0, 1j])
    assert w == pytest.approx(by_hand, abs=1e-15)


def test_normalized_Z2_invariances():
    g = ChargeVector([2, -1, 0, 3])
    z = -0.3 + 1.4j
    v = normalized_Z2(CUBIC, g, z)
    assert normalized_Z2(CUBIC, ChargeVector(-g.gamma), z) == pytest.approx(v, rel=1e-13)
    # compositional check against the two building blocks
    direct = abs(central_charge(CUBIC, g, z)) ** 2 / period_norm(CUBIC, z)
    assert v == pytest.approx(direct, rel=1e-13)


def test_covariant_derivative_matches_fd():
    # D Z = dZ + dK Z; compare the holomorphic part against finite
    # differences of Z
    h = 1e-6
    g = ChargeVector([1, 2, -1, 1])
    for z in _random_points(10, 9, ymin=0.5):
        dz_holo = (central_charge(CUBIC, g, z + h)
                   - central_charge(CUBIC, g, z - h)) / (2 * h)
        kd = kahler_data(CUBIC, z)
        expect = dz_holo + kd.dK * central_charge(CUBIC, g, z)
        got = covariant_derivative(CUBIC, g, z)[0]
        assert got == pytest.approx(expect, rel=1e-6)


def test_rigid_pure_f_flux_derivative():
    # h = 0: D_tau W = -W/(tau - taubar), nonzero whenever W is
    f = FluxVector(np.array([2, 1]), np.array([0, 0]))
    for tau in (1j, -0.3 + 1.8j):
        w = central_charge(RIGID, f, tau)
        dw = covariant_derivative(RIGID, f, tau)[0]
        assert dw == pytest.approx(-w / (tau - np.conj(tau)), rel=1e-12)
        assert abs(dw) > 0


def test_special_geometry_identity_random_points():
    g = ChargeVector([1, -2, 3, 1])
    for z in _random_points(100, 12, ymin=0.2):
        assert yukawa_identity_residual(CUBIC, g, z) <= 1e-8


def test_yukawa_is_kappa():
    for z in (1j, 0.5 + 0.7j):
        assert curvature_quantities(CUBIC, z).yukawa == 6.0


def test_rigid_curvature_density_is_hyperbolic():
    # index density = const * dx dy / y^2; the constant matches the
    # finite-difference metric
    for tau in (1j, 0.2 + 1.5j):
        cq = curvature_quantities(RIGID, tau)
        assert cq.index_density == pytest.approx(0.25 / tau.imag**2, rel=1e-12)
        h = 1e-4
        lap = (kahler_potential(RIGID, tau + h) + kahler_potential(RIGID, tau - h)
               + kahler_potential(RIGID, tau + 1j * h)
               + kahler_potential(RIGID, tau - 1j * h)
               - 4 * kahler_potential(RIGID, tau)) / h**2
        assert cq.index_density == pytest.approx(lap / 4.0, rel=1e-6)


def test_hessian_contract_enforced():
    g = ChargeVector([1, 0, 0, 0])
    with pytest.raises(ContractViolationError):
        hessian_matrix(CUBIC, g, 0.3 + 1.0j)


def test_hessian_at_attractor_point():
    from randcrit.vacua import attractor_flow

    g = ChargeVector([1, 2, 0, -1])
    rec = attractor_flow(CUBIC, g, 0.0 + 1.2j)
    assert rec is not None and rec.converged
    z = rec.location
    h = hessian_matrix(CUBIC, g, z, frame=True)
    det = (h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]).real
    assert det == pytest.approx(rec.value2, rel=1e-6)
    # raw blocks: off-diagonal is omega * sbar
    raw = hessian_matrix(CUBIC, g, z, frame=False)
    kd = kahler_data(CUBIC, z)
    w = central_charge(CUBIC, g, z)
    assert raw[0, 1] == pytest.approx(kd.g * np.conj(w), rel=1e-8)
    assert raw[1, 0] == pytest.approx(kd.g * w, rel=1e-8)
    assert abs((raw[0, 0] * raw[1, 1] - raw[0, 1] * raw[1, 0]).imag) <= 1e-10


def test_ddz_matches_fd_of_dz():
    # DDZ = (d + dK - Gamma) DZ; finite-difference the covariant gradient
    g = ChargeVector([0, 1, 1, -2])
    z = 0.25 + 1.3j
    h = 1e-6

    def dz_at(p):
        return covariant_derivative(CUBIC, g, p)[0]

    holo = (dz_at(z + h) - dz_at(z - h)) / (2 * h)
    anti = (dz_at(z + 1j * h) - dz_at(z - 1j * h)) / (2 * h)
    d_dz = 0.5 * (holo - 1j * anti)
    kd = kahler_data(CUBIC, z)
    expect = d_dz + (kd.dK - kd.gamma) * dz_at(z)
    assert second_covariant_derivative(CUBIC, g, z) == pytest.approx(expect, rel=1e-6)


def test_flux_length_exact():
    eta = np.array([[0, 1], [-1, 0]])
    assert flux_length([1, 0], [0, 1], eta) == 1
    assert flux_length([0, 1], [1, 0], eta) == -1
    big = 10**12
    assert flux_length([big, 0], [0, big], eta) == big * big


def test_flux_length_matches_numeric_wedge():
    # L = (1/Im tau) Re F wedge Im F with F = f + tau h reduces to
    # f^T eta h independent of tau
    rng = np.random.default_rng(4)
    eta = RIGID.eta
    for _ in range(10):
        f = rng.integers(-9, 10, 2)
        h = rng.integers(-9, 10, 2)
        tau = complex(rng.uniform(-1, 1), rng.uniform(0.2, 2.0))
        re_f = f + tau.real * h
        im_f = tau.imag * h
        wedge = (re_f @ eta @ im_f) / tau.imag
        assert flux_length(f, h, eta) == pytest.approx(wedge, abs=1e-12)
