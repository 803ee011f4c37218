import numpy as np
import pytest

from weylkit import propagate
from weylkit.domains import FundamentalTrajectory, StepControl
from weylkit.errors import (
    DomainError,
    HerglotzViolationError,
    InvalidInputError,
    NumericalError,
    OverflowRiskError,
    StiffnessError,
)
from weylkit.matkit import herglotz_sqrt, op_norm
from weylkit.potential import make_constant
from weylkit.propagate import (
    fundamental_trajectory,
    growth_exponent,
    herglotz_defect,
    integrate,
    lagrange_residual,
    propagate_fundamental,
    riccati_flow,
    riccati_states,
    riccati_trajectory,
)


def piece(a: complex, h: float) -> np.ndarray:
    root = np.sqrt(a)
    return np.array(
        [
            [np.cosh(root * h), np.sinh(root * h) / root],
            [root * np.sinh(root * h), np.cosh(root * h)],
        ]
    )


def test_free_fundamental_system(zero_potential, ctrl):
    z = 3.0 + 1.0j
    k = np.sqrt(z)
    fs = propagate_fundamental(z, zero_potential, 0.0, 2.0, ctrl)
    assert fs.theta[0, 0] == pytest.approx(np.cos(2 * k), rel=1e-8)
    assert fs.phi[0, 0] == pytest.approx(np.sin(2 * k) / k, rel=1e-8)
    assert fs.theta_prime[0, 0] == pytest.approx(-k * np.sin(2 * k), rel=1e-8)
    assert fs.phi_prime[0, 0] == pytest.approx(np.cos(2 * k), rel=1e-8)


def test_identity_at_base_point(constant_potential, ctrl):
    fs = propagate_fundamental(1j, constant_potential, 0.5, 0.5, ctrl)
    assert np.allclose(fs.psi, np.eye(4))


def test_horizon_before_base_point(zero_potential):
    with pytest.raises(InvalidInputError):
        propagate_fundamental(1j, zero_potential, 1.0, 0.0)


def test_piecewise_transfer_matrix(step_potential, ctrl):
    z = 1.0j
    fs = propagate_fundamental(z, step_potential, 0.0, 2.0, ctrl)
    expected = piece(-1.0 - z, 1.0) @ piece(2.0 - z, 1.0)
    assert op_norm(fs.psi - expected) < 1e-8 * op_norm(expected)


def test_overflow_is_reported(zero_potential, ctrl):
    with pytest.raises(OverflowRiskError):
        propagate_fundamental(1e4j, zero_potential, 0.0, 100.0, ctrl)


def lagrange_cases():
    hermitian = np.array([[0.5, 1.0 - 2.0j], [1.0 + 2.0j, -1.5]])
    return [
        (1j, make_constant(0.0), 1.0),
        (1.0 + 2.0j, make_constant(hermitian), 2.0),
    ]


@pytest.mark.parametrize("z, pot, c", lagrange_cases())
def test_lagrange_identity_closed_forms(ctrl, z, pot, c):
    samples = fundamental_trajectory(z, pot, 0.0, c, ctrl)
    scale = max(1.0, op_norm(samples.psis[-1]) ** 2)
    assert lagrange_residual(samples) < 1e-6 * scale


def test_lagrange_identity(gaussian_2x2, ctrl):
    samples = fundamental_trajectory(2.0 + 1.0j, gaussian_2x2, 0.0, 3.0, ctrl)
    scale = max(1.0, op_norm(samples.psis[-1]) ** 2)
    assert lagrange_residual(samples) < 1e-6 * scale


def test_lagrange_residual_checks_grid(zero_potential):
    psis = np.repeat(np.eye(2)[None], 3, axis=0)
    bad = FundamentalTrajectory(z=1j, x0=0.0, xs=np.array([0.0, 1.0]), psis=psis)
    with pytest.raises(InvalidInputError):
        lagrange_residual(bad)
    unordered = FundamentalTrajectory(z=1j, x0=0.0, xs=np.array([0.0, 2.0, 1.0]), psis=psis)
    with pytest.raises(InvalidInputError):
        lagrange_residual(unordered)
    good = FundamentalTrajectory(z=1j, x0=0.0, xs=np.array([0.0, 1.0, 2.0]), psis=psis)
    with pytest.raises(InvalidInputError):
        lagrange_residual(good, z=2j)


def test_riccati_constant_is_stationary(constant_potential, q0, ctrl):
    z = 5.0 + 2.0j
    M = herglotz_sqrt(q0, z)
    result = riccati_flow(z, M, constant_potential, 0.0, 3.0, ctrl)
    assert op_norm(result - M) < 1e-8


def test_riccati_dense_output(zero_potential, ctrl):
    z = 4.0j
    M = herglotz_sqrt(np.zeros((1, 1)), z)
    traj = riccati_trajectory(z, M, zero_potential, 2.0, 0.0, ctrl)
    assert traj(1.3).reshape(1, 1)[0, 0] == pytest.approx(M[0, 0], rel=1e-8)


def test_riccati_real_z(zero_potential):
    with pytest.raises(DomainError):
        riccati_flow(2.0, np.zeros((1, 1)), zero_potential, 0.0, 1.0)


def test_riccati_pole(zero_potential, ctrl):
    # M′ = −z − M² с M(0) = 0 почти совпадает с −tan x при z ≈ 1
    with pytest.raises(NumericalError):
        riccati_flow(1.0 + 1e-14j, np.zeros((1, 1)), zero_potential, 0.0, 3.0, ctrl)


def test_integrate_backward_with_breakpoints():
    traj = integrate(lambda x, y: np.array([1.0 if x < 1.0 else 2.0]), [0.0], 2.0, 0.0, None, [1.0])
    # ∫ от 2 до 0: −(2·1 + 1·1)
    assert traj.final[0].real == pytest.approx(-3.0)


def test_growth_exponent():
    assert growth_exponent(-1.0 + 0.0j, 0.0, 2.0) == pytest.approx(2.0)


def test_step_budget(zero_potential):
    ctrl = StepControl(rtol=1e-12, atol=1e-14, max_steps=5)
    with pytest.raises(StiffnessError) as exc:
        propagate_fundamental(4.0j, zero_potential, 0.0, 10.0, ctrl)
    assert exc.value.exit_code == 1


def test_riccati_states_keep_sign(gaussian_2x2, ctrl):
    z = 2.0 + 3.0j
    M = herglotz_sqrt(np.zeros((2, 2)), z)
    traj = riccati_trajectory(z, M, gaussian_2x2, 3.0, 0.0, ctrl)
    states = riccati_states(z, traj, 2)
    assert states[0].x == 3.0
    assert states[-1].x == pytest.approx(0.0)
    assert herglotz_defect(states) == 0.0


@pytest.mark.parametrize("z", [4.0, -4.0])
def test_real_z_free_system(zero_potential, ctrl, z):
    k = np.sqrt(complex(z))
    fs = propagate_fundamental(z, zero_potential, 0.0, 2.0, ctrl)
    assert fs.theta[0, 0] == pytest.approx(np.cos(2 * k), rel=1e-8)
    assert fs.phi[0, 0] == pytest.approx(np.sin(2 * k) / k, rel=1e-8)
    assert fs.theta_prime[0, 0] == pytest.approx(-k * np.sin(2 * k), rel=1e-8)


def test_integrator_order(zero_potential):
    # постоянный шаг h: допуски не отбрасывают ни одного шага
    z = 4.0 + 1.0j
    k = np.sqrt(z)
    errors = []
    for h in [0.2, 0.1, 0.05]:
        ctrl = StepControl(rtol=1.0, atol=1.0, max_step=h, first_step=h)
        fs = propagate_fundamental(z, zero_potential, 0.0, 2.0, ctrl)
        errors.append(abs(fs.theta[0, 0] - np.cos(2 * k)))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 4.0)


def test_riccati_matches_fundamental(gaussian_2x2, rng, ctrl):
    z = 1.0 + 2.0j
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    # Im M₀ ≺ 0 сохраняется прямым потоком, полюсов нет
    M0 = (a + a.conj().T) / 2 - 1j * (b @ b.conj().T + 0.1 * np.eye(2))
    fs = propagate_fundamental(z, gaussian_2x2, 0.0, 2.0, ctrl)
    expected = (fs.theta_prime + fs.phi_prime @ M0) @ np.linalg.inv(fs.theta + fs.phi @ M0)
    result = riccati_flow(z, M0, gaussian_2x2, 0.0, 2.0, ctrl)
    assert op_norm(result - expected) < 1e-7 * op_norm(expected)


def test_forward_flow_keeps_negative_sign(zero_potential, ctrl):
    z = 4.0j
    M = -herglotz_sqrt(np.zeros((1, 1)), z)
    traj = riccati_trajectory(z, M, zero_potential, 0.0, 2.0, ctrl)
    assert herglotz_defect(riccati_states(z, traj, 1), sign=-1.0) == 0.0
    assert riccati_flow(z, M, zero_potential, 0.0, 2.0, ctrl)[0, 0] == pytest.approx(M[0, 0])


def test_riccati_sign_violation(gaussian_2x2, zero_potential, monkeypatch, ctrl):
    monkeypatch.setattr(propagate, "herglotz_defect", lambda states, sign=1.0: 1.0)
    M = herglotz_sqrt(np.zeros((2, 2)), 2.0 + 3.0j)
    with pytest.raises(HerglotzViolationError):
        riccati_flow(2.0 + 3.0j, M, gaussian_2x2, 3.0, 0.0, ctrl)
    # прямой поток из Im M ≻ 0 знак не проверяет
    free = herglotz_sqrt(np.zeros((1, 1)), 2.0 + 3.0j)
    assert riccati_flow(2.0 + 3.0j, free, zero_potential, 0.0, 1.0, ctrl)[0, 0] == pytest.approx(
        free[0, 0]
    )
