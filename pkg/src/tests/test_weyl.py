import dataclasses

import numpy as np
import pytest

from weylkit import weyl
from weylkit.domains import LimitOptions, SignClass
from weylkit.errors import DomainError, InvalidInputError
from weylkit.matkit import herglotz_sqrt, im_part, op_norm, psd_defect, sqrt_upper
from weylkit.potential import make_piecewise_constant
from weylkit.propagate import riccati_flow
from weylkit.weyl import (
    boundary_data,
    dirichlet,
    disk_membership,
    disk_sample,
    limit_m,
    mirror_m_minus,
    nested_defects,
    neumann,
    random_positive_boundary,
    random_selfadjoint_boundary,
    regular_m,
    tail_boundary,
)


def test_boundary_classes():
    assert dirichlet(2).sign_class == SignClass.SELFADJOINT
    assert neumann(2).sign_class == SignClass.SELFADJOINT
    assert boundary_data(np.eye(2), 1j * np.eye(2)).sign_class == SignClass.POSITIVE
    assert boundary_data(np.eye(2), -1j * np.eye(2)).sign_class == SignClass.NEGATIVE


def test_boundary_rank_deficient():
    with pytest.raises(InvalidInputError):
        boundary_data(np.diag([1.0, 0.0]), np.zeros((2, 2)))


def test_boundary_indefinite():
    with pytest.raises(InvalidInputError):
        boundary_data(np.eye(2), np.diag([1j, -1j]))


def test_random_boundaries(rng):
    for _ in range(5):
        assert random_positive_boundary(3, rng).sign_class == SignClass.POSITIVE
        assert random_selfadjoint_boundary(3, rng).sign_class == SignClass.SELFADJOINT


def test_tail_boundary_is_positive(q0):
    beta = tail_boundary(herglotz_sqrt(q0, 2.0 + 1.0j))
    assert beta.sign_class == SignClass.POSITIVE


def test_regular_m_free_dirichlet(zero_potential, ctrl):
    z = 2.0 + 1.0j
    k = np.sqrt(z)
    M = regular_m(z, 1.0, 0.0, zero_potential, dirichlet(1), ctrl)
    assert M[0, 0] == pytest.approx(-k * np.cos(k) / np.sin(k), rel=1e-8)


def test_regular_m_is_herglotz(gaussian_2x2, rng, ctrl):
    z = -1.0 + 0.5j
    for _ in range(3):
        M = regular_m(z, 2.0, 0.0, gaussian_2x2, random_selfadjoint_boundary(2, rng), ctrl)
        assert np.linalg.eigvalsh(im_part(M))[0] > 0


def test_regular_m_charts_agree(gaussian_2x2, rng, ctrl):
    z = 3.0 + 2.0j
    beta = random_positive_boundary(2, rng)
    fundamental = regular_m(z, 2.0, 0.0, gaussian_2x2, beta, ctrl, method="fundamental")
    cayley = regular_m(z, 2.0, 0.0, gaussian_2x2, beta, ctrl, method="cayley")
    assert op_norm(fundamental - cayley) < 1e-7 * max(1.0, op_norm(fundamental))


def test_regular_m_rejects_bad_horizon(zero_potential):
    with pytest.raises(InvalidInputError):
        regular_m(1j, 0.0, 0.0, zero_potential, dirichlet(1))


def test_regular_m_real_z(zero_potential):
    with pytest.raises(DomainError):
        regular_m(2.0, 1.0, 0.0, zero_potential, dirichlet(1))


@pytest.mark.parametrize("z", [1j, 1 + 1j, 10j])
def test_disk_containment_and_nesting(gaussian_2x2, rng, ctrl, z):
    horizons = [1.0, 2.0, 4.0]
    for sample in range(4):
        make = random_positive_boundary if sample % 2 == 0 else random_selfadjoint_boundary
        beta = make(2, rng)
        for c in horizons:
            smaller = [h for h in horizons if h <= c]
            M, defects = nested_defects(z, c, 0.0, gaussian_2x2, beta, smaller, ctrl)
            assert len(defects) == len(smaller)
            assert max(defects) <= 1e-8
            expected = regular_m(z, c, 0.0, gaussian_2x2, beta, ctrl)
            assert op_norm(M - expected) < 1e-7 * max(1.0, op_norm(expected))


def test_forward_membership_of_regular_m(gaussian_2x2, rng, ctrl):
    # прямой поток усиливает ошибку M как e^{2Im√z·h}, допуск растет с горизонтом
    z = 1j
    growth = sqrt_upper(z).imag
    M = regular_m(z, 2.0, 0.0, gaussian_2x2, random_positive_boundary(2, rng), ctrl)
    for h in [1.0, 2.0]:
        assert disk_membership(M, z, h, 0.0, gaussian_2x2, ctrl) <= 1e-8 * np.exp(2 * growth * h)


def test_disk_rejects_point_outside_smaller_disk(zero_potential, ctrl):
    z = 10j
    k = sqrt_upper(z)
    candidate = (1j * k + 0.05 * abs(k)) * np.eye(1)
    assert disk_membership(candidate, z, 1.0, 0.0, zero_potential, ctrl) > 0.1


def test_nested_defects_rejects_bad_input(zero_potential, rng):
    beta = random_positive_boundary(1, rng)
    with pytest.raises(InvalidInputError):
        nested_defects(1j, 1.0, 0.0, zero_potential, beta, [2.0])
    with pytest.raises(DomainError):
        nested_defects(-1j, 1.0, 0.0, zero_potential, beta, [1.0])
    negative = boundary_data(np.eye(1), -1j * np.eye(1))
    with pytest.raises(DomainError):
        nested_defects(1j, 1.0, 0.0, zero_potential, negative, [1.0])


def test_disk_rejects_wrong_sign(zero_potential, ctrl):
    z = 4.0j
    outside = -1j * sqrt_upper(z) * np.eye(1)
    assert disk_membership(outside, z, 1.0, 0.0, zero_potential, ctrl) > 0


def test_disk_sample_at_base_point(zero_potential):
    z = 4.0j
    sample = disk_sample(herglotz_sqrt(np.zeros((1, 1)), z), z, 0.0, 0.0, zero_potential)
    assert sample.max_contraction_defect == 0.0
    assert abs(sample.theta_cayley[0, 0]) < 1


def test_limit_m_free(zero_potential, limit_opts):
    result = limit_m(4.0j, 0.0, zero_potential, limit_opts)
    assert result.m[0, 0] == pytest.approx(np.sqrt(2) * (-1 + 1j), rel=1e-8)
    assert result.boundary == "tail"
    assert not result.limit_circle


@pytest.mark.parametrize("modulus", [1.0, 100.0])
@pytest.mark.parametrize("delta", [0.1, np.pi / 2, np.pi - 0.1])
def test_limit_m_constant(constant_potential, q0, limit_opts, modulus, delta):
    z = modulus * np.exp(1j * delta)
    expected = herglotz_sqrt(q0, z)
    result = limit_m(z, 0.0, constant_potential, limit_opts)
    assert op_norm(result.m - expected) < 1e-7 * op_norm(expected)


def test_limit_m_dirichlet_converges(gaussian_2x2, ctrl):
    z = 1.0 + 4.0j
    tail = limit_m(z, 0.0, gaussian_2x2, LimitOptions(rtol=1e-8, ctrl=ctrl))
    sequence = limit_m(
        z, 0.0, gaussian_2x2, LimitOptions(rtol=1e-8, boundary="dirichlet", ctrl=ctrl)
    )
    assert sequence.boundary == "dirichlet"
    assert not sequence.limit_circle
    assert op_norm(tail.m - sequence.m) < 1e-6


def test_limit_m_domain(zero_potential):
    with pytest.raises(DomainError):
        limit_m(-1j, 0.0, zero_potential)


def test_limit_m_unknown_boundary(zero_potential):
    with pytest.raises(InvalidInputError):
        limit_m(1j, 0.0, zero_potential, LimitOptions(boundary="robin"))


def test_mirror_m_minus_constant(constant_potential, q0, limit_opts):
    z = 3.0 + 3.0j
    result = mirror_m_minus(z, 0.0, constant_potential, limit_opts)
    assert op_norm(result.m + herglotz_sqrt(q0, z)) < 1e-7 * op_norm(result.m)


def test_regular_m_free_neumann(zero_potential, ctrl):
    z = 2.0 + 1.0j
    k = np.sqrt(z)
    M = regular_m(z, 1.5, 0.0, zero_potential, neumann(1), ctrl)
    assert M[0, 0] == pytest.approx(k * np.tan(1.5 * k), rel=1e-8)


def test_regular_m_conjugation(gaussian_2x2, rng, ctrl):
    # M(z̄) = M(z)* для эрмитова Q и самосопряженного β
    z = 1.0 + 2.0j
    beta = random_selfadjoint_boundary(2, rng)
    upper = regular_m(z, 2.0, 0.0, gaussian_2x2, beta, ctrl)
    lower = regular_m(z.conjugate(), 2.0, 0.0, gaussian_2x2, beta, ctrl)
    assert op_norm(lower - upper.conj().T) < 1e-8 * op_norm(upper)


def test_limit_m_step_barrier(limit_opts):
    # q = q₀ на [0, 1], 0 правее; u = e^{ikx} на [1, ∞)
    q_value, z = 3.0, 4.0j
    k = sqrt_upper(z)
    kappa = np.sqrt(z - q_value)
    expected = (kappa * np.sin(kappa) + 1j * k * np.cos(kappa)) / (
        np.cos(kappa) - 1j * k * np.sin(kappa) / kappa
    )
    barrier = make_piecewise_constant([0.0, 1.0], [[[q_value]]])
    result = limit_m(z, 0.0, barrier, limit_opts)
    assert result.m[0, 0] == pytest.approx(expected, rel=1e-8)


def test_limit_m_translation(gaussian_2x2, limit_opts, ctrl):
    z = 1.0 + 2.0j
    start = limit_m(z, 0.0, gaussian_2x2, limit_opts).m
    end = limit_m(z, 1.5, gaussian_2x2, limit_opts).m
    forward = riccati_flow(z, start, gaussian_2x2, 0.0, 1.5, ctrl)
    backward = riccati_flow(z, end, gaussian_2x2, 1.5, 0.0, ctrl)
    assert op_norm(forward - end) < 1e-7 * op_norm(end)
    assert op_norm(backward - start) < 1e-7 * op_norm(start)


@pytest.mark.parametrize("z", [-3.0 + 0.5j, 0.5j, 2.0 + 0.5j, 1.0 + 3.0j, -10.0 + 10.0j])
def test_limit_m_is_herglotz(gaussian_2x2, limit_opts, z):
    M = limit_m(z, 0.7, gaussian_2x2, limit_opts).m
    assert psd_defect(im_part(M)) == 0.0


def test_limit_m_agreeing_boundaries(zero_potential, limit_opts):
    opts = dataclasses.replace(limit_opts, boundary="dirichlet")
    result = limit_m(4.0j, 0.0, zero_potential, opts)
    assert result.boundary == "dirichlet"
    assert not result.limit_circle
    assert result.alternate is None


def test_limit_m_flags_limit_circle(zero_potential, limit_opts, monkeypatch):
    # пределы для Дирихле и Неймана расходятся: обе точки диска возвращаются
    sequence = weyl._limit_sequence

    def shifted(z, x0, pot, beta, horizons, opts):
        M, *rest = sequence(z, x0, pot, beta, horizons, opts)
        if not np.any(beta.beta1):
            M = M + 1e-3
        return (M, *rest)

    monkeypatch.setattr(weyl, "_limit_sequence", shifted)
    opts = dataclasses.replace(limit_opts, boundary="dirichlet")
    result = limit_m(4.0j, 0.0, zero_potential, opts)
    assert result.limit_circle
    assert op_norm(result.alternate - result.m - 1e-3) < 1e-8
