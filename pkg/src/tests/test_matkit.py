import numpy as np
import pytest

from weylkit.errors import DomainError, InvalidInputError, SingularityError
from weylkit.matkit import (
    as_cmatrix,
    contraction_defect,
    herglotz_sqrt,
    hermitian_certificate,
    im_part,
    op_norm,
    psd_defect,
    rsolve_checked,
    solve_checked,
    sqrt_upper,
)


def random_hermitian(rng, m, scale=1.0):
    a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return scale * (a + a.conj().T) / 2


def test_as_cmatrix_scalar():
    a = as_cmatrix(2.5)
    assert a.shape == (1, 1)
    assert a[0, 0] == 2.5


def test_as_cmatrix_rejects_non_square():
    with pytest.raises(InvalidInputError):
        as_cmatrix([[1.0, 2.0]])


def test_as_cmatrix_rejects_wrong_dim():
    with pytest.raises(InvalidInputError):
        as_cmatrix(np.eye(2), 3)


def test_sqrt_upper_branch():
    assert sqrt_upper(-4) == pytest.approx(2j)
    assert sqrt_upper(4j).imag > 0
    assert sqrt_upper(-1 - 1e-9j).imag > 0


def test_herglotz_sqrt_free():
    # i·(4i)^{1/2} = √2(−1 + i)
    value = herglotz_sqrt(np.zeros((1, 1)), 4j)
    assert value[0, 0] == pytest.approx(np.sqrt(2) * (-1 + 1j))


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_herglotz_sqrt_square_and_sign(rng, m):
    q0 = random_hermitian(rng, m, 3.0)
    z = 2.0 + 0.5j
    w = herglotz_sqrt(q0, z)
    # W² = Q₀ − zI
    assert op_norm(w @ w - (q0 - z * np.eye(m))) < 1e-10
    assert psd_defect(im_part(w)) == 0.0
    assert np.linalg.eigvalsh(im_part(w))[0] > 0


def test_herglotz_sqrt_real_z():
    with pytest.raises(DomainError):
        herglotz_sqrt(np.eye(2), 3.0)


def test_herglotz_sqrt_rejects_non_hermitian():
    with pytest.raises(InvalidInputError):
        herglotz_sqrt(np.array([[0.0, 1.0], [0.0, 0.0]]), 1j)


def test_hermitian_certificate(q0):
    certificate = hermitian_certificate(q0)
    eigenvalues = np.linalg.eigvalsh(q0)
    assert certificate.min_eigenvalue == pytest.approx(eigenvalues[0])
    assert certificate.max_eigenvalue == pytest.approx(eigenvalues[-1])
    assert certificate.hermiticity_defect < 1e-15


def test_psd_defect():
    assert psd_defect(np.diag([1.0, 0.0])) == 0.0
    assert psd_defect(np.diag([1.0, -0.5])) == pytest.approx(0.5)


def test_contraction_defect():
    assert contraction_defect(0.5 * np.eye(2)) == 0.0
    assert contraction_defect(np.eye(2)) == pytest.approx(0.0, abs=1e-15)
    assert contraction_defect(np.diag([2.0, 0.1])) == pytest.approx(3.0)


def test_solve_checked_singular():
    with pytest.raises(SingularityError) as exc:
        solve_checked(np.array([[1.0, 1.0], [1.0, 1.0]]), np.eye(2), "test matrix")
    assert "test matrix" in exc.value.message


def test_rsolve_checked(rng):
    a = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    b = rng.normal(size=(3, 3))
    x = rsolve_checked(b, a)
    assert op_norm(x @ a - b) < 1e-12
