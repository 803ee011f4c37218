"""Плотная комплексная линейная алгебра: эрмитовы разложения, корни ветви Херглотца,
сертификаты положительности и сжатия."""

import numpy as np
import scipy.linalg

from weylkit.domains import HermitianCertificate
from weylkit.errors import DomainError, InvalidInputError, SingularityError

DEFAULT_TOL = 1e-10
CONDITION_LIMIT = 1e14


def as_cmatrix(value, dim: int | None = None) -> np.ndarray:
    """Приведение к квадратной комплексной матрице

    Args:
        value: скаляр, вложенный список или массив
        dim (int): ожидаемая размерность

    Raises:
        InvalidInputError: матрица не квадратная, не той размерности или не конечна
    """
    a = np.atleast_2d(np.asarray(value, dtype=complex))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise InvalidInputError(f"expected dimension {dim}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return a


def op_norm(a: np.ndarray) -> float:
    """Операторная норма (наибольшее сингулярное число)"""
    return float(np.linalg.norm(a, 2))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def im_part(a: np.ndarray) -> np.ndarray:
    """Im M = (M − M*)/(2i)"""
    return (a - a.conj().T) / 2j


def hermiticity_defect(a: np.ndarray) -> float:
    return op_norm(a - a.conj().T)


def check_hermitian(a: np.ndarray, tol: float = DEFAULT_TOL, what: str = "matrix"):
    """Проверка эрмитовости относительно нормы матрицы

    Raises:
        InvalidInputError: дефект эрмитовости больше tol·max(1, ‖a‖)
    """
    defect = hermiticity_defect(a)
    if defect > tol * max(1.0, op_norm(a)):
        raise InvalidInputError(f"{what} is not hermitian (defect {defect:.3g})")


def hermitian_certificate(h: np.ndarray) -> HermitianCertificate:
    eigenvalues = np.linalg.eigvalsh(hermitian_part(h))
    return HermitianCertificate(
        min_eigenvalue=float(eigenvalues[0]),
        max_eigenvalue=float(eigenvalues[-1]),
        hermiticity_defect=hermiticity_defect(h),
    )


def sqrt_upper(z: complex) -> complex:
    """Скалярный корень на ветви Im z^{1/2} ≥ 0"""
    root = np.sqrt(complex(z))
    return -root if root.imag < 0 else root


def herglotz_sqrt(q0: np.ndarray, z: complex, tol: float = DEFAULT_TOL) -> np.ndarray:
    """W = i·(zI − Q₀)^{1/2} на ветви Im(·)^{1/2} > 0

    Корень берется поканально в собственном базисе Q₀, поэтому W² = −(zI − Q₀)
    и Im W ≻ 0.

    Args:
        q0 (np.ndarray): эрмитова матрица
        z (complex): спектральный параметр, Im z > 0

    Raises:
        InvalidInputError: q0 не эрмитова
        DomainError: Im z ≤ 0
    """
    q0 = as_cmatrix(q0)
    check_hermitian(q0, tol, "potential value")
    z = complex(z)
    if z.imag <= 0:
        raise DomainError(f"herglotz branch needs Im z > 0, got z={z}")
    eigenvalues, unitary = scipy.linalg.eigh(hermitian_part(q0))
    roots = np.sqrt(z - eigenvalues.astype(complex))
    return unitary @ np.diag(1j * roots) @ unitary.conj().T


def psd_defect(h: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """max(0, −λ_min((H+H*)/2)); 0 означает положительную полуопределенность

    Raises:
        InvalidInputError: H не эрмитова в пределах tol
    """
    h = np.asarray(h, dtype=complex)
    check_hermitian(h, tol)
    return max(0.0, -float(np.linalg.eigvalsh(hermitian_part(h))[0]))


def contraction_defect(v: np.ndarray) -> float:
    """max(0, λ_max(V*V − I)); 0 подтверждает V*V ≤ I"""
    v = np.asarray(v, dtype=complex)
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("matrix has non-finite entries")
    gram = v.conj().T @ v - np.eye(v.shape[1])
    return max(0.0, float(np.linalg.eigvalsh(hermitian_part(gram))[-1]))


def solve_checked(
    a: np.ndarray, b: np.ndarray, what: str = "matrix", limit: float = CONDITION_LIMIT
) -> np.ndarray:
    """a⁻¹b с проверкой числа обусловленности

    Raises:
        SingularityError: cond(a) > limit
    """
    condition = float(np.linalg.cond(a))
    if not np.isfinite(condition) or condition > limit:
        raise SingularityError(f"{what} is singular", condition)
    return np.linalg.solve(a, b)


def rsolve_checked(
    b: np.ndarray, a: np.ndarray, what: str = "matrix", limit: float = CONDITION_LIMIT
) -> np.ndarray:
    """b·a⁻¹ с проверкой числа обусловленности"""
    return solve_checked(a.T, b.T, what, limit).T
