"""Высокоэнергетическое разложение M₊, проверка порядка остатка, локальность и матрица Грина."""

import logging
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import binom

from weylkit.domains import (
    AsymptoticSeries,
    GreenSeries,
    LimitOptions,
    LocalityReport,
    OrderReport,
    OrderRow,
    PotentialModel,
    StepControl,
)
from weylkit.errors import DomainError, InvalidInputError, NumericalError, SingularityError
from weylkit.matkit import as_cmatrix, op_norm, solve_checked, sqrt_upper
from weylkit.ncpoly import NCPolynomial
from weylkit.potential import agree_on, reflect
from weylkit.propagate import integrate, riccati_trajectory
from weylkit.volterra import m_from_volterra, solve_volterra
from weylkit.weyl import limit_m

logger = logging.getLogger(__name__)

SYMBOL_TOL = 1e-14
BOUND_RATIO = 10.0


@lru_cache(maxsize=None)
def coefficient_polynomials(N: int) -> tuple[NCPolynomial, ...]:
    """Символьные m₊,₁ … m₊,N

    m₊,₁ = Q/(2i), m₊,ₖ₊₁ = (i/2)(m₊,ₖ′ + Σ_{l=1}^{k−1} m₊,ₗ m₊,ₖ₋ₗ);
    порядок сомножителей в сумме сохраняется.
    """
    if N < 0:
        raise InvalidInputError(f"order must be non-negative, got {N}")
    coeffs: list[NCPolynomial] = []
    if N == 0:
        return ()
    coeffs.append(NCPolynomial.symbol(0, 1 / 2j))
    for k in range(1, N):
        total = coeffs[k - 1].derivative()
        for l in range(1, k):
            total = total + coeffs[l - 1] * coeffs[k - l - 1]
        coeffs.append(0.5j * total)
    return tuple(coeffs)


def _derivatives(pot: PotentialModel, x: float, highest: int) -> list[np.ndarray]:
    return [pot.eval(x, j) for j in range(highest + 1)]


def m_coeffs(pot: PotentialModel, x: float, N: int) -> AsymptoticSeries:
    """Коэффициенты m₊,₁(x) … m₊,N(x) разложения M₊(z, x) по степеням z^{-1/2}

    Raises:
        InvalidInputError: N < 0 или у потенциала нет производной Q^{(N−1)} в точке x
    """
    if N < 0:
        raise InvalidInputError(f"order must be non-negative, got {N}")
    required = N - 1
    if required > pot.smoothness_at(x):
        raise InvalidInputError(
            f"order {N} needs the derivative Q^({required}) at x={x:g}, "
            f"potential is smooth to order {pot.smoothness_at(x)} there"
        )
    polys = coefficient_polynomials(N)
    derivs = _derivatives(pot, x, max(required, 0))
    coeffs = tuple(p.evaluate(derivs, pot.dim) for p in polys)
    return AsymptoticSeries(x=x, order=N, dim=pot.dim, coeffs=coeffs, polys=polys)


def _upper_root(z: complex) -> complex:
    root = sqrt_upper(z)
    if root.imag <= 0:
        raise DomainError(f"series evaluation needs Im z^(1/2) > 0, got z={z}")
    return root


def eval_series(series: AsymptoticSeries, z: complex) -> np.ndarray:
    """Частичная сумма iz^{1/2}I + Σ m₊,ₖ z^{-k/2}"""
    root = _upper_root(complex(z))
    result = 1j * root * np.eye(series.dim, dtype=complex)
    for k, coeff in enumerate(series.coeffs, start=1):
        result = result + coeff * root ** (-k)
    return result


def riccati_residual_terms(N: int) -> dict[int, NCPolynomial]:
    """M′ + M² − Q + zI для частичной суммы порядка N по степеням w = z^{-1/2}

    Ключ - показатель степени w. Слагаемые с показателями от −2 до N − 1
    сокращаются тождественно.
    """
    series: dict[int, NCPolynomial] = {-1: NCPolynomial.identity(1j)}
    for k, poly in enumerate(coefficient_polynomials(N), start=1):
        series[k] = poly

    residual: dict[int, NCPolynomial] = {-2: NCPolynomial.identity(), 0: -NCPolynomial.symbol(0)}

    def add(power: int, poly: NCPolynomial):
        residual[power] = residual.get(power, NCPolynomial()) + poly

    for power, poly in series.items():
        add(power, poly.derivative())
    for p1, left in series.items():
        for p2, right in series.items():
            add(p1 + p2, left * right)
    return residual


def taylor_coeffs_constant(q0, N: int) -> list[np.ndarray]:
    """Коэффициенты ряда Тейлора i(zI − Q₀)^{1/2} по степеням z^{-1/2} (эталон для m_coeffs)"""
    q0 = as_cmatrix(q0)
    zero = np.zeros_like(q0)
    coeffs = []
    for k in range(1, N + 1):
        if k % 2 == 0:
            coeffs.append(zero.copy())
            continue
        j = (k + 1) // 2
        coeffs.append(1j * binom(0.5, j) * (-1) ** j * np.linalg.matrix_power(q0, j))
    return coeffs


def verify_order(
    pot: PotentialModel,
    x0: float,
    N: int,
    moduli: Sequence[float],
    deltas: Sequence[float],
    limit_opts: LimitOptions | None = None,
    volterra_tol: float = 1e-13,
    floor: float = 0.0,
) -> OrderReport:
    """Масштабированные остатки R_j = ‖M₊(z_j, x₀) − S_N(z_j)‖·|z_j|^{N/2} на лучах arg z = δ

    Для потенциала с компактным носителем M₊ вычисляется через уравнение
    Вольтерра, иначе через limit_m. Луч проходит проверку, если R_j строго
    убывает на трех последних модулях или все три последних неотмасштабированных
    остатка не превосходят floor (уровень точности решателя).

    Raises:
        InvalidInputError: меньше трех модулей или модули не возрастают
    """
    moduli = [float(r) for r in moduli]
    if len(moduli) < 3:
        raise InvalidInputError("order verification needs at least three moduli")
    if any(b <= a for a, b in zip(moduli[:-1], moduli[1:])):
        raise InvalidInputError("moduli must be strictly increasing")
    series = m_coeffs(pot, x0, N)
    report = OrderReport(order=N, x0=x0)

    for delta in deltas:
        differences, remainders = [], []
        for r in moduli:
            z = r * np.exp(1j * delta)
            if pot.is_compact:
                sol = solve_volterra(z, pot, x0, tol=volterra_tol)
                M = m_from_volterra(sol, x0)
            else:
                M = limit_m(z, x0, pot, limit_opts).m
            difference = op_norm(M - eval_series(series, z))
            differences.append(difference)
            remainders.append(difference * r ** (N / 2))
        tail = remainders[-3:]
        decreasing = all(b < a for a, b in zip(tail[:-1], tail[1:]))
        at_floor = all(d <= floor for d in differences[-3:])
        passed = decreasing or at_floor
        logger.debug("verify_order N=%d delta=%.4g remainders=%s", N, delta, remainders)
        report.rows.append(
            OrderRow(
                delta=float(delta),
                moduli=moduli,
                differences=differences,
                remainders=remainders,
                passed=passed,
            )
        )
    return report


def sandwich_solve(
    A: Callable[[float], np.ndarray],
    X_end: np.ndarray,
    x1: float,
    x0: float,
    ctrl: StepControl | None = None,
    breakpoints: Sequence[float] = (),
) -> np.ndarray:
    """Решение X′ = AX + XA с X(x₁) = X_end в точке x₀ в виде Y(x₀)·X_end·Z(x₀)

    Y′ = AY и Z′ = ZA интегрируются от x₁ с единичными данными.
    """
    X_end = np.asarray(X_end, dtype=complex)
    m = X_end.shape[0]
    if not np.any(X_end):
        return np.zeros_like(X_end)

    def rhs(x, y):
        a = A(x)
        left, right = y[: m * m].reshape(m, m), y[m * m :].reshape(m, m)
        return np.concatenate([(a @ left).ravel(), (right @ a).ravel()])

    identity = np.eye(m, dtype=complex).ravel()
    traj = integrate(rhs, np.concatenate([identity, identity]), x1, x0, ctrl, breakpoints)
    Y = traj.final[: m * m].reshape(m, m)
    Z = traj.final[m * m :].reshape(m, m)
    return Y @ X_end @ Z


def locality_experiment(
    pot1: PotentialModel,
    pot2: PotentialModel,
    x0: float,
    x1: float,
    moduli: Sequence[float],
    delta: float = np.pi / 2,
    opts: LimitOptions | None = None,
    agreement_tol: float = 1e-12,
    bound_ratio: float = BOUND_RATIO,
) -> LocalityReport:
    """Экспоненциальная локальность: ‖M₁,₊(z, x₀) − M₂,₊(z, x₀)‖ при Q₁ = Q₂ на [x₀, x₁]

    Разность переносится от x₁ к x₀ через X′ = AX + XA, A = −(M₁ + M₂)/2,
    без вычитания близких матриц в точке x₀.
    Проверка проходит, если наклон log‖ΔM‖ по Im√z не больше 0.9·(−2(x₁ − x₀))
    и нормированная последовательность ‖ΔM‖·e^{2(x₁ − x₀)Im√z} не превышает
    bound_ratio, умноженное на ее первый элемент.

    Raises:
        InvalidInputError: потенциалы различаются на [x₀, x₁], модулей меньше двух
            или bound_ratio < 1
    """
    if bound_ratio < 1:
        raise InvalidInputError(f"bound_ratio must be at least 1, got {bound_ratio}")
    if not x0 < x1:
        raise InvalidInputError(f"locality needs x0 < x1, got x0={x0}, x1={x1}")
    if len(moduli) < 2:
        raise InvalidInputError("locality experiment needs at least two moduli")
    if not agree_on(pot1, pot2, x0, x1, tol=agreement_tol):
        raise InvalidInputError(f"potentials disagree on [{x0:g}, {x1:g}]")
    opts = opts or LimitOptions()
    m = pot1.dim
    breaks = sorted({*pot1.breakpoints, *pot2.breakpoints})

    differences, direct, sqrt_imag = [], [], []
    for r in moduli:
        z = complex(r * np.exp(1j * delta))
        M1 = limit_m(z, x1, pot1, opts).m
        M2 = limit_m(z, x1, pot2, opts).m
        traj1 = riccati_trajectory(z, M1, pot1, x1, x0, opts.ctrl)
        traj2 = riccati_trajectory(z, M2, pot2, x1, x0, opts.ctrl)

        def A(x, traj1=traj1, traj2=traj2):
            return -0.5 * (traj1(x) + traj2(x)).reshape(m, m)

        X = sandwich_solve(A, M1 - M2, x1, x0, opts.ctrl, breaks)
        differences.append(op_norm(X))
        direct.append(op_norm((traj1.final - traj2.final).reshape(m, m)))
        sqrt_imag.append(sqrt_upper(z).imag)
        logger.debug("locality |z|=%g diff=%.3g direct=%.3g", r, differences[-1], direct[-1])

    length = x1 - x0
    target = -2.0 * length
    normalized = [d * np.exp(2 * length * s) for d, s in zip(differences, sqrt_imag)]
    positive = [(s, d) for s, d in zip(sqrt_imag, differences) if d > 0]
    if len(positive) >= 2:
        xs, ds = zip(*positive)
        slope = float(np.polyfit(xs, np.log(ds), 1)[0])
    else:
        slope = -np.inf
    bounded = max(normalized) <= bound_ratio * normalized[0]
    passed = slope <= 0.9 * target and bounded
    return LocalityReport(
        moduli=[float(r) for r in moduli],
        sqrt_imag=sqrt_imag,
        differences=differences,
        direct_differences=direct,
        normalized=normalized,
        slope=slope,
        target_slope=target,
        bounded=bounded,
        passed=passed,
    )


def green_diag(M_minus: np.ndarray, M_plus: np.ndarray) -> np.ndarray:
    """Диагональ матрицы Грина G(z, x, x) = (M₋ − M₊)⁻¹

    Raises:
        InvalidInputError: разность вырождена
    """
    difference = np.asarray(M_minus, dtype=complex) - np.asarray(M_plus, dtype=complex)
    try:
        return solve_checked(difference, np.eye(difference.shape[0]), "M_minus - M_plus")
    except SingularityError as exc:
        raise InvalidInputError(f"{exc.message}; upstream m-functions are inconsistent") from exc


def _invert_difference(d: Sequence, identity, N: int) -> list:
    # (M₋ − M₊) = (−2i/w)(I + Σ F_n wⁿ), F_n = d_{n−1}/(−2i), F₁ = 0
    F = [None, identity * 0] + [d[n - 1] * 0.5j for n in range(2, 2 * N + 1)]
    g = [identity]
    for n in range(1, 2 * N + 1):
        total = F[1] * g[n - 1]
        for j in range(2, n + 1):
            total = total + F[j] * g[n - j]
        g.append(-total)
    return g


@lru_cache(maxsize=None)
def green_polynomials(N: int) -> tuple[NCPolynomial, ...]:
    """Символьные G₀ … G_N из формального обращения разности рядов M₋ − M₊

    Raises:
        NumericalError: нарушены G₀ = I, G₁ = Q/2 или не обнулились нечетные члены
    """
    if N < 0:
        raise InvalidInputError(f"order must be non-negative, got {N}")
    plus = coefficient_polynomials(max(2 * N - 1, 0))
    # m₋,ₖ = −(m₊,ₖ для отраженного потенциала)
    d = [None] + [-(p.reflect()) - p for p in plus]
    g = _invert_difference(d, NCPolynomial.identity(), N)
    for n in range(1, 2 * N + 1, 2):
        if not g[n].is_zero(SYMBOL_TOL):
            raise NumericalError(f"odd green term g_{n} does not vanish")
    G = tuple(g[2 * k] for k in range(N + 1))
    if G[0] != NCPolynomial.identity():
        raise NumericalError("green series must start with the identity")
    if N >= 1 and not (G[1] - NCPolynomial.symbol(0, 0.5)).is_zero(SYMBOL_TOL):
        raise NumericalError("first green coefficient must equal Q/2")
    return G


def green_coeffs(pot: PotentialModel, x: float, N: int) -> GreenSeries:
    """G₀(x) … G_N(x) в разложении G(z, x, x) = (i/2) Σ G_k z^{−k−1/2}

    Ряд M₋ берется через отражение потенциала относительно x; G_N требует
    коэффициентов M до порядка 2N − 1.

    Raises:
        InvalidInputError: недостаточная гладкость потенциала в точке x
    """
    polys = green_polynomials(N)
    order = max(2 * N - 1, 0)
    plus = m_coeffs(pot, x, order).coeffs
    mirrored = m_coeffs(reflect(pot, x), x, order).coeffs
    d = [None] + [-minus - p for minus, p in zip(mirrored, plus)]
    g = _invert_difference(d, np.eye(pot.dim, dtype=complex), N)
    coeffs = tuple(g[2 * k] for k in range(N + 1))
    return GreenSeries(x=x, order=N, dim=pot.dim, coeffs=coeffs, polys=polys)


def eval_green(series: GreenSeries, z: complex) -> np.ndarray:
    """(i/2) Σ G_k z^{−k−1/2}"""
    root = _upper_root(complex(z))
    result = np.zeros((series.dim, series.dim), dtype=complex)
    for k, coeff in enumerate(series.coeffs):
        result = result + coeff * root ** (-2 * k - 1)
    return 0.5j * result


def green_taylor_constant(q0, N: int) -> list[np.ndarray]:
    """G_k = (−1)^k·binom(−1/2, k)·Q₀^k для постоянного потенциала (эталон)"""
    q0 = as_cmatrix(q0)
    return [
        (-1) ** k * binom(-0.5, k) * np.linalg.matrix_power(q0, k).astype(complex)
        for k in range(N + 1)
    ]
