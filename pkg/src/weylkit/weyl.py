"""Граничные данные, регулярная M-функция, диски Риккати и предельная точка M₊(z, x₀)."""

import dataclasses
import logging

import numpy as np
import scipy.linalg

from weylkit.cayley import theta_trajectory, to_disk, from_disk
from weylkit.domains import (
    BoundaryData,
    DiskSample,
    LimitOptions,
    LimitResult,
    PotentialModel,
    SignClass,
    StepControl,
    ThetaTrajectory,
)
from weylkit.errors import (
    DomainError,
    HerglotzViolationError,
    InvalidInputError,
    NonConvergenceError,
    OverflowRiskError,
    RiccatiPoleError,
    SingularityError,
)
from weylkit.matkit import (
    as_cmatrix,
    contraction_defect,
    herglotz_sqrt,
    im_part,
    op_norm,
    psd_defect,
    rsolve_checked,
    solve_checked,
)
from weylkit.potential import reflect
from weylkit.propagate import growth_exponent, propagate_fundamental

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10
SIGN_TOL = 1e-10
HERGLOTZ_TOL = 1e-8
CAYLEY_THRESHOLD = 30.0


def boundary_data(beta1, beta2, tol: float = SIGN_TOL) -> BoundaryData:
    """Граничные данные с проверкой ранга и классификацией знака Im(β₂β₁*)

    Raises:
        InvalidInputError: ранг [β₁ β₂] меньше m или Im(β₂β₁*) знаконеопределена
    """
    beta1 = as_cmatrix(beta1)
    beta2 = as_cmatrix(beta2, beta1.shape[0])
    block = np.hstack([beta1, beta2])
    singular = np.linalg.svd(block, compute_uv=False)
    if singular[-1] < RANK_TOL * singular[0]:
        raise InvalidInputError("boundary data [beta1 beta2] is rank deficient")

    scale = singular[0] ** 2
    form = im_part(beta2 @ beta1.conj().T)
    eigenvalues = np.linalg.eigvalsh(form)
    if op_norm(form) <= tol * scale:
        sign_class = SignClass.SELFADJOINT
    elif eigenvalues[0] > tol * scale:
        sign_class = SignClass.POSITIVE
    elif eigenvalues[-1] < -tol * scale:
        sign_class = SignClass.NEGATIVE
    else:
        raise InvalidInputError("Im(beta2 beta1*) is indefinite, boundary data not admissible")
    return BoundaryData(beta1=beta1, beta2=beta2, sign_class=sign_class)


def dirichlet(m: int) -> BoundaryData:
    return boundary_data(np.eye(m), np.zeros((m, m)))


def neumann(m: int) -> BoundaryData:
    return boundary_data(np.zeros((m, m)), np.eye(m))


def tail_boundary(m_tail: np.ndarray) -> BoundaryData:
    """β = [M∞, −I]: условие u′ = M∞u затухающего решения на постоянном хвосте"""
    m_tail = as_cmatrix(m_tail)
    return boundary_data(m_tail, -np.eye(m_tail.shape[0]))


def _random_hermitian(m: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return (a + a.conj().T) / 2


def random_positive_boundary(m: int, rng: np.random.Generator) -> BoundaryData:
    """β₁ = I, β₂ = S + iP со случайными эрмитовой S и P ≻ 0"""
    b = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    positive = b @ b.conj().T / m + 0.1 * np.eye(m)
    return boundary_data(np.eye(m), _random_hermitian(m, rng) + 1j * positive)


def random_selfadjoint_boundary(m: int, rng: np.random.Generator) -> BoundaryData:
    """β = [cos A, sin A] для случайной эрмитовой A"""
    eigenvalues, unitary = scipy.linalg.eigh(_random_hermitian(m, rng))
    cos = unitary @ np.diag(np.cos(eigenvalues)) @ unitary.conj().T
    sin = unitary @ np.diag(np.sin(eigenvalues)) @ unitary.conj().T
    return boundary_data(cos, sin)


def _check_domain(z: complex, beta: BoundaryData):
    if z.imag == 0:
        raise DomainError("regular m-function is not defined for real z")
    if beta.sign_class is SignClass.POSITIVE and z.imag < 0:
        raise DomainError("positive boundary data needs Im z > 0")
    if beta.sign_class is SignClass.NEGATIVE and z.imag > 0:
        raise DomainError("negative boundary data needs Im z < 0")


def _regular_m_fundamental(z, c, x0, pot, beta, ctrl):
    system = propagate_fundamental(z, pot, x0, c, ctrl)
    beta_phi = beta.beta1 @ system.phi + beta.beta2 @ system.phi_prime
    beta_theta = beta.beta1 @ system.theta + beta.beta2 @ system.theta_prime
    return -solve_checked(beta_phi, beta_theta, "beta Phi")


def boundary_chart(beta: BoundaryData, s: float) -> np.ndarray:
    """ϑ(c) = (U + (i/s)U′)(U − (i/s)U′)⁻¹ для базиса [U; U′] ядра β"""
    m = beta.dim
    kernel = scipy.linalg.null_space(beta.matrix)
    u, u_prime = kernel[:m], kernel[m:]
    return rsolve_checked(u + (1j / s) * u_prime, u - (1j / s) * u_prime, "boundary chart")


def _boundary_trajectory(z, c, x0, pot, beta, ctrl) -> ThetaTrajectory:
    s = float(np.sqrt(abs(z)))
    return theta_trajectory(z, boundary_chart(beta, s), pot, c, x0, ctrl)


def _regular_m_cayley(z, c, x0, pot, beta, ctrl):
    traj = _boundary_trajectory(z, c, x0, pot, beta, ctrl)
    return from_disk(traj.thetas[-1], float(np.sqrt(abs(z))))


def _check_herglotz(M: np.ndarray, z: complex):
    sign = 1.0 if z.imag > 0 else -1.0
    defect = psd_defect(sign * im_part(M), tol=1e-6)
    if defect > HERGLOTZ_TOL * max(1.0, op_norm(M)):
        raise HerglotzViolationError(defect)


def regular_m(
    z: complex,
    c: float,
    x0: float,
    pot: PotentialModel,
    beta: BoundaryData,
    ctrl: StepControl | None = None,
    method: str = "auto",
) -> np.ndarray:
    """M(z, c, x₀, β) = −(βΦ)⁻¹(βΘ)

    При Im√z·(c − x₀) > 30 (или при переполнении Ψ) значение находится обратным
    интегрированием потока в координатах диска от границы c до x₀.

    Args:
        method (str): "auto", "fundamental" или "cayley"

    Raises:
        DomainError: z вне области определения для класса β
        SingularityError: βΦ вырождена
        HerglotzViolationError: нарушен знак Im M
    """
    z = complex(z)
    if not c > x0:
        raise InvalidInputError(f"horizon c={c} must exceed x0={x0}")
    if beta.dim != pot.dim:
        raise InvalidInputError("boundary data and potential dimensions differ")
    _check_domain(z, beta)
    if method not in ("auto", "fundamental", "cayley"):
        raise InvalidInputError(f"unknown method {method!r}")
    if method == "cayley" and z.imag < 0:
        raise DomainError("cayley chart needs Im z > 0")

    chosen = method
    if method == "auto":
        large = growth_exponent(z, x0, c) > CAYLEY_THRESHOLD
        chosen = "cayley" if large and z.imag > 0 else "fundamental"
    logger.debug("regular_m z=%s c=%g via %s", z, c, chosen)

    if chosen == "cayley":
        M = _regular_m_cayley(z, c, x0, pot, beta, ctrl)
    else:
        try:
            M = _regular_m_fundamental(z, c, x0, pot, beta, ctrl)
        except (OverflowRiskError, SingularityError):
            if method != "auto" or z.imag < 0:
                raise
            logger.debug("fundamental path failed at z=%s, switching to cayley chart", z)
            M = _regular_m_cayley(z, c, x0, pot, beta, ctrl)

    _check_herglotz(M, z)
    return M


def disk_membership(
    M_cand: np.ndarray,
    z: complex,
    c: float,
    x0: float,
    pot: PotentialModel,
    ctrl: StepControl | None = None,
) -> float:
    """Наибольший дефект сжатия образа Кэли кандидата вдоль потока на [x₀, c]

    Значение не больше допуска означает, что кандидат лежит в диске Риккати.
    Кандидат с неположительной мнимой частью не отклоняется: его дефект
    положителен уже в точке x₀. Взрыв потока дает бесконечный дефект.

    Raises:
        DomainError: Im z ≤ 0
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("disk membership needs Im z > 0")
    return disk_sample(M_cand, z, c, x0, pot, ctrl).max_contraction_defect


def disk_sample(
    M_cand: np.ndarray,
    z: complex,
    c: float,
    x0: float,
    pot: PotentialModel,
    ctrl: StepControl | None = None,
) -> DiskSample:
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("disk membership needs Im z > 0")
    if c < x0:
        raise InvalidInputError(f"horizon c={c} precedes x0={x0}")
    M_cand = as_cmatrix(M_cand, pot.dim)
    s = float(np.sqrt(abs(z)))
    theta0 = to_disk(M_cand, s)
    if c == x0:
        defect = contraction_defect(theta0)
    else:
        try:
            defect = theta_trajectory(z, theta0, pot, x0, c, ctrl).max_contraction_defect
        except RiccatiPoleError:
            defect = np.inf
    return DiskSample(
        z=z, c=c, x0=x0, M=M_cand, theta_cayley=theta0, max_contraction_defect=defect
    )


def nested_defects(
    z: complex,
    c: float,
    x0: float,
    pot: PotentialModel,
    beta: BoundaryData,
    horizons: list[float],
    ctrl: StepControl | None = None,
) -> tuple[np.ndarray, list[float]]:
    """M(z, c, x₀, β) и его дефекты относительно дисков D^R(z, h, x₀) для h из horizons

    Прямой поток из M(z, c, x₀, β) проходит обратную траекторию от границы c.
    Дефект на [x₀, h] берется с нее: наибольший по принятым точкам [x₀, h] и в h.

    Raises:
        DomainError: Im z ≤ 0 или класс β не допускает z
        InvalidInputError: горизонт вне (x₀, c]
        HerglotzViolationError: нарушен знак Im M
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("disk nesting needs Im z > 0")
    if not c > x0:
        raise InvalidInputError(f"horizon c={c} must exceed x0={x0}")
    if beta.dim != pot.dim:
        raise InvalidInputError("boundary data and potential dimensions differ")
    _check_domain(z, beta)
    for h in horizons:
        if not x0 < h <= c:
            raise InvalidInputError(f"horizon h={h} is outside ({x0}, {c}]")

    traj = _boundary_trajectory(z, c, x0, pot, beta, ctrl)
    M = from_disk(traj.thetas[-1], float(np.sqrt(abs(z))))
    _check_herglotz(M, z)
    xs = np.asarray(traj.xs)
    along = np.array([contraction_defect(theta) for theta in traj.thetas])
    defects = []
    for h in horizons:
        inside = along[xs <= h]
        at_h = contraction_defect(traj.dense(h))
        defects.append(float(max(at_h, inside.max(initial=0.0))))
    return M, defects


def _limit_sequence(z, x0, pot, beta, horizons, opts: LimitOptions):
    previous = None
    history, used = [], []
    for c in horizons:
        current = regular_m(z, c, x0, pot, beta, opts.ctrl)
        used.append(c)
        if previous is not None:
            increment = op_norm(current - previous)
            history.append(increment)
            logger.debug("limit_m z=%s c=%g increment=%.3g", z, c, increment)
            if increment < opts.rtol * max(1.0, op_norm(current)):
                return current, increment, used, history
        previous = current
    raise NonConvergenceError(
        f"m-function did not converge up to horizon x0 + {opts.max_horizon:g}", history
    )


def _horizons(x0: float, base: float, opts: LimitOptions) -> list[float]:
    horizons = []
    k = 0
    while True:
        c = base + opts.initial_length * 2**k
        if c - x0 > opts.max_horizon and len(horizons) >= 2:
            break
        horizons.append(c)
        k += 1
        if c - x0 > opts.max_horizon:
            break
    return horizons


def limit_m(
    z: complex,
    x0: float,
    pot: PotentialModel,
    opts: LimitOptions | None = None,
) -> LimitResult:
    """M₊(z, x₀) как предел регулярных M-функций при c_k = x₀ + L₀·2^k → ∞

    В режиме boundary="auto" для потенциала с постоянным правым хвостом
    используется условие затухания на хвосте (точка диска положительного класса),
    иначе условие Дирихле.

    Raises:
        DomainError: Im z ≤ 0
        NonConvergenceError: нет сходимости до наибольшего горизонта
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("limit m-function needs Im z > 0")
    opts = opts or LimitOptions()
    if opts.boundary not in ("auto", "dirichlet", "neumann"):
        raise InvalidInputError(f"unknown boundary {opts.boundary!r}")
    m = pot.dim

    tail = pot.right_tail
    use_tail = opts.boundary == "auto" and tail is not None
    if use_tail and tail.start - x0 >= opts.max_horizon:
        use_tail = False
    if use_tail:
        beta, name = tail_boundary(herglotz_sqrt(tail.value, z)), "tail"
        base = max(x0, tail.start)
    elif opts.boundary == "neumann":
        beta, name, base = neumann(m), "neumann", x0
    else:
        beta, name, base = dirichlet(m), "dirichlet", x0

    M, error, used, history = _limit_sequence(z, x0, pot, beta, _horizons(x0, base, opts), opts)

    limit_circle, alternate = False, None
    if not use_tail and opts.detect_limit_circle:
        other = dirichlet(m) if name == "neumann" else neumann(m)
        try:
            M_other, *_ = _limit_sequence(z, x0, pot, other, _horizons(x0, x0, opts), opts)
        except NonConvergenceError:
            logger.debug("alternate boundary sequence did not converge at z=%s", z)
        else:
            if op_norm(M_other - M) > 10 * opts.rtol * max(1.0, op_norm(M)):
                limit_circle, alternate = True, M_other
                logger.warning("limit-circle suspected at z=%s", z)

    return LimitResult(
        m=M,
        error_estimate=error,
        horizons=used,
        history=history,
        boundary=name,
        limit_circle=limit_circle,
        alternate=alternate,
    )


def mirror_m_minus(
    z: complex,
    x0: float,
    pot: PotentialModel,
    opts: LimitOptions | None = None,
) -> LimitResult:
    """M₋(z, x₀) = −M̃₊(z, x₀) для отраженного потенциала Q̃(y) = Q(2x₀ − y)"""
    result = limit_m(z, x0, reflect(pot, x0), opts)
    alternate = None if result.alternate is None else -result.alternate
    return dataclasses.replace(result, m=-result.m, alternate=alternate)
