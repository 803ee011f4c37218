"""Преобразование Кэли M ↔ ϑ, поток в координатах диска, масштабированный и предельный потоки."""

import logging

import numpy as np

from weylkit.domains import PotentialModel, SectorPoint, StepControl, ThetaTrajectory
from weylkit.errors import DomainError, InvalidInputError, RiccatiPoleError, SingularityError
from weylkit.matkit import contraction_defect, rsolve_checked
from weylkit.propagate import Trajectory, integrate

logger = logging.getLogger(__name__)

DEFAULT_EPS = 0.1
ANGLE_SLACK = 1e-12
CONTRACTION_TOL = 1e-8
BLOWUP_LIMIT = 1e6


def sector_point(z: complex, eps: float = DEFAULT_EPS) -> SectorPoint:
    """Точка верхней полуплоскости с проверкой сектора ε ≤ arg z ≤ π − ε

    Args:
        eps (float): ширина исключаемых углов у вещественной оси, 0 снимает ограничение

    Raises:
        DomainError: Im z ≤ 0 или arg z вне сектора
        InvalidInputError: ε вне [0, π/2)
    """
    if not 0 <= eps < np.pi / 2:
        raise InvalidInputError(f"sector eps must lie in [0, pi/2), got {eps}")
    z = complex(z)
    if z.imag <= 0:
        raise DomainError(f"sector point needs Im z > 0, got z={z}")
    delta = float(np.angle(z))
    if not (eps - ANGLE_SLACK <= delta <= np.pi - eps + ANGLE_SLACK):
        raise DomainError(f"arg z={delta:.6g} is outside the sector [{eps}, pi - {eps}]")
    return SectorPoint(z=z, modulus=abs(z), delta=delta, sqrt_z=complex(np.sqrt(z)))


def _as_sector(z) -> SectorPoint:
    # SectorPoint уже проверена при построении со своим ε
    return z if isinstance(z, SectorPoint) else sector_point(z)


def to_disk(M: np.ndarray, s: float) -> np.ndarray:
    """ϑ = (isI − M)(isI + M)⁻¹

    Raises:
        InvalidInputError: isI + M вырождена
    """
    M = np.asarray(M, dtype=complex)
    shift = 1j * s * np.eye(M.shape[0])
    try:
        return rsolve_checked(shift - M, shift + M, "i s I + M")
    except SingularityError as exc:
        raise InvalidInputError(exc.message) from exc


def from_disk(theta: np.ndarray, s: float) -> np.ndarray:
    """M = is(I − ϑ)(I + ϑ)⁻¹

    Raises:
        InvalidInputError: у ϑ собственное значение −1 (M в бесконечности)
    """
    theta = np.asarray(theta, dtype=complex)
    identity = np.eye(theta.shape[0])
    try:
        return 1j * s * rsolve_checked(identity - theta, identity + theta, "I + theta")
    except SingularityError as exc:
        raise InvalidInputError(exc.message) from exc


def _theta_rhs(z: complex, s: float, pot: PotentialModel):
    m = pot.dim
    identity = np.eye(m)

    def rhs(x, y):
        theta = y.reshape(m, m)
        plus = identity + theta
        minus = identity - theta
        shifted = z * identity - pot.eval(x)
        out = plus @ ((-1j / s) * shifted) @ plus + (1j * s) * (minus @ minus)
        return (0.5 * out).ravel()

    return rhs


def theta_trajectory(
    z: complex,
    theta_start: np.ndarray,
    pot: PotentialModel,
    x_from: float,
    x_to: float,
    ctrl: StepControl | None = None,
) -> ThetaTrajectory:
    """Поток в координатах диска в любом направлении без проверки начального значения

    Raises:
        RiccatiPoleError: ‖ϑ‖ превысила 1e6
    """
    z = complex(z)
    s = float(np.sqrt(abs(z)))
    m = pot.dim
    defects = [contraction_defect(theta_start)]

    def monitor(x, y):
        theta = y.reshape(m, m)
        if not np.all(np.isfinite(theta)) or np.linalg.norm(theta) > BLOWUP_LIMIT:
            raise RiccatiPoleError(x)
        defects.append(contraction_defect(theta))

    traj = integrate(
        _theta_rhs(z, s, pot),
        np.asarray(theta_start, dtype=complex).ravel(),
        x_from,
        x_to,
        ctrl,
        pot.breakpoints,
        monitor,
    )
    return ThetaTrajectory(
        xs=traj.xs,
        thetas=traj.ys.reshape(-1, m, m),
        max_contraction_defect=max(defects),
        dense=lambda x: traj(x).reshape(m, m),
    )


def theta_flow(
    z,
    theta0: np.ndarray,
    pot: PotentialModel,
    x0: float,
    c: float,
    ctrl: StepControl | None = None,
) -> ThetaTrajectory:
    """Поток ϑ′ = ½[(I+ϑ)(−i/s)(zI−Q)(I+ϑ) + is(I−ϑ)²] от x₀ до c

    Args:
        z (SectorPoint | complex): спектральный параметр, complex проверяется с ε = DEFAULT_EPS
        theta0 (np.ndarray): сжатие в точке x₀

    Raises:
        InvalidInputError: theta0 не является сжатием
        DomainError: z вне сектора
        StiffnessError: шаг интегратора стал слишком мал
    """
    point = _as_sector(z)
    defect = contraction_defect(theta0)
    if defect > CONTRACTION_TOL:
        raise InvalidInputError(f"initial value is not a contraction (defect {defect:.3g})")
    return theta_trajectory(point.z, theta0, pot, x0, c, ctrl)


def explicit_phi(z, t: float, M0: np.ndarray) -> np.ndarray:
    """Явное решение масштабированного потока при Q ≡ 0 с φ(0) = (isI − M₀)(isI + M₀)⁻¹

    Raises:
        InvalidInputError: знаменатель вырожден
        DomainError: z вне сектора
    """
    point = _as_sector(z)
    M0 = np.asarray(M0, dtype=complex)
    identity = np.eye(M0.shape[0])
    s = point.s
    r = 1j * point.sqrt_z
    exponent = -2j * t * np.exp(1j * point.delta / 2)
    plus, minus = M0 + r * identity, M0 - r * identity
    if exponent.real > 0:
        # растущий множитель переносится на затухающие слагаемые
        decay = np.exp(-exponent)
        numerator = -(1j * s - r) * decay * plus + (1j * s + r) * minus
        denominator = -(1j * s + r) * decay * plus + (1j * s - r) * minus
    else:
        growth = np.exp(exponent)
        numerator = -(1j * s - r) * plus + growth * (1j * s + r) * minus
        denominator = -(1j * s + r) * plus + growth * (1j * s - r) * minus
    try:
        return rsolve_checked(numerator, denominator, "explicit solution denominator")
    except SingularityError as exc:
        raise InvalidInputError(exc.message) from exc


def limit_constant(delta: float) -> complex:
    """C(δ) = (1 − e^{iδ/2})/(1 + e^{iδ/2}) = −i·tan(δ/4)

    Raises:
        InvalidInputError: δ вне (0, π]
    """
    if not 0 < delta <= np.pi:
        raise InvalidInputError(f"delta must lie in (0, pi], got {delta}")
    half = np.exp(0.5j * delta)
    return complex((1 - half) / (1 + half))


def _rescaled_rhs(point: SectorPoint, pot: PotentialModel, x0: float):
    m = pot.dim
    identity = np.eye(m)
    s = point.s

    def rhs(t, y):
        phi = y.reshape(m, m)
        plus = identity + phi
        minus = identity - phi
        shifted = point.z * identity - pot.eval(x0 + t / s)
        out = plus @ ((-1j / point.modulus) * shifted) @ plus + 1j * (minus @ minus)
        return (0.5 * out).ravel()

    return rhs


def rescaled_rhs(z, phi: np.ndarray, pot: PotentialModel, x0: float, t: float) -> np.ndarray:
    """Правая часть масштабированного потока в точке t"""
    point = _as_sector(z)
    phi = np.asarray(phi, dtype=complex)
    m = phi.shape[0]
    return _rescaled_rhs(point, pot, x0)(t, phi.ravel()).reshape(m, m)


def rescaled_flow(
    z,
    phi0: np.ndarray,
    pot: PotentialModel,
    x0: float,
    T: float,
    ctrl: StepControl | None = None,
) -> Trajectory:
    """Поток по t = (x − x₀)|z|^{1/2} с Q̂(t) = Q(x₀ + t|z|^{-1/2}) на [0, T]"""
    point = _as_sector(z)
    s = point.s
    breaks = [(b - x0) * s for b in pot.breakpoints]
    return integrate(
        _rescaled_rhs(point, pot, x0),
        np.asarray(phi0, dtype=complex).ravel(),
        0.0,
        T,
        ctrl,
        breaks,
    )


def limiting_flow(
    delta: float, eta0: np.ndarray, T: float, ctrl: StepControl | None = None
) -> Trajectory:
    """Отладочный интегратор предельной системы η′ = ½[(I+η)(−ie^{iδ})(I+η) + i(I−η)²]"""
    if not 0 < delta < np.pi:
        raise InvalidInputError(f"delta must lie in (0, pi), got {delta}")
    eta0 = np.asarray(eta0, dtype=complex)
    m = eta0.shape[0]
    identity = np.eye(m)
    rotation = -1j * np.exp(1j * delta)

    def rhs(t, y):
        eta = y.reshape(m, m)
        plus = identity + eta
        minus = identity - eta
        return (0.5 * (rotation * (plus @ plus) + 1j * (minus @ minus))).ravel()

    return integrate(rhs, eta0.ravel(), 0.0, T, ctrl)
