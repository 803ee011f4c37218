"""Интегрирование системы первого порядка для Ψ, уравнения Риккати и тождество Лагранжа."""

import bisect
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import RK45, simpson

from weylkit.domains import (
    FundamentalSystem,
    FundamentalTrajectory,
    PotentialModel,
    RiccatiState,
    StepControl,
)
from weylkit.errors import (
    DomainError,
    HerglotzViolationError,
    InvalidInputError,
    OverflowRiskError,
    RiccatiPoleError,
    StiffnessError,
)
from weylkit.matkit import im_part, op_norm, psd_defect, sqrt_upper
from weylkit.potential import sup_norm

logger = logging.getLogger(__name__)

GROWTH_PER_SEGMENT = 20.0
OVERFLOW_LIMIT = 1e300
POLE_LIMIT = 1e12
HERGLOTZ_TOL = 1e-8


@dataclass(eq=False)
class Trajectory:
    """Результат интегрирования с плотным выходом

    Поля:

      - xs (np.ndarray): начальная и принятые точки в порядке интегрирования
      - ys (np.ndarray): решения в этих точках
      - pieces (list): (t_old, t, интерполянт) для каждого принятого шага
      - steps (int): число принятых шагов
    """

    xs: np.ndarray
    ys: np.ndarray
    pieces: list = field(default_factory=list, repr=False)
    steps: int = 0

    def __post_init__(self):
        ordered = sorted(self.pieces, key=lambda p: min(p[0], p[1]))
        self._lows = [min(p[0], p[1]) for p in ordered]
        self._ordered = ordered

    @property
    def final(self) -> np.ndarray:
        return self.ys[-1]

    def __call__(self, x: float) -> np.ndarray:
        if not self._ordered:
            return self.ys[0]
        index = max(bisect.bisect_right(self._lows, x) - 1, 0)
        t_old, t, interpolant = self._ordered[index]
        return interpolant(x)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    x_from: float,
    x_to: float,
    ctrl: StepControl | None = None,
    breakpoints: Sequence[float] = (),
    monitor: Callable[[float, np.ndarray], None] | None = None,
) -> Trajectory:
    """Адаптивное интегрирование пары Рунге–Кутты 5(4) с разбиением по точкам разрыва

    Внутри каждого отрезка правая часть вычисляется в точках, прижатых внутрь
    отрезка, поэтому на концах используются односторонние пределы потенциала.

    Args:
        rhs (Callable): правая часть (x, y) -> y′
        y0 (np.ndarray): начальное значение
        x_from (float): начальная точка
        x_to (float): конечная точка (может быть меньше x_from)
        ctrl (StepControl): параметры шага
        breakpoints (Sequence[float]): точки разрыва правой части
        monitor (Callable): вызывается после каждого принятого шага

    Raises:
        StiffnessError: шаг стал слишком мал или исчерпан бюджет шагов
    """
    ctrl = ctrl or StepControl()
    y = np.asarray(y0, dtype=complex).ravel().copy()
    xs, ys, pieces = [x_from], [y.copy()], []
    steps = 0
    if x_to == x_from:
        return Trajectory(np.asarray(xs), np.asarray(ys), pieces, 0)

    lo_all, hi_all = min(x_from, x_to), max(x_from, x_to)
    inner = sorted(b for b in breakpoints if lo_all < b < hi_all)
    if x_to < x_from:
        inner.reverse()
    nodes = [x_from, *inner, x_to]

    for a, b in zip(nodes[:-1], nodes[1:]):
        length = abs(b - a)
        if length <= 1e-14 * max(1.0, abs(a)):
            continue
        lo, hi = min(a, b), max(a, b)
        eta = 1e-12 * length

        def segment_rhs(x, state, lo=lo, hi=hi, eta=eta):
            return rhs(min(max(x, lo + eta), hi - eta), state)

        first_step = None
        if ctrl.first_step is not None:
            first_step = min(ctrl.first_step, length)
        solver = RK45(
            segment_rhs,
            a,
            y,
            b,
            rtol=ctrl.rtol,
            atol=ctrl.atol,
            max_step=ctrl.max_step,
            first_step=first_step,
        )
        while solver.status == "running":
            if steps >= ctrl.max_steps:
                raise StiffnessError("step budget exhausted", at=solver.t)
            message = solver.step()
            if solver.status == "failed":
                raise StiffnessError(message or "step size underflow", at=solver.t)
            steps += 1
            xs.append(solver.t)
            ys.append(solver.y.copy())
            pieces.append((solver.t_old, solver.t, solver.dense_output()))
            if monitor is not None:
                monitor(solver.t, solver.y)
        y = solver.y.copy()

    return Trajectory(np.asarray(xs), np.asarray(ys), pieces, steps)


def _psi_rhs(z: complex, pot: PotentialModel):
    m = pot.dim
    shift = z * np.eye(m)

    def rhs(x, y):
        psi = y.reshape(2 * m, 2 * m)
        out = np.empty_like(psi)
        out[:m] = psi[m:]
        out[m:] = (pot.eval(x) - shift) @ psi[:m]
        return out.ravel()

    return rhs


def _segments(z: complex, pot: PotentialModel, x0: float, c: float) -> list[float]:
    # Ψ растет не быстрее exp(sqrt(|z| + ‖Q‖)·длина)
    rate = np.sqrt(abs(z) + sup_norm(pot, x0, c, 16)) + 1e-3
    count = max(1, int(np.ceil((c - x0) * rate / GROWTH_PER_SEGMENT)))
    return list(np.linspace(x0, c, count + 1))


def _check_horizon(pot: PotentialModel, x0: float, c: float):
    if c < x0:
        raise InvalidInputError(f"horizon c={c} precedes x0={x0}")


def propagate_fundamental(
    z: complex,
    pot: PotentialModel,
    x0: float,
    c: float,
    ctrl: StepControl | None = None,
) -> FundamentalSystem:
    """Ψ(z, c, x₀) с Ψ(z, x₀, x₀) = I

    Интервал делится на отрезки с ограниченным ростом, пропагаторы отрезков
    перемножаются; если норма произведения может превысить 1e300, вычисление
    прекращается.

    Raises:
        OverflowRiskError: ожидается переполнение (используйте путь Риккати/Кэли)
        StiffnessError: шаг интегратора стал слишком мал
    """
    z = complex(z)
    _check_horizon(pot, x0, c)
    m = pot.dim
    psi = np.eye(2 * m, dtype=complex)
    if c == x0:
        return FundamentalSystem.from_psi(z, x0, c, psi)

    rhs = _psi_rhs(z, pot)
    nodes = _segments(z, pot, x0, c)
    log_limit = np.log(OVERFLOW_LIMIT)
    for a, b in zip(nodes[:-1], nodes[1:]):
        traj = integrate(rhs, np.eye(2 * m).ravel(), a, b, ctrl, pot.breakpoints)
        segment = traj.final.reshape(2 * m, 2 * m)
        if np.log(op_norm(segment)) + np.log(op_norm(psi)) > log_limit:
            raise OverflowRiskError()
        psi = segment @ psi
    if not np.all(np.isfinite(psi)):
        raise OverflowRiskError()
    return FundamentalSystem.from_psi(z, x0, c, psi)


def fundamental_trajectory(
    z: complex,
    pot: PotentialModel,
    x0: float,
    c: float,
    ctrl: StepControl | None = None,
) -> FundamentalTrajectory:
    """Выборка Ψ на [x₀, c]: принятые точки и середины шагов одного прогона"""
    z = complex(z)
    _check_horizon(pot, x0, c)
    m = pot.dim
    psi = np.eye(2 * m, dtype=complex)
    xs, psis = [x0], [psi.copy()]
    rhs = _psi_rhs(z, pot)
    nodes = _segments(z, pot, x0, c)
    for a, b in zip(nodes[:-1], nodes[1:]):
        traj = integrate(rhs, np.eye(2 * m).ravel(), a, b, ctrl, pot.breakpoints)
        for t_old, t, interpolant in traj.pieces:
            middle = (t_old + t) / 2
            xs.append(middle)
            psis.append(interpolant(middle).reshape(2 * m, 2 * m) @ psi)
            xs.append(t)
            psis.append(interpolant(t).reshape(2 * m, 2 * m) @ psi)
        psi = traj.final.reshape(2 * m, 2 * m) @ psi
        psis[-1] = psi.copy()
    return FundamentalTrajectory(z=z, x0=x0, xs=np.asarray(xs), psis=np.asarray(psis))


def lagrange_residual(samples: FundamentalTrajectory, z: complex | None = None) -> float:
    """‖Ψ(c)*JΨ(c) − Ψ(x₀)*JΨ(x₀) − 2i Im z ∫Ψ*AΨ‖, интеграл по Симпсону

    Raises:
        InvalidInputError: сетка не согласована с выборкой или z другой
    """
    xs, psis = np.asarray(samples.xs), np.asarray(samples.psis)
    if z is not None and complex(z) != samples.z:
        raise InvalidInputError("samples were computed for a different z")
    if psis.ndim != 3 or len(xs) != len(psis) or len(xs) < 3:
        raise InvalidInputError("sample grid does not match the propagator samples")
    if np.any(np.diff(xs) <= 0):
        raise InvalidInputError("sample grid must be strictly increasing")
    z = samples.z
    m = psis.shape[1] // 2
    J = np.block(
        [
            [np.zeros((m, m)), -np.eye(m)],
            [np.eye(m), np.zeros((m, m))],
        ]
    )
    start, end = psis[0], psis[-1]
    left = end.conj().T @ J @ end - start.conj().T @ J @ start
    top = psis[:, :m, :]
    integrand = np.conj(np.transpose(top, (0, 2, 1))) @ top
    integral = simpson(integrand, x=xs, axis=0)
    return op_norm(left - 2j * z.imag * integral)


def _riccati_rhs(z: complex, pot: PotentialModel):
    m = pot.dim
    shift = z * np.eye(m)

    def rhs(x, y):
        M = y.reshape(m, m)
        return (pot.eval(x) - shift - M @ M).ravel()

    return rhs


def riccati_trajectory(
    z: complex,
    M_init: np.ndarray,
    pot: PotentialModel,
    x_from: float,
    x_to: float,
    ctrl: StepControl | None = None,
):
    """Плотная траектория M′ = Q − zI − M² от x_from до x_to

    Raises:
        DomainError: Im z = 0
        RiccatiPoleError: ‖M‖ превысила 1e12
    """
    z = complex(z)
    if z.imag == 0:
        raise DomainError("riccati flow needs Im z != 0")
    M_init = np.asarray(M_init, dtype=complex)
    if not np.all(np.isfinite(M_init)):
        raise InvalidInputError("initial value is not finite")

    def monitor(x, y):
        if not np.all(np.isfinite(y)) or np.linalg.norm(y) > POLE_LIMIT:
            raise RiccatiPoleError(x)

    return integrate(
        _riccati_rhs(z, pot), M_init.ravel(), x_from, x_to, ctrl, pot.breakpoints, monitor
    )


def riccati_flow(
    z: complex,
    M_init: np.ndarray,
    pot: PotentialModel,
    x_from: float,
    x_to: float,
    ctrl: StepControl | None = None,
) -> np.ndarray:
    """M(z, x_to) для решения уравнения Риккати с M(z, x_from) = M_init

    Поток сохраняет знак σ·Im M ≽ 0, где σ = −sign(x_to − x_from)·sign(Im z):
    обратный поток при Im z > 0 держит Im M ≻ 0, прямой держит Im M ≺ 0.
    Если M_init имеет этот знак, он проверяется в принятых точках.

    Raises:
        DomainError: Im z = 0
        RiccatiPoleError: ‖M‖ превысила 1e12
        HerglotzViolationError: сохраняемый знак Im M нарушен
    """
    m = pot.dim
    z = complex(z)
    traj = riccati_trajectory(z, M_init, pot, x_from, x_to, ctrl)
    M_init = np.asarray(M_init, dtype=complex)
    sign = -float(np.sign(x_to - x_from) * np.sign(z.imag))
    if sign != 0 and psd_defect(sign * im_part(M_init)) == 0:
        defect = herglotz_defect(riccati_states(z, traj, m), sign)
        logger.debug("riccati flow %g -> %g sign defect %.3g", x_from, x_to, defect)
        if defect > HERGLOTZ_TOL * max(1.0, op_norm(M_init)):
            raise HerglotzViolationError(defect)
    return traj.final.reshape(m, m)


def riccati_states(z: complex, traj: Trajectory, dim: int) -> list[RiccatiState]:
    """Состояния M(z, x) в принятых точках траектории"""
    return [
        RiccatiState(z=complex(z), x=float(x), M=y.reshape(dim, dim))
        for x, y in zip(traj.xs, traj.ys)
    ]


def herglotz_defect(states: Sequence[RiccatiState], sign: float = 1.0) -> float:
    """Наибольшее нарушение sign·Im M ≽ 0 вдоль траектории, 0 если знак сохранен"""
    return max((psd_defect(sign * im_part(state.M)) for state in states), default=0.0)


def growth_exponent(z: complex, x0: float, c: float) -> float:
    """Im√z·(c − x₀): показатель экспоненциального роста Ψ"""
    return sqrt_upper(z).imag * (c - x0)
