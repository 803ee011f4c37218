from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from weylkit.errors import InvalidInputError

# условная "бесконечная" гладкость для постоянных и полиномиальных потенциалов
SMOOTH = 10**6


class SignClass(Enum):
    """Класс граничных данных по знаку Im(β₂β₁*)

    Значения:

      - **POSITIVE**: Im(β₂β₁*) ≻ 0
      - **NEGATIVE**: Im(β₂β₁*) ≺ 0
      - **SELFADJOINT**: Im(β₂β₁*) = 0
    """

    POSITIVE = "positive"
    NEGATIVE = "negative"
    SELFADJOINT = "selfadjoint"


@dataclass(frozen=True)
class HermitianCertificate:
    """Сертификат эрмитовости

    Поля:

      - min_eigenvalue (float): наименьшее собственное значение (H+H*)/2
      - max_eigenvalue (float): наибольшее собственное значение (H+H*)/2
      - hermiticity_defect (float): операторная норма H − H*
    """

    min_eigenvalue: float
    max_eigenvalue: float
    hermiticity_defect: float


@dataclass(frozen=True)
class StepControl:
    """Параметры адаптивного интегратора

    Поля:

      - rtol (float): относительная точность
      - atol (float): абсолютная точность
      - max_steps (int): предельное число принятых шагов одного интегрирования
      - max_step (float): наибольший допустимый шаг
      - first_step (float): начальный шаг (None - выбирается автоматически)
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 200_000
    max_step: float = np.inf
    first_step: float | None = None


@dataclass(frozen=True, eq=False)
class Tail:
    """Постоянный хвост потенциала

    Поля:

      - start (float): граница полупрямой (для правого хвоста Q = value при x ≥ start,
        для левого при x ≤ start)
      - value (np.ndarray): значение Q на полупрямой
    """

    start: float
    value: np.ndarray


@dataclass(frozen=True, eq=False)
class PotentialModel:
    """Потенциал Q(x) с доступом к производным

    Поля:

      - dim (int): размерность m
      - smoothness_order (int): старший доступный порядок производной
      - derivative (Callable): (x, k) -> k-я производная Q в точке x
      - support_hint (tuple): отрезок [a, b], вне которого Q ≡ 0
      - breakpoints (tuple): точки разрыва (интегрирование разбивается по ним)
      - cut_points (tuple): точки, где значение не совпадает с пределом справа
      - left_cut_points (tuple): точки, где значение не совпадает с пределом слева
      - right_tail (Tail): постоянный правый хвост
      - left_tail (Tail): постоянный левый хвост
      - label (str): описание для журналов
    """

    dim: int
    smoothness_order: int
    derivative: Callable[[float, int], np.ndarray] = field(repr=False)
    support_hint: tuple[float, float] | None = None
    breakpoints: tuple[float, ...] = ()
    cut_points: tuple[float, ...] = ()
    left_cut_points: tuple[float, ...] = ()
    right_tail: Tail | None = None
    left_tail: Tail | None = None
    label: str = ""

    def eval(self, x: float, k: int = 0) -> np.ndarray:
        """k-я производная Q в точке x

        Raises:
            InvalidInputError: если производная порядка k не объявлена
        """
        if k < 0 or k > self.smoothness_order:
            raise InvalidInputError(
                f"derivative Q^({k}) is not available "
                f"(smoothness order {self.smoothness_order})"
            )
        if self.support_hint is not None:
            a, b = self.support_hint
            if x < a or x > b:
                return np.zeros((self.dim, self.dim), dtype=complex)
        value = np.asarray(self.derivative(x, k), dtype=complex)
        return value.reshape(self.dim, self.dim)

    def __call__(self, x: float) -> np.ndarray:
        return self.eval(x, 0)

    def smoothness_at(self, x: float) -> int:
        """Порядок гладкости справа в точке x (0 в точках разреза)"""
        for p in self.cut_points:
            if abs(x - p) <= 1e-12 * (1.0 + abs(p)):
                return 0
        return self.smoothness_order

    @property
    def is_compact(self) -> bool:
        return self.support_hint is not None


@dataclass(frozen=True, eq=False)
class FundamentalSystem:
    """Нормированная фундаментальная система Ψ(z, x, x₀)

    Поля:

      - z (complex): спектральный параметр
      - x0 (float): базовая точка
      - x (float): точка вычисления
      - theta, theta_prime (np.ndarray): θ и θ′
      - phi, phi_prime (np.ndarray): φ и φ′
    """

    z: complex
    x0: float
    x: float
    theta: np.ndarray
    theta_prime: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray

    @classmethod
    def from_psi(cls, z: complex, x0: float, x: float, psi: np.ndarray):
        m = psi.shape[0] // 2
        return cls(
            z=z,
            x0=x0,
            x=x,
            theta=psi[:m, :m].copy(),
            theta_prime=psi[m:, :m].copy(),
            phi=psi[:m, m:].copy(),
            phi_prime=psi[m:, m:].copy(),
        )

    @property
    def psi(self) -> np.ndarray:
        return np.block([[self.theta, self.phi], [self.theta_prime, self.phi_prime]])


@dataclass(frozen=True, eq=False)
class FundamentalTrajectory:
    """Выборка Ψ(z, x, x₀) одного прогона на [x₀, c]

    Поля:

      - z (complex): спектральный параметр
      - x0 (float): базовая точка
      - xs (np.ndarray): возрастающая сетка
      - psis (np.ndarray): значения Ψ формы (n, 2m, 2m)
    """

    z: complex
    x0: float
    xs: np.ndarray
    psis: np.ndarray


@dataclass(frozen=True, eq=False)
class RiccatiState:
    """Точка траектории уравнения Риккати

    Поля:

      - z (complex): спектральный параметр
      - x (float): точка
      - M (np.ndarray): значение M(z, x)
    """

    z: complex
    x: float
    M: np.ndarray


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Граничные данные β = [β₁ β₂]

    Поля:

      - beta1 (np.ndarray): β₁
      - beta2 (np.ndarray): β₂
      - sign_class (SignClass): класс по знаку Im(β₂β₁*)
    """

    beta1: np.ndarray
    beta2: np.ndarray
    sign_class: SignClass

    @property
    def matrix(self) -> np.ndarray:
        return np.hstack([self.beta1, self.beta2])

    @property
    def dim(self) -> int:
        return self.beta1.shape[0]


@dataclass(frozen=True, eq=False)
class DiskSample:
    """Точка диска Риккати

    Поля:

      - z (complex): спектральный параметр
      - c (float): горизонт
      - x0 (float): базовая точка
      - M (np.ndarray): кандидат
      - theta_cayley (np.ndarray): образ Кэли кандидата
      - max_contraction_defect (float): наибольший дефект сжатия на [x₀, c]
    """

    z: complex
    c: float
    x0: float
    M: np.ndarray
    theta_cayley: np.ndarray
    max_contraction_defect: float


@dataclass(frozen=True)
class SectorPoint:
    """Точка сектора верхней полуплоскости

    Поля:

      - z (complex): спектральный параметр
      - modulus (float): |z|
      - delta (float): arg z из (0, π)
      - sqrt_z (complex): корень с Im > 0
    """

    z: complex
    modulus: float
    delta: float
    sqrt_z: complex

    @property
    def s(self) -> float:
        return float(np.sqrt(self.modulus))


@dataclass(frozen=True, eq=False)
class ThetaTrajectory:
    """Траектория потока в координатах диска

    Поля:

      - xs (np.ndarray): принятые точки
      - thetas (np.ndarray): значения ϑ формы (n, m, m)
      - max_contraction_defect (float): наибольший дефект сжатия
      - dense (Callable): плотный выход x -> ϑ(x)
    """

    xs: np.ndarray
    thetas: np.ndarray
    max_contraction_defect: float
    dense: Callable[[float], np.ndarray] | None = field(default=None, repr=False)


@dataclass(frozen=True)
class LimitOptions:
    """Параметры предельного перехода c → ∞

    Поля:

      - initial_length (float): L₀ в расписании c_k = x₀ + L₀·2^k
      - max_horizon (float): наибольшее c − x₀
      - rtol (float): критерий сходимости соседних значений
      - boundary (str): "auto", "dirichlet" или "neumann"
      - detect_limit_circle (bool): сравнивать пределы для Дирихле и Неймана
      - ctrl (StepControl): параметры интегратора
    """

    initial_length: float = 1.0
    max_horizon: float = 64.0
    rtol: float = 1e-9
    boundary: str = "auto"
    detect_limit_circle: bool = True
    ctrl: StepControl = field(default_factory=StepControl)


@dataclass(frozen=True, eq=False)
class LimitResult:
    """Предельное значение M₊(z, x₀) с диагностикой

    Поля:

      - m (np.ndarray): значение
      - error_estimate (float): последнее приращение
      - horizons (list[float]): использованные горизонты
      - history (list[float]): приращения по горизонтам
      - boundary (str): использованные граничные данные
      - limit_circle (bool): подозрение на предельную окружность
      - alternate (np.ndarray): второй предел (при limit_circle)
    """

    m: np.ndarray
    error_estimate: float
    horizons: list[float]
    history: list[float]
    boundary: str
    limit_circle: bool = False
    alternate: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class VolterraSolution:
    """Решение интегрального уравнения Вольтерра

    Поля:

      - z (complex): спектральный параметр
      - grid (np.ndarray): возрастающие точки на [x, R]
      - v (np.ndarray): значения ṽ₊ формы (n, m, m)
      - v_prime (np.ndarray): значения ṽ₊′
      - iterations (int): число итераций Пикара
      - residual (float): последнее приращение итераций
      - bound (float): мажоранта нормы ṽ₊
      - panels (int): число панелей квадратуры
    """

    z: complex
    grid: np.ndarray
    v: np.ndarray
    v_prime: np.ndarray
    iterations: int
    residual: float
    bound: float
    panels: int


@dataclass(frozen=True, eq=False)
class AsymptoticSeries:
    """Коэффициенты разложения M₊ по степеням z^{-1/2}

    Поля:

      - x (float): точка
      - order (int): N
      - dim (int): m
      - coeffs (tuple): m₊,₁(x) … m₊,N(x)
      - polys (tuple): те же коэффициенты как некоммутативные многочлены
    """

    x: float
    order: int
    dim: int
    coeffs: tuple
    polys: tuple


@dataclass(frozen=True, eq=False)
class GreenSeries:
    """Коэффициенты разложения диагональной матрицы Грина

    Поля:

      - x (float): точка
      - order (int): N
      - dim (int): m
      - coeffs (tuple): G₀(x) … G_N(x)
      - polys (tuple): символьные G₀ … G_N
    """

    x: float
    order: int
    dim: int
    coeffs: tuple
    polys: tuple


@dataclass
class OrderRow:
    """Строка отчета о порядке остатка для одного луча arg z = δ"""

    delta: float
    moduli: list[float]
    differences: list[float]
    remainders: list[float]
    passed: bool


@dataclass
class OrderReport:
    order: int
    x0: float
    rows: list[OrderRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


@dataclass
class LocalityReport:
    """Отчет эксперимента об экспоненциальной локальности

    Поля:

      - moduli (list[float]): |z_j|
      - sqrt_imag (list[float]): Im z_j^{1/2}
      - differences (list[float]): ‖ΔM(x₀)‖ через факторизацию
      - direct_differences (list[float]): прямое вычитание
      - normalized (list[float]): ‖ΔM‖·e^{2(x₁−x₀)Im√z}
      - slope (float): наклон log‖ΔM‖ по Im√z
      - target_slope (float): −2(x₁ − x₀)
      - bounded (bool): нормированная последовательность ограничена
      - passed (bool): итог
    """

    moduli: list[float]
    sqrt_imag: list[float]
    differences: list[float]
    direct_differences: list[float]
    normalized: list[float]
    slope: float
    target_slope: float
    bounded: bool
    passed: bool


@dataclass
class ExperimentOutcome:
    """Итог эксперимента

    Поля:

      - experiment (str): вид эксперимента
      - rows (list): строки результата (schemas.ResultRow)
      - passed (bool): итог проверки
      - summary (list[str]): строки сводки для вывода
      - meta (dict): параметры запуска для заголовка файла
    """

    experiment: str
    rows: list = field(default_factory=list)
    passed: bool = True
    summary: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
