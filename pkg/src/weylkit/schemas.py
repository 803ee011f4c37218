from math import pi
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    model_validator,
)

# Элемент матрицы: вещественное число или пара [re, im]
ComplexValue = Union[float, Annotated[list[float], Field(min_length=2, max_length=2)]]
MatrixValue = Union[float, list[list[ComplexValue]]]
Argument = Annotated[float, Field(gt=0, lt=pi)]


def to_matrix(value: MatrixValue) -> np.ndarray:
    """Преобразование значения из конфигурации в комплексную матрицу"""
    if isinstance(value, (int, float)):
        return np.array([[complex(value)]])
    rows = []
    for row in value:
        rows.append([complex(*v) if isinstance(v, list) else complex(v) for v in row])
    return np.array(rows, dtype=complex)


class ConstantSpec(BaseModel):
    """Постоянный потенциал

    Поля:

      - value (матрица): Q₀
    """

    kind: Literal["constant"]
    value: MatrixValue


class TruncatedSpec(BaseModel):
    """Сужение потенциала base на [x0, x1]"""

    kind: Literal["truncated"]
    x0: float
    x1: float
    base: "PotentialSpec"

    @model_validator(mode="after")
    def check_interval(self):
        if not self.x0 < self.x1:
            raise ValueError("x0 must be less than x1")
        return self


class GaussianSpec(BaseModel):
    """Гауссов потенциал A·exp(−((x − center)/width)²)

    Поля:

      - amplitude (матрица): эрмитова амплитуда A
      - center (float): центр
      - width (float): ширина
      - order (int): старший порядок производной
    """

    kind: Literal["gaussian"]
    amplitude: MatrixValue
    center: float = 0.0
    width: PositiveFloat = 1.0
    order: NonNegativeInt = 8


class PiecewiseConstantSpec(BaseModel):
    kind: Literal["piecewise_constant"]
    breaks: list[float] = Field(min_length=2)
    values: list[MatrixValue] = Field(min_length=1)

    @model_validator(mode="after")
    def check_pieces(self):
        if len(self.values) != len(self.breaks) - 1:
            raise ValueError("len(values) must equal len(breaks) - 1")
        if any(a >= b for a, b in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breaks must be strictly increasing")
        return self


class PolynomialSpec(BaseModel):
    """Многочлен Σ C_j x^j, коэффициенты по возрастанию степеней"""

    kind: Literal["polynomial"]
    coefficients: list[MatrixValue] = Field(min_length=1)


class MatrixExprSpec(BaseModel):
    """Матрица строковых выражений по переменной x"""

    kind: Literal["matrix_expr"]
    entries: list[list[str]] = Field(min_length=1)
    order: NonNegativeInt = 6


PotentialSpec = Annotated[
    Union[
        ConstantSpec,
        TruncatedSpec,
        GaussianSpec,
        PiecewiseConstantSpec,
        PolynomialSpec,
        MatrixExprSpec,
    ],
    Field(discriminator="kind"),
]
TruncatedSpec.model_rebuild()


class ZGrid(BaseModel):
    """Сетка спектрального параметра z = r·e^{iδ}

    Поля:

      - moduli (список float): |z| > 0
      - arg (список float): δ ∈ (0, π)
    """

    moduli: list[PositiveFloat] = Field(min_length=1)
    arg: list[Argument] = Field(min_length=1)


class Tolerances(BaseModel):
    rtol: PositiveFloat = 1e-10
    atol: PositiveFloat = 1e-12
    max_steps: PositiveInt = 200_000


class LimitSection(BaseModel):
    initial_length: PositiveFloat = 1.0
    max_horizon: PositiveFloat = 64.0
    rtol: PositiveFloat = 1e-9


class VolterraSection(BaseModel):
    tol: PositiveFloat = 1e-12
    max_iterations: PositiveInt = 200


class OutputSpec(BaseModel):
    path: str | None = None
    format: Literal["csv", "json"] = "csv"


Experiment = Literal["mfun", "asymp", "disk", "volterra", "green", "locality", "verify", "compare"]
Method = Literal["limit", "riccati", "volterra"]


class ExperimentConfig(BaseModel):
    """Проверенная конфигурация эксперимента

    Поля:

      - experiment (str): вид эксперимента
      - potential: описание потенциала
      - potential2: второй потенциал (только locality)
      - z_grid (ZGrid): сетка z
      - x0 (float): левый конец полупрямой
      - x (список float): точки вычисления (по умолчанию [x0])
      - x1 (float): правый конец отрезка совпадения (locality)
      - order (int): порядок разложения N
      - horizons (список float): длины c − x0 (disk)
      - samples (int): число граничных условий на точку (disk)
      - methods (список str): методы для compare
      - threshold (float): порог compare
      - translate (float): расстояние сдвига для метода riccati
      - floor (float): уровень точности для verify
      - bound_ratio (float): допустимый рост нормированной разности (locality)
      - eps (float): сектор ε ≤ arg z ≤ π − ε для z_grid.arg
      - seed (int): зерно генератора
      - jobs (int): число процессов
    """

    model_config = ConfigDict(extra="forbid")

    experiment: Experiment = "mfun"
    potential: PotentialSpec
    potential2: PotentialSpec | None = None
    z_grid: ZGrid
    x0: float = 0.0
    x: list[float] | None = None
    x1: float | None = None
    order: NonNegativeInt = 2
    horizons: list[PositiveFloat] = Field(default_factory=lambda: [1.0, 2.0, 4.0])
    samples: PositiveInt = 8
    methods: list[Method] = Field(default_factory=lambda: ["limit", "volterra"], min_length=2)
    threshold: PositiveFloat = 1e-6
    translate: PositiveFloat = 4.0
    floor: float = Field(default=0.0, ge=0)
    bound_ratio: float = Field(default=10.0, ge=1)
    eps: float = Field(default=0.1, ge=0, lt=pi / 2)
    seed: int = 0
    jobs: PositiveInt = 1
    tolerances: Tolerances = Field(default_factory=Tolerances)
    limit: LimitSection = Field(default_factory=LimitSection)
    volterra: VolterraSection = Field(default_factory=VolterraSection)
    output: OutputSpec = Field(default_factory=OutputSpec)

    @model_validator(mode="after")
    def check_locality(self):
        if self.experiment == "locality":
            if self.potential2 is None:
                raise ValueError("locality needs potential2")
            if self.x1 is None or self.x1 <= self.x0:
                raise ValueError("locality needs x1 > x0")
        return self

    @model_validator(mode="after")
    def check_sector(self):
        for i, delta in enumerate(self.z_grid.arg):
            if not self.eps <= delta <= pi - self.eps:
                sector = f"[{self.eps:g}, pi - {self.eps:g}]"
                raise ValueError(f"z_grid.arg[{i}]={delta:g} is outside the sector {sector}")
        return self

    @property
    def points(self) -> list[float]:
        return self.x if self.x else [self.x0]


class ResultRow(BaseModel):
    """Строка результата

    Поля:

      - experiment (str): вид эксперимента
      - z_re, z_im (float): спектральный параметр
      - x0 (float): левый конец
      - x (float): точка вычисления
      - method (str): метод или вид величины
      - m (int): размерность
      - value (список float): матрица по строкам, re и im попеременно
      - diagnostics (dict): диагностика
    """

    experiment: str
    z_re: float
    z_im: float
    x0: float
    x: float
    method: str
    m: int
    value: list[float]
    diagnostics: dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_matrix(
        cls,
        experiment: str,
        z: complex,
        x0: float,
        x: float,
        method: str,
        matrix: np.ndarray,
        diagnostics: dict | None = None,
    ):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        flat = matrix.ravel()
        value = np.column_stack([flat.real, flat.imag]).ravel()
        return cls(
            experiment=experiment,
            z_re=float(np.real(z)),
            z_im=float(np.imag(z)),
            x0=float(x0),
            x=float(x),
            method=method,
            m=matrix.shape[0],
            value=[float(v) for v in value],
            diagnostics=diagnostics or {},
        )

    def matrix(self) -> np.ndarray:
        pairs = np.asarray(self.value).reshape(-1, 2)
        return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(self.m, self.m)


def format_location(loc: tuple) -> str:
    """('z_grid', 'arg', 0) -> 'z_grid.arg[0]'"""
    result = ""
    for part in loc:
        if isinstance(part, int):
            result += f"[{part}]"
        else:
            result += f".{part}" if result else str(part)
    return result


def format_validation_error(exc: ValidationError) -> list[str]:
    """Сообщения об ошибках проверки с путями полей"""
    lines = []
    for error in exc.errors():
        lines.append(f"{format_location(error['loc']) or 'config'}: {error['msg']}")
    return lines
