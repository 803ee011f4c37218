"""Модели потенциалов Q(x) с аналитическими производными."""

import logging
import math
from typing import Callable, Sequence

import numpy as np
import sympy as sym
from numpy.polynomial import hermite

from weylkit.domains import SMOOTH, PotentialModel, Tail
from weylkit.errors import InvalidInputError
from weylkit.matkit import as_cmatrix, check_hermitian, op_norm

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
FD_STEP = 1e-5
FD_TOL = 1e-6


def make_constant(q0, label: str = "constant") -> PotentialModel:
    """Постоянный потенциал Q(x) = Q₀

    Raises:
        InvalidInputError: Q₀ не эрмитова
    """
    q0 = as_cmatrix(q0)
    check_hermitian(q0, HERMITIAN_TOL, "constant potential")
    dim = q0.shape[0]
    zero = np.zeros_like(q0)

    def derivative(x: float, k: int) -> np.ndarray:
        return q0 if k == 0 else zero

    return PotentialModel(
        dim=dim,
        smoothness_order=SMOOTH,
        derivative=derivative,
        right_tail=Tail(-math.inf, q0),
        left_tail=Tail(math.inf, q0),
        label=label,
    )


def make_truncated(base: PotentialModel, x0: float, x1: float) -> PotentialModel:
    """Сужение потенциала на замкнутый отрезок [x0, x1], ноль вне него

    Raises:
        InvalidInputError: x0 ≥ x1
    """
    if not x0 < x1:
        raise InvalidInputError(f"truncation needs x0 < x1, got [{x0}, {x1}]")
    zero = np.zeros((base.dim, base.dim), dtype=complex)
    inside = [p for p in base.breakpoints if x0 < p < x1]

    return PotentialModel(
        dim=base.dim,
        smoothness_order=base.smoothness_order,
        derivative=base.eval,
        support_hint=(x0, x1),
        breakpoints=tuple(sorted({x0, x1, *inside})),
        cut_points=tuple(sorted({x1, *(p for p in base.cut_points if x0 <= p < x1)})),
        left_cut_points=tuple(
            sorted({x0, *(p for p in base.left_cut_points if x0 < p <= x1)})
        ),
        right_tail=Tail(x1, zero),
        left_tail=Tail(x0, zero),
        label=f"{base.label}|[{x0:g},{x1:g}]",
    )


def _sample_points(support_hint: tuple[float, float] | None) -> np.ndarray:
    if support_hint is None:
        return np.array([-0.9, -0.37, 0.11, 0.58, 1.0])
    a, b = support_hint
    return np.linspace(a, b, 7)[1:-1]


def make_smooth(
    dim: int,
    derivative: Callable[[float, int], np.ndarray],
    order: int,
    support_hint: tuple[float, float] | None = None,
    label: str = "smooth",
) -> PotentialModel:
    """Гладкий потенциал с производными, заданными замыканием

    При построении производные сверяются с центральными разностями,
    значения проверяются на эрмитовость.

    Args:
        dim (int): размерность
        derivative (Callable): (x, k) -> Q^{(k)}(x)
        order (int): старший порядок производной
        support_hint (tuple): носитель, если он компактен

    Raises:
        InvalidInputError: производные не согласованы или Q не эрмитова
    """
    if order < 0:
        raise InvalidInputError("smoothness order must be non-negative")
    model = PotentialModel(
        dim=dim,
        smoothness_order=order,
        derivative=derivative,
        support_hint=support_hint,
        breakpoints=tuple(support_hint or ()),
        cut_points=(support_hint[1],) if support_hint else (),
        left_cut_points=(support_hint[0],) if support_hint else (),
        right_tail=(
            Tail(support_hint[1], np.zeros((dim, dim), dtype=complex))
            if support_hint
            else None
        ),
        left_tail=(
            Tail(support_hint[0], np.zeros((dim, dim), dtype=complex))
            if support_hint
            else None
        ),
        label=label,
    )

    h = FD_STEP
    for x in _sample_points(support_hint):
        value = model.eval(x)
        check_hermitian(value, HERMITIAN_TOL, f"potential at x={x:.6g}")
        for k in range(min(order, 4)):
            expected = model.eval(x, k + 1)
            central = (model.eval(x + h, k) - model.eval(x - h, k)) / (2 * h)
            error = op_norm(central - expected)
            if error > FD_TOL * max(1.0, op_norm(expected)):
                raise InvalidInputError(
                    f"derivative Q^({k + 1}) disagrees with finite differences "
                    f"at x={x:.6g} (error {error:.3g})"
                )
    logger.debug("built potential %s, dim=%d, order=%d", label, dim, order)
    return model


def make_gaussian(
    amplitude, center: float = 0.0, width: float = 1.0, order: int = 8
) -> PotentialModel:
    """Q(x) = A·exp(−((x − center)/width)²)

    Производные через полиномы Эрмита: d^k/du^k e^{−u²} = (−1)^k H_k(u) e^{−u²}.
    """
    amplitude = as_cmatrix(amplitude)
    check_hermitian(amplitude, HERMITIAN_TOL, "gaussian amplitude")
    if width <= 0:
        raise InvalidInputError("gaussian width must be positive")

    def derivative(x: float, k: int) -> np.ndarray:
        u = (x - center) / width
        unit = np.zeros(k + 1)
        unit[k] = 1.0
        factor = (-1) ** k * hermite.hermval(u, unit) * np.exp(-u * u) / width**k
        return factor * amplitude

    return make_smooth(
        amplitude.shape[0],
        derivative,
        order,
        label=f"gaussian(c={center:g},w={width:g})",
    )


def make_polynomial(coefficients: Sequence) -> PotentialModel:
    """Q(x) = Σ C_j x^j с эрмитовыми коэффициентами"""
    if len(coefficients) == 0:
        raise InvalidInputError("polynomial needs at least one coefficient")
    coeffs = [as_cmatrix(c) for c in coefficients]
    dim = coeffs[0].shape[0]
    for j, c in enumerate(coeffs):
        as_cmatrix(c, dim)
        check_hermitian(c, HERMITIAN_TOL, f"polynomial coefficient {j}")

    def derivative(x: float, k: int) -> np.ndarray:
        result = np.zeros((dim, dim), dtype=complex)
        for j in range(k, len(coeffs)):
            result += math.perm(j, k) * x ** (j - k) * coeffs[j]
        return result

    return make_smooth(dim, derivative, SMOOTH, label=f"polynomial(deg={len(coeffs) - 1})")


def make_piecewise_constant(breaks: Sequence[float], values: Sequence) -> PotentialModel:
    """Кусочно-постоянный потенциал

    Кусок i занимает [breaks[i], breaks[i+1]), последний кусок замкнут справа.
    """
    breaks = [float(b) for b in breaks]
    if len(breaks) < 2 or len(values) != len(breaks) - 1:
        raise InvalidInputError("piecewise potential needs len(values) == len(breaks) - 1")
    if any(b1 >= b2 for b1, b2 in zip(breaks, breaks[1:])):
        raise InvalidInputError("breaks must be strictly increasing")
    pieces = [as_cmatrix(v) for v in values]
    dim = pieces[0].shape[0]
    for i, piece in enumerate(pieces):
        as_cmatrix(piece, dim)
        check_hermitian(piece, HERMITIAN_TOL, f"piece {i}")
    zero = np.zeros((dim, dim), dtype=complex)
    edges = np.asarray(breaks)

    def derivative(x: float, k: int) -> np.ndarray:
        if k > 0:
            return zero
        index = int(np.searchsorted(edges, x, side="right")) - 1
        return pieces[min(max(index, 0), len(pieces) - 1)]

    return PotentialModel(
        dim=dim,
        smoothness_order=SMOOTH,
        derivative=derivative,
        support_hint=(breaks[0], breaks[-1]),
        breakpoints=tuple(breaks),
        cut_points=(breaks[-1],),
        left_cut_points=tuple(breaks[:-1]),
        right_tail=Tail(breaks[-1], zero),
        left_tail=Tail(breaks[0], zero),
        label=f"piecewise({len(pieces)} pieces)",
    )


def make_matrix_expr(
    entries: Sequence[Sequence[str]], order: int = 6, variable: str = "x"
) -> PotentialModel:
    """Потенциал из строковых выражений sympy по переменной x

    Raises:
        InvalidInputError: выражение не разбирается или содержит посторонние символы
    """
    dim = len(entries)
    if dim == 0 or any(len(row) != dim for row in entries):
        raise InvalidInputError("matrix_expr entries must form a square matrix")
    x = sym.Symbol(variable, real=True)
    try:
        matrix = sym.Matrix(
            [[sym.sympify(e, locals={variable: x}) for e in row] for row in entries]
        )
    except (sym.SympifyError, TypeError, SyntaxError) as exc:
        raise InvalidInputError(f"cannot parse matrix_expr entry: {exc}") from exc
    extra = matrix.free_symbols - {x}
    if extra:
        names = ", ".join(sorted(str(s) for s in extra))
        raise InvalidInputError(f"matrix_expr uses unknown symbols: {names}")

    functions = [sym.lambdify(x, matrix.diff(x, k), "numpy") for k in range(order + 1)]

    def derivative(value: float, k: int) -> np.ndarray:
        return np.asarray(functions[k](value), dtype=complex)

    return make_smooth(dim, derivative, order, label="matrix_expr")


def reflect(pot: PotentialModel, x0: float) -> PotentialModel:
    """Отражение Q̃(y) = Q(2x₀ − y); Q̃^{(k)}(y) = (−1)^k Q^{(k)}(2x₀ − y)"""

    def derivative(y: float, k: int) -> np.ndarray:
        return (-1) ** k * pot.eval(2 * x0 - y, k)

    def mirrored(points: tuple[float, ...]) -> tuple[float, ...]:
        return tuple(sorted(2 * x0 - p for p in points))

    support = None
    if pot.support_hint is not None:
        a, b = pot.support_hint
        support = (2 * x0 - b, 2 * x0 - a)
    right_tail = None
    if pot.left_tail is not None:
        right_tail = Tail(2 * x0 - pot.left_tail.start, pot.left_tail.value)
    left_tail = None
    if pot.right_tail is not None:
        left_tail = Tail(2 * x0 - pot.right_tail.start, pot.right_tail.value)

    return PotentialModel(
        dim=pot.dim,
        smoothness_order=pot.smoothness_order,
        derivative=derivative,
        support_hint=support,
        breakpoints=mirrored(pot.breakpoints),
        cut_points=mirrored(pot.left_cut_points),
        left_cut_points=mirrored(pot.cut_points),
        right_tail=right_tail,
        left_tail=left_tail,
        label=f"reflect({pot.label}, {x0:g})",
    )


def sup_norm(pot: PotentialModel, a: float, b: float, samples: int = 64) -> float:
    """Оценка max ‖Q(x)‖ на [a, b] по выборке"""
    return max(op_norm(pot.eval(x)) for x in np.linspace(a, b, samples))


def agree_on(
    pot1: PotentialModel,
    pot2: PotentialModel,
    a: float,
    b: float,
    samples: int = 64,
    tol: float = 1e-12,
) -> bool:
    """Совпадение потенциалов во внутренних точках (a, b)"""
    if pot1.dim != pot2.dim:
        return False
    for x in np.linspace(a, b, samples + 2)[1:-1]:
        q1, q2 = pot1.eval(x), pot2.eval(x)
        if op_norm(q1 - q2) > tol * (1.0 + op_norm(q1)):
            return False
    return True
