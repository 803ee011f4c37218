"""Интегральное уравнение Вольтерра для ṽ₊ = e^{−iz^{1/2}x}ũ₊ при компактном носителе."""

import logging
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from weylkit.domains import PotentialModel, VolterraSolution
from weylkit.errors import (
    DomainError,
    InvalidInputError,
    MethodNotApplicableError,
    NonConvergenceError,
    SingularityError,
    VolterraBoundError,
)
from weylkit.matkit import op_norm, rsolve_checked, sqrt_upper

logger = logging.getLogger(__name__)

GAUSS_ORDER = 8


@lru_cache(maxsize=None)
def panel_rule(n: int = GAUSS_ORDER) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Узлы, веса Гаусса–Лежандра и матрица S частичных интегралов на [−1, 1]

    Строка i матрицы S дает ∫_{t_i}^{1} интерполянта по значениям в узлах,
    последняя строка дает интеграл по всему отрезку.
    """
    nodes, weights = legendre.leggauss(n)
    vander = legendre.legvander(nodes, n - 1)
    points = np.concatenate([nodes, [-1.0]])
    antiderivatives = np.empty((n + 1, n))
    for j in range(n):
        unit = np.zeros(n)
        unit[j] = 1.0
        primitive = legendre.legint(unit)
        antiderivatives[:, j] = legendre.legval(1.0, primitive) - legendre.legval(
            points, primitive
        )
    return nodes, weights, antiderivatives @ np.linalg.inv(vander)


def _panel_edges(pot: PotentialModel, x: float, end: float, k: complex, factor: int):
    cuts = [x, *sorted(p for p in pot.breakpoints if x < p < end), end]
    per_unit = 2.0 * max(abs(k), 1.0) * factor
    edges = [x]
    for a, b in zip(cuts[:-1], cuts[1:]):
        count = max(1, int(np.ceil((b - a) * per_unit)))
        edges.extend(np.linspace(a, b, count + 1)[1:])
    return np.asarray(edges)


def _solve_on_panels(k, pot, edges, tol, max_iterations):
    m = pot.dim
    identity = np.eye(m, dtype=complex)
    nodes, weights, partial = panel_rule()
    n = len(nodes)

    lefts, rights = edges[:-1], edges[1:]
    h = rights - lefts
    count = len(h)
    X = lefts[:, None] + (nodes[None, :] + 1.0) * h[:, None] / 2
    W = weights[None, :] * h[:, None] / 2
    Qn = np.array([[pot.eval(xx) for xx in row] for row in X])

    # |exp(2ik·d)| ≤ 1 при d ≥ 0; to_right не больше e, так как 2|k|h ≤ 1
    to_right = np.exp(2j * k * (X - rights[:, None]))
    from_left = np.exp(2j * k * (X - lefts[:, None]))
    across = np.exp(2j * k * h)
    decay = np.concatenate([np.exp(2j * k * (rights[:, None] - X)), across[:, None]], axis=1)
    half = (h / 2)[:, None, None, None]

    v = np.broadcast_to(identity, (count, n, m, m)).copy()
    history = []
    for iteration in range(1, max_iterations + 1):
        f = Qn @ v
        own0 = np.einsum("ij,pjab->piab", partial, f) * half
        own1 = np.einsum("ij,pjab->piab", partial, to_right[..., None, None] * f) * half

        panel0 = np.einsum("pj,pjab->pab", W, f)
        tail0 = np.zeros_like(panel0)
        tail0[:-1] = np.cumsum(panel0[::-1], axis=0)[::-1][1:]
        panel1 = np.einsum("pj,pjab->pab", W * from_left, f)
        tail1 = np.zeros_like(panel1)
        for p in range(count - 2, -1, -1):
            tail1[p] = panel1[p + 1] + across[p + 1] * tail1[p + 1]

        integral0 = own0 + tail0[:, None]
        integral1 = decay[..., None, None] * (own1 + tail1[:, None])
        v_all = identity - (integral0 - integral1) / (2j * k)
        v_prime_all = -integral1

        v_new = v_all[:, :n]
        change = float(np.max(np.abs(v_new - v)))
        history.append(change)
        v = v_new
        if change < tol:
            break
    else:
        raise NonConvergenceError(
            "volterra iteration did not converge, try a larger |z|", history
        )

    # порядок точек: левый конец панели, затем ее узлы
    order = [n, *range(n)]
    grid = np.concatenate([lefts[:, None], X], axis=1).ravel()
    values = v_all[:, order].reshape(-1, m, m)
    derivatives = v_prime_all[:, order].reshape(-1, m, m)
    l1_norm = float(np.sum(W * np.linalg.norm(Qn, ord=2, axis=(-2, -1))))
    return grid, values, derivatives, iteration, history[-1], l1_norm, count


def solve_volterra(
    z: complex,
    pot: PotentialModel,
    x: float,
    tol: float = 1e-12,
    max_iterations: int = 200,
    max_refinements: int = 6,
) -> VolterraSolution:
    """Итерации Пикара для ṽ₊(z, ·) на [x, R] по панелям Гаусса–Лежандра

    ṽ₊′ находится из аналитически продифференцированного интеграла
    ṽ₊′(x) = −∫_x^R e^{2iz^{1/2}(x′−x)} Q(x′) ṽ₊(x′) dx′. Сетка удваивается,
    пока значения в точке x не перестанут меняться больше чем на tol.

    Raises:
        MethodNotApplicableError: у потенциала нет компактного носителя
        NonConvergenceError: итерации или сгущение сетки не сошлись
        VolterraBoundError: нарушена мажоранта Вольтерра
    """
    z = complex(z)
    k = sqrt_upper(z)
    if k.imag <= 0:
        raise DomainError("volterra path needs Im z^(1/2) > 0")
    if pot.support_hint is None:
        raise MethodNotApplicableError("volterra", "potential has no compact support")
    m = pot.dim
    identity = np.eye(m, dtype=complex)
    end = pot.support_hint[1]
    if x >= end:
        return VolterraSolution(
            z=z,
            grid=np.array([x]),
            v=identity[None].copy(),
            v_prime=np.zeros((1, m, m), dtype=complex),
            iterations=0,
            residual=0.0,
            bound=1.0,
            panels=0,
        )

    previous = None
    history = []
    for refinement in range(max_refinements + 1):
        edges = _panel_edges(pot, x, end, k, 2**refinement)
        solution = _solve_on_panels(k, pot, edges, tol, max_iterations)
        grid, values, derivatives = solution[:3]
        if previous is not None:
            change = max(
                op_norm(values[0] - previous[1][0]) / max(1.0, op_norm(values[0])),
                op_norm(derivatives[0] - previous[2][0]) / max(1.0, op_norm(derivatives[0])),
            )
            history.append(change)
            logger.debug("volterra z=%s panels=%d change=%.3g", z, solution[6], change)
            if change < tol:
                break
        previous = solution
    else:
        raise NonConvergenceError("volterra quadrature refinement did not converge", history)

    grid, values, derivatives, iterations, residual, l1_norm, panels = solution
    ratio = l1_norm / abs(k)
    bound = 1.0 + ratio * np.exp(ratio)
    largest = max(op_norm(v) for v in values)
    if largest > bound * (1.0 + 1e-9):
        raise VolterraBoundError(largest, bound)

    return VolterraSolution(
        z=z,
        grid=np.concatenate([grid, [end]]),
        v=np.concatenate([values, identity[None]]),
        v_prime=np.concatenate([derivatives, np.zeros((1, m, m), dtype=complex)]),
        iterations=iterations,
        residual=residual,
        bound=bound,
        panels=panels,
    )


def m_from_volterra(sol: VolterraSolution, x: float) -> np.ndarray:
    """M̃₊(z, x) = iz^{1/2}I + ṽ₊′ṽ₊⁻¹ в точке сетки решения

    Raises:
        InvalidInputError: x не является точкой сетки
        SingularityError: ṽ₊(x) вырождена
    """
    k = sqrt_upper(sol.z)
    m = sol.v.shape[1]
    leading = 1j * k * np.eye(m)
    if x >= sol.grid[-1]:
        return leading
    matches = np.nonzero(np.abs(sol.grid - x) <= 1e-12 * (1.0 + abs(x)))[0]
    if len(matches) == 0:
        raise InvalidInputError(f"x={x} is not a grid point of the volterra solution")
    index = matches[0]
    try:
        return leading + rsolve_checked(sol.v_prime[index], sol.v[index], "v(x)")
    except SingularityError as exc:
        raise SingularityError(
            "v(x) is singular, use a larger |z| or the ode path", exc.condition
        ) from exc
