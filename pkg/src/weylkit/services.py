import logging
from concurrent.futures import ProcessPoolExecutor
from importlib.metadata import PackageNotFoundError, version
from typing import Callable, Sequence

import numpy as np

import weylkit
from weylkit import potential as potentials
from weylkit.asymptotics import (
    eval_green,
    eval_series,
    green_coeffs,
    green_diag,
    locality_experiment,
    m_coeffs,
    verify_order,
)
from weylkit.domains import ExperimentOutcome, LimitOptions, PotentialModel, StepControl
from weylkit.errors import InvalidInputError, MethodNotApplicableError
from weylkit.matkit import op_norm, sqrt_upper
from weylkit.propagate import riccati_flow
from weylkit.schemas import ExperimentConfig, ResultRow, to_matrix
from weylkit.volterra import m_from_volterra, solve_volterra
from weylkit.weyl import (
    limit_m,
    mirror_m_minus,
    nested_defects,
    random_positive_boundary,
    random_selfadjoint_boundary,
)

logger = logging.getLogger(__name__)

CONTAINMENT_TOL = 1e-8


def build_potential(spec) -> PotentialModel:
    """Построение потенциала по описанию из конфигурации

    Args:
        spec: один из вариантов schemas.PotentialSpec

    Raises:
        InvalidInputError: данные потенциала некорректны
    """
    builders: dict[str, Callable] = {
        "constant": lambda s: potentials.make_constant(to_matrix(s.value)),
        "truncated": lambda s: potentials.make_truncated(build_potential(s.base), s.x0, s.x1),
        "gaussian": lambda s: potentials.make_gaussian(
            to_matrix(s.amplitude), s.center, s.width, s.order
        ),
        "piecewise_constant": lambda s: potentials.make_piecewise_constant(
            s.breaks, [to_matrix(v) for v in s.values]
        ),
        "polynomial": lambda s: potentials.make_polynomial(
            [to_matrix(c) for c in s.coefficients]
        ),
        "matrix_expr": lambda s: potentials.make_matrix_expr(s.entries, s.order),
    }
    return builders[spec.kind](spec)


def step_control(config: ExperimentConfig) -> StepControl:
    tolerances = config.tolerances
    return StepControl(rtol=tolerances.rtol, atol=tolerances.atol, max_steps=tolerances.max_steps)


def limit_options(config: ExperimentConfig) -> LimitOptions:
    return LimitOptions(
        initial_length=config.limit.initial_length,
        max_horizon=config.limit.max_horizon,
        rtol=config.limit.rtol,
        ctrl=step_control(config),
    )


def z_points(config: ExperimentConfig) -> list[complex]:
    """Точки z = r·e^{iδ}: для каждого δ модули по возрастанию"""
    return [
        complex(r * np.exp(1j * delta))
        for delta in config.z_grid.arg
        for r in sorted(config.z_grid.moduli)
    ]


def _map(config: ExperimentConfig, fn: Callable, tasks: Sequence) -> list:
    """Упорядоченное отображение задач, в пуле процессов при jobs > 1"""
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(task) for task in tasks]


def _grid_tasks(config: ExperimentConfig) -> list[tuple]:
    return [
        (config, z, x, index)
        for index, (x, z) in enumerate((x, z) for x in config.points for z in z_points(config))
    ]


def _flatten(chunks: list[list]) -> list:
    return [row for chunk in chunks for row in chunk]


def _mfun_task(task) -> list[ResultRow]:
    config, z, x, _ = task
    pot = build_potential(config.potential)
    result = limit_m(z, x, pot, limit_options(config))
    diagnostics = {
        "error_estimate": result.error_estimate,
        "horizon": result.horizons[-1],
        "boundary": result.boundary,
        "limit_circle": result.limit_circle,
    }
    return [ResultRow.from_matrix("mfun", z, config.x0, x, "limit", result.m, diagnostics)]


def _asymp_task(task) -> list[ResultRow]:
    config, z, x, _ = task
    pot = build_potential(config.potential)
    series = m_coeffs(pot, x, config.order)
    value = eval_series(series, z)
    reference = limit_m(z, x, pot, limit_options(config)).m
    difference = op_norm(reference - value)
    diagnostics = {
        "order": config.order,
        "difference": difference,
        "scaled": difference * abs(z) ** (config.order / 2),
        "leading_gap": op_norm(reference - 1j * sqrt_upper(z) * np.eye(pot.dim)),
    }
    return [ResultRow.from_matrix("asymp", z, config.x0, x, "series", value, diagnostics)]


def _coefficient_rows(config: ExperimentConfig) -> list[ResultRow]:
    pot = build_potential(config.potential)
    rows = []
    for x in config.points:
        series = m_coeffs(pot, x, config.order)
        for k, coeff in enumerate(series.coeffs, start=1):
            rows.append(ResultRow.from_matrix("asymp", 0, config.x0, x, f"m{k}", coeff))
    return rows


def _disk_task(task) -> list[ResultRow]:
    config, z, x, index = task
    pot = build_potential(config.potential)
    ctrl = step_control(config)
    rng = np.random.default_rng([config.seed, index])
    horizons = sorted(x + length for length in config.horizons)
    rows = []
    for sample in range(config.samples):
        make = random_positive_boundary if sample % 2 == 0 else random_selfadjoint_boundary
        beta = make(pot.dim, rng)
        for c in horizons:
            M, defects = nested_defects(z, c, x, pot, beta, [h for h in horizons if h <= c], ctrl)
            diagnostics = {
                "c": c,
                "sign_class": beta.sign_class.value,
                "defects": defects,
                "contained": bool(max(defects) <= CONTAINMENT_TOL),
            }
            method = f"regular:{beta.sign_class.value}"
            rows.append(ResultRow.from_matrix("disk", z, config.x0, x, method, M, diagnostics))
    return rows


def _volterra_task(task) -> list[ResultRow]:
    config, z, x, _ = task
    pot = build_potential(config.potential)
    sol = solve_volterra(z, pot, x, config.volterra.tol, config.volterra.max_iterations)
    diagnostics = {
        "iterations": sol.iterations,
        "residual": sol.residual,
        "bound": sol.bound,
        "panels": sol.panels,
    }
    M = m_from_volterra(sol, x)
    return [ResultRow.from_matrix("volterra", z, config.x0, x, "volterra", M, diagnostics)]


def _green_task(task) -> list[ResultRow]:
    config, z, x, _ = task
    pot = build_potential(config.potential)
    opts = limit_options(config)
    M_plus = limit_m(z, x, pot, opts).m
    M_minus = mirror_m_minus(z, x, pot, opts).m
    G = green_diag(M_minus, M_plus)
    series = green_coeffs(pot, x, config.order)
    difference = op_norm(G - eval_green(series, z))
    diagnostics = {
        "order": config.order,
        "series_difference": difference,
        "scaled": difference * abs(z) ** (config.order + 0.5),
    }
    return [ResultRow.from_matrix("green", z, config.x0, x, "green", G, diagnostics)]


def _green_coefficient_rows(config: ExperimentConfig) -> list[ResultRow]:
    pot = build_potential(config.potential)
    rows = []
    for x in config.points:
        series = green_coeffs(pot, x, config.order)
        for k, coeff in enumerate(series.coeffs):
            rows.append(ResultRow.from_matrix("green", 0, config.x0, x, f"G{k}", coeff))
    return rows


def _verify_task(task):
    config, delta, x = task
    pot = build_potential(config.potential)
    report = verify_order(
        pot,
        x,
        config.order,
        sorted(config.z_grid.moduli),
        [delta],
        limit_options(config),
        volterra_tol=config.volterra.tol,
        floor=config.floor,
    )
    return x, report.rows[0]


def _locality_task(task):
    config, delta = task
    pot1 = build_potential(config.potential)
    pot2 = build_potential(config.potential2)
    report = locality_experiment(
        pot1,
        pot2,
        config.x0,
        config.x1,
        sorted(config.z_grid.moduli),
        delta,
        limit_options(config),
        bound_ratio=config.bound_ratio,
    )
    return delta, report


def _method_m(method: str, config: ExperimentConfig, pot, z: complex, x: float) -> np.ndarray:
    opts = limit_options(config)
    if method == "limit":
        return limit_m(z, x, pot, opts).m
    if method == "riccati":
        far = x + config.translate
        M_far = limit_m(z, far, pot, opts).m
        return riccati_flow(z, M_far, pot, far, x, opts.ctrl)
    sol = solve_volterra(z, pot, x, config.volterra.tol, config.volterra.max_iterations)
    return m_from_volterra(sol, x)


def _compare_task(task) -> list[ResultRow]:
    config, z, x, _ = task
    pot = build_potential(config.potential)
    values = {method: _method_m(method, config, pot, z, x) for method in config.methods}
    rows = []
    for method, M in values.items():
        diffs = {
            other: op_norm(M - values[other]) for other in config.methods if other != method
        }
        diagnostics = {"differences": diffs, "max_difference": max(diffs.values())}
        rows.append(ResultRow.from_matrix("compare", z, config.x0, x, method, M, diagnostics))
    return rows


def mfun(config: ExperimentConfig) -> ExperimentOutcome:
    """M₊(z, x) на сетке z и точках x"""
    rows = _flatten(_map(config, _mfun_task, _grid_tasks(config)))
    return ExperimentOutcome("mfun", rows, True, [f"mfun: {len(rows)} points"])


def asymp(config: ExperimentConfig) -> ExperimentOutcome:
    """Коэффициенты m₊,ₖ и частичные суммы разложения с отклонением от limit_m"""
    rows = _coefficient_rows(config) + _flatten(_map(config, _asymp_task, _grid_tasks(config)))
    return ExperimentOutcome("asymp", rows, True, [f"asymp: order {config.order}"])


def disk(config: ExperimentConfig) -> ExperimentOutcome:
    """Вложение регулярных M-функций в диски Риккати на своем и меньших горизонтах"""
    rows = _flatten(_map(config, _disk_task, _grid_tasks(config)))
    failed = [row for row in rows if not row.diagnostics["contained"]]
    passed = not failed
    summary = [f"{'PASS' if passed else 'FAIL'} disk: {len(rows) - len(failed)}/{len(rows)} contained"]
    return ExperimentOutcome("disk", rows, passed, summary)


def volterra(config: ExperimentConfig) -> ExperimentOutcome:
    """M̃₊ через уравнение Вольтерра"""
    pot = build_potential(config.potential)
    if not pot.is_compact:
        raise MethodNotApplicableError("volterra", "potential has no compact support")
    rows = _flatten(_map(config, _volterra_task, _grid_tasks(config)))
    return ExperimentOutcome("volterra", rows, True, [f"volterra: {len(rows)} points"])


def green(config: ExperimentConfig) -> ExperimentOutcome:
    """Диагональ матрицы Грина и ее разложение"""
    rows = _green_coefficient_rows(config) + _flatten(
        _map(config, _green_task, _grid_tasks(config))
    )
    return ExperimentOutcome("green", rows, True, [f"green: order {config.order}"])


def verify(config: ExperimentConfig) -> ExperimentOutcome:
    """Проверка порядка остатка разложения на всех лучах и точках x"""
    if len(config.z_grid.moduli) < 3:
        raise InvalidInputError("verify needs at least three moduli in z_grid.moduli")
    tasks = [(config, delta, x) for x in config.points for delta in config.z_grid.arg]
    results = _map(config, _verify_task, tasks)
    rows, table = [], []
    for x, row in results:
        for r, difference, remainder in zip(row.moduli, row.differences, row.remainders):
            z = r * np.exp(1j * row.delta)
            diagnostics = {"difference": difference, "delta": row.delta, "passed": row.passed}
            rows.append(
                ResultRow.from_matrix("verify", z, config.x0, x, "remainder", remainder, diagnostics)
            )
            table.append(f"  x={x:g} delta={row.delta:.6g} |z|={r:g} R={remainder:.6e}")
    passed = all(row.passed for _, row in results)
    head = f"{'PASS' if passed else 'FAIL'} verify: order {config.order}"
    return ExperimentOutcome("verify", rows, passed, [head, *table])


def locality(config: ExperimentConfig) -> ExperimentOutcome:
    """Экспоненциальная локальность M₊ для потенциалов, совпадающих на [x0, x1]"""
    results = _map(config, _locality_task, [(config, delta) for delta in config.z_grid.arg])
    rows, summary, passed = [], [], True
    for delta, report in results:
        for r, s, d, direct, norm in zip(
            report.moduli,
            report.sqrt_imag,
            report.differences,
            report.direct_differences,
            report.normalized,
        ):
            diagnostics = {"sqrt_imag": s, "direct": direct, "normalized": norm}
            z = r * np.exp(1j * delta)
            rows.append(
                ResultRow.from_matrix("locality", z, config.x0, config.x0, "difference", d, diagnostics)
            )
        passed = passed and report.passed
        summary.append(
            f"{'PASS' if report.passed else 'FAIL'} locality delta={delta:.6g}: "
            f"slope {report.slope:.4f} (target {report.target_slope:.4f}), "
            f"bounded={report.bounded}"
        )
    return ExperimentOutcome("locality", rows, passed, summary)


def compare(config: ExperimentConfig) -> ExperimentOutcome:
    """Сравнение методов limit, riccati и volterra на сетке z

    Raises:
        MethodNotApplicableError: volterra выбран для потенциала без компактного носителя
    """
    pot = build_potential(config.potential)
    if "volterra" in config.methods and not pot.is_compact:
        raise MethodNotApplicableError("volterra", "potential has no compact support")
    rows = _flatten(_map(config, _compare_task, _grid_tasks(config)))
    largest = max((row.diagnostics["max_difference"] for row in rows), default=0.0)
    passed = largest <= config.threshold
    summary = [
        f"{'PASS' if passed else 'FAIL'} compare {'/'.join(config.methods)}: "
        f"max difference {largest:.3e} (threshold {config.threshold:g})"
    ]
    return ExperimentOutcome("compare", rows, passed, summary)


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentOutcome]] = {
    "mfun": mfun,
    "asymp": asymp,
    "disk": disk,
    "volterra": volterra,
    "green": green,
    "locality": locality,
    "verify": verify,
    "compare": compare,
}


def _package_version(name: str) -> str:
    try:
        return version(name)
    except PackageNotFoundError:
        return "unknown"


def run_meta(config: ExperimentConfig) -> dict:
    """Заголовок результата: допуски, параметры и версии модулей"""
    return {
        "experiment": config.experiment,
        "tolerances": config.tolerances.model_dump(),
        "limit": config.limit.model_dump(),
        "volterra": config.volterra.model_dump(),
        "order": config.order,
        "seed": config.seed,
        "versions": {
            "weylkit": weylkit.__version__,
            "numpy": np.__version__,
            "scipy": _package_version("scipy"),
            "sympy": _package_version("sympy"),
        },
    }


def run(config: ExperimentConfig) -> ExperimentOutcome:
    """Запуск эксперимента по конфигурации

    Returns:
        ExperimentOutcome: строки результата, итог и сводка

    Raises:
        InvalidInputError: некорректные данные
        NumericalError: численный сбой
    """
    logger.info("running %s on %d z points", config.experiment, len(z_points(config)))
    outcome = EXPERIMENTS[config.experiment](config)
    outcome.meta = run_meta(config)
    logger.info("%s finished: %s", config.experiment, "pass" if outcome.passed else "fail")
    return outcome
