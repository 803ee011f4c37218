class ToolkitError(Exception):
    """Базовая ошибка инструментария

    Поля:

      - message (str): текст ошибки
      - exit_code (int): код завершения CLI
    """

    exit_code = 1

    def __init__(self, message: str = "toolkit error"):
        super().__init__(message)
        self.message = message


class InvalidInputError(ToolkitError):
    """Отклонение входных данных (код 2)"""

    exit_code = 2

    def __init__(self, message: str = "invalid input"):
        super().__init__(message)


class DomainError(InvalidInputError):
    """Спектральный параметр вне области определения"""

    def __init__(self, message: str = "spectral parameter outside the domain"):
        super().__init__(message)


class MethodNotApplicableError(InvalidInputError):
    """Метод неприменим к потенциалу"""

    def __init__(self, method: str, reason: str):
        super().__init__(f"method {method!r} is not applicable: {reason}")
        self.method = method


class NumericalError(ToolkitError):
    """Численный сбой (код 1)"""

    def __init__(self, message: str = "numerical failure"):
        super().__init__(message)


class OverflowRiskError(NumericalError):
    def __init__(
        self,
        message: str = "fundamental system would overflow, use the riccati or cayley path",
    ):
        super().__init__(message)


class StiffnessError(NumericalError):
    """Шаг интегратора стал слишком мал или исчерпан бюджет шагов"""

    def __init__(self, message: str = "step size underflow", at: float | None = None):
        if at is not None:
            message = f"{message} at x={at:.6g}"
        super().__init__(message)
        self.at = at


class RiccatiPoleError(NumericalError):
    """Полюс решения уравнения Риккати

    Поля:

      - location (float): оценка положения полюса
    """

    def __init__(self, location: float):
        super().__init__(f"riccati solution blows up near x={location:.6g}")
        self.location = location


class SingularityError(NumericalError):
    def __init__(self, message: str = "singular matrix", condition: float = float("inf")):
        super().__init__(f"{message} (condition number {condition:.3g})")
        self.condition = condition


class NonConvergenceError(NumericalError):
    """Итерационный процесс не сошелся

    Поля:

      - history (list[float]): последовательность невязок
    """

    def __init__(self, message: str = "no convergence", history: list[float] | None = None):
        super().__init__(message)
        self.history = list(history or [])


class HerglotzViolationError(NumericalError):
    def __init__(self, defect: float):
        super().__init__(f"imaginary part is not positive definite (defect {defect:.3g})")
        self.defect = defect


class VolterraBoundError(NumericalError):
    def __init__(self, norm: float, bound: float):
        super().__init__(
            f"volterra solution norm {norm:.6g} exceeds the majorant {bound:.6g}"
        )
        self.norm = norm
        self.bound = bound
