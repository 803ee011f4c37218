"""weylkit: численный инструментарий для матриц Вейля–Титчмарша."""

__version__ = "0.1.0"
