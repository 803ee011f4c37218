import argparse

EXPERIMENTS = {
    "mfun": "M₊(z, x) как предел регулярных M-функций",
    "asymp": "коэффициенты и частичные суммы высокоэнергетического разложения",
    "disk": "вложение регулярных M-функций в диски Риккати",
    "volterra": "M₊ через уравнение Вольтерра (компактный носитель)",
    "green": "диагональ матрицы Грина и ее разложение",
    "locality": "экспоненциальная локальность M₊",
    "verify": "проверка порядка остатка разложения",
}

ORDERED = {"asymp", "green", "verify"}


def overrides(args: argparse.Namespace) -> dict:
    """Значения конфигурации из флагов подкоманды"""
    result = {}
    if getattr(args, "order", None) is not None:
        result["order"] = args.order
    if getattr(args, "x0", None) is not None:
        result["x0"] = args.x0
    return result


def register(subparsers, parent: argparse.ArgumentParser):
    """Регистрация подкоманд экспериментов

    Args:
        subparsers: результат add_subparsers главного парсера
        parent (ArgumentParser): общие флаги
    """
    for name, help_text in EXPERIMENTS.items():
        parser = subparsers.add_parser(name, parents=[parent], help=help_text)
        parser.add_argument("--x0", type=float, help="левый конец полупрямой")
        if name in ORDERED:
            parser.add_argument("--order", type=int, help="порядок разложения N")
        parser.set_defaults(experiment=name, overrides=overrides)
