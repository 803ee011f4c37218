import argparse

from weylkit.commands import compare, experiments


def common_parser() -> argparse.ArgumentParser:
    """Флаги, общие для всех подкоманд"""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="файл конфигурации TOML")
    parent.add_argument("--out", help="файл результата (по умолчанию stdout)")
    parent.add_argument("--format", choices=["csv", "json"], help="формат результата")
    parent.add_argument("--rtol", type=float, help="относительный допуск интегратора")
    parent.add_argument("--atol", type=float, help="абсолютный допуск интегратора")
    parent.add_argument("--max-steps", type=int, help="бюджет шагов на один прогон")
    parent.add_argument("--jobs", type=int, help="число процессов")
    parent.add_argument("--seed", type=int, help="зерно генератора случайных чисел")
    parent.add_argument("-v", "--verbose", action="store_true", help="отладочный журнал")
    return parent


def register_all(subparsers):
    parent = common_parser()
    experiments.register(subparsers, parent)
    compare.register(subparsers, parent)


def global_overrides(args: argparse.Namespace) -> dict:
    """Значения конфигурации из общих флагов"""
    result: dict = {}
    tolerances = {
        key: value
        for key, value in (("rtol", args.rtol), ("atol", args.atol), ("max_steps", args.max_steps))
        if value is not None
    }
    if tolerances:
        result["tolerances"] = tolerances
    output = {}
    if args.out is not None:
        output["path"] = args.out
    if args.format is not None:
        output["format"] = args.format
    if output:
        result["output"] = output
    if args.jobs is not None:
        result["jobs"] = args.jobs
    if args.seed is not None:
        result["seed"] = args.seed
    return result
