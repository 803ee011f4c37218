import argparse
import logging
import sys

import toml
from pydantic import ValidationError

# Исправление путей, для поиска модулей
if "src" not in sys.path:
    sys.path.insert(0, "src")
if "." not in sys.path:
    sys.path.insert(0, ".")

from weylkit import services
from weylkit.commands import global_overrides, register_all
from weylkit.default import Defaults
from weylkit.errors import ToolkitError
from weylkit.repositories import Writers
from weylkit.schemas import ExperimentConfig, format_validation_error
from weylkit.utils import deep_merge

logger = logging.getLogger("weylkit")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INVALID = 2


def create_parser() -> argparse.ArgumentParser:
    """Создание парсера командной строки"""
    parser = argparse.ArgumentParser(
        prog="weylkit", description="Матрицы Вейля–Титчмарша: численные эксперименты"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_all(subparsers)
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Слияние default.toml, файла пользователя и флагов с проверкой

    Raises:
        ValidationError: конфигурация не прошла проверку
        OSError: файл конфигурации недоступен
    """
    user = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            user = toml.load(f)
    cli = deep_merge(global_overrides(args), args.overrides(args))
    data = Defaults().merged(user, cli)
    data["experiment"] = args.experiment
    return ExperimentConfig.model_validate(data)


def main(argv: list[str] | None = None) -> int:
    """Точка входа CLI

    Returns:
        int: 0 проверка пройдена, 1 численный сбой или FAIL, 2 ошибка входных данных
    """
    args = create_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        config = load_config(args)
    except ValidationError as exc:
        for line in format_validation_error(exc):
            print(f"invalid config: {line}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, toml.TomlDecodeError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        outcome = services.run(config)
    except ToolkitError as exc:
        logger.debug("experiment failed", exc_info=True)
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.exit_code

    writer = Writers.get(config.output.format)
    if config.output.path:
        writer.save(outcome.rows, outcome.meta, config.output.path)
        logger.info("results written to %s", config.output.path)
        summary_stream = sys.stdout
    else:
        writer.write(outcome.rows, outcome.meta, sys.stdout)
        summary_stream = sys.stderr
    for line in outcome.summary:
        print(line, file=summary_stream)
    return EXIT_PASS if outcome.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
