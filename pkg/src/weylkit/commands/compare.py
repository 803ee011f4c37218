import argparse


def overrides(args: argparse.Namespace) -> dict:
    result = {}
    if args.methods:
        result["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.threshold is not None:
        result["threshold"] = args.threshold
    if args.x0 is not None:
        result["x0"] = args.x0
    return result


def register(subparsers, parent: argparse.ArgumentParser):
    """Подкоманда compare: попарное сравнение методов limit, riccati, volterra"""
    parser = subparsers.add_parser(
        "compare", parents=[parent], help="сравнение методов вычисления M₊"
    )
    parser.add_argument("--methods", help="методы через запятую, например limit,volterra")
    parser.add_argument("--threshold", type=float, help="порог наибольшей разности")
    parser.add_argument("--x0", type=float, help="левый конец полупрямой")
    parser.set_defaults(experiment="compare", overrides=overrides)
