from pathlib import Path

import toml

from weylkit.utils import SingletonMeta, deep_merge


class Defaults(metaclass=SingletonMeta):
    """Значения по умолчанию из default.toml (загружаются один раз)"""

    DEFAULTS_PATH = Path(__file__).resolve().parents[2] / "default.toml"

    def __init__(self):
        self.load()

    def load(self):
        path = Path(Defaults.DEFAULTS_PATH)
        if path.exists():
            with open(path, "r", encoding="utf-8") as f:
                self.__config = toml.load(f)
        else:
            self.__config = {}

    @property
    def config(self) -> dict:
        return dict(self.__config)

    @property
    def tolerances(self) -> dict:
        return dict(self.__config.get("tolerances", {}))

    @property
    def limit(self) -> dict:
        return dict(self.__config.get("limit", {}))

    @property
    def volterra(self) -> dict:
        return dict(self.__config.get("volterra", {}))

    @property
    def output(self) -> dict:
        return dict(self.__config.get("output", {}))

    def merged(self, *overrides: dict) -> dict:
        """Значения по умолчанию, последовательно перекрытые overrides"""
        result = self.config
        for override in overrides:
            result = deep_merge(result, override)
        return result
