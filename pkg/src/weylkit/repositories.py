import csv
import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence, TextIO

from weylkit.errors import InvalidInputError
from weylkit.schemas import ResultRow
from weylkit.utils import SingletonMeta

BASE_COLUMNS = ["experiment", "z.re", "z.im", "x0", "x", "method", "m"]


class ResultsWriter(ABC):
    """
    Абстрактный писатель результатов.
    Новый формат вывода добавляется наследником, существующие не меняются.
    """

    @abstractmethod
    def write(self, rows: Sequence[ResultRow], meta: dict, stream: TextIO):
        """Запись строк результата в открытый поток

        :param rows: строки результата
        :param meta: параметры запуска (допуски, версии модулей)
        :param stream: поток для записи
        """
        pass

    def save(self, rows: Sequence[ResultRow], meta: dict, path: str | Path):
        """Запись в файл (каталог создается при необходимости)"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            self.write(rows, meta, f)


class CsvResultsWriter(ResultsWriter):
    """
    CSV: строка "# meta: {...}", затем заголовок.
    Комплексные числа разбиты на столбцы .re/.im, матрица записана по строкам.
    """

    def write(self, rows: Sequence[ResultRow], meta: dict, stream: TextIO):
        size = max((row.m for row in rows), default=0)
        value_columns = []
        for i in range(size):
            for j in range(size):
                value_columns += [f"value_{i}{j}.re", f"value_{i}{j}.im"]
        fieldnames = BASE_COLUMNS + value_columns + ["diagnostics"]

        stream.write("# meta: " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.DictWriter(stream, fieldnames=fieldnames, restval="", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            record = {
                "experiment": row.experiment,
                "z.re": repr(row.z_re),
                "z.im": repr(row.z_im),
                "x0": repr(row.x0),
                "x": repr(row.x),
                "method": row.method,
                "m": row.m,
                "diagnostics": json.dumps(row.diagnostics, sort_keys=True),
            }
            for i in range(row.m):
                for j in range(row.m):
                    offset = 2 * (i * row.m + j)
                    record[f"value_{i}{j}.re"] = repr(row.value[offset])
                    record[f"value_{i}{j}.im"] = repr(row.value[offset + 1])
            writer.writerow(record)


class JsonResultsWriter(ResultsWriter):
    """JSON: объект {"meta": ..., "rows": [...]} с упорядоченными ключами"""

    def write(self, rows: Sequence[ResultRow], meta: dict, stream: TextIO):
        document = {"meta": meta, "rows": [row.model_dump() for row in rows]}
        json.dump(document, stream, sort_keys=True, indent=2)
        stream.write("\n")


class Writers(metaclass=SingletonMeta):
    """Реестр писателей по формату"""

    csv_writer = CsvResultsWriter
    json_writer = JsonResultsWriter

    @classmethod
    def csv(cls) -> ResultsWriter:
        """Писатель CSV"""
        return cls.csv_writer()

    @classmethod
    def json(cls) -> ResultsWriter:
        """Писатель JSON"""
        return cls.json_writer()

    @classmethod
    def get(cls, format: str) -> ResultsWriter:
        """Писатель для формата "csv" или "json"

        Raises:
            InvalidInputError: неизвестный формат
        """
        factory = {"csv": cls.csv, "json": cls.json}.get(format)
        if factory is None:
            raise InvalidInputError(f"unknown output format {format!r}")
        return factory()
