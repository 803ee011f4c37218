"""Хук mkapi для справочника weylkit.

Пакет лежит в src/, поэтому каталог добавляется в sys.path до того,
как mkapi начнёт импортировать weylkit.matkit, weylkit.weyl и остальные модули.
"""

from __future__ import annotations

import sys
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from mkdocs.config.defaults import MkDocsConfig

    from mkapi.plugins import MkAPIPlugin


def before_on_config(config: MkDocsConfig, plugin: MkAPIPlugin) -> None:  # noqa: ARG001
    """Делает пакет weylkit из src/ импортируемым при сборке документации."""
    if "src" not in sys.path:
        sys.path.insert(0, "src")
