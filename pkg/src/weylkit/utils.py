class SingletonMeta(type):
    """Метакласс для объектов в одном экземпляре на процесс

    Используется для Defaults (default.toml читается один раз) и реестра
    писателей Writers. Экземпляр создаётся при первом вызове класса,
    аргументы последующих вызовов игнорируются.
    """

    _instances = {}

    def __call__(cls, *args, **kwargs):
        if cls not in cls._instances:
            cls._instances[cls] = super(SingletonMeta, cls).__call__(*args, **kwargs)
        return cls._instances[cls]

    def forget(cls) -> None:
        """Сбрасывает экземпляр: следующий вызов класса создаст новый"""
        SingletonMeta._instances.pop(cls, None)


def deep_merge(base: dict, override: dict) -> dict:
    """Рекурсивное слияние словарей настроек

    Args:
        base (dict): исходные значения
        override (dict): значения с приоритетом

    Returns:
        dict: новый словарь, исходные не изменяются
    """
    result = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = deep_merge(result[key], value)
        else:
            result[key] = value
    return result
