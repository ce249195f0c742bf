"""``key = value`` config files mapped onto dataclasses."""
from __future__ import annotations

import dataclasses
import os
import types
import typing
from pathlib import Path

SEED_ENV = "POTTSCOLOR_SEED"


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def read_config(path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def _strip_optional(tp):
    args = [a for a in typing.get_args(tp) if a is not type(None)]
    if typing.get_origin(tp) in (typing.Union, types.UnionType) and len(args) == 1:
        return args[0], True
    return tp, False


def coerce(value, tp):
    """Convert a config string to the annotated field type."""
    if not isinstance(value, str):
        return value
    tp, optional = _strip_optional(tp)
    if optional and value.lower() in ("none", ""):
        return None
    try:
        if tp is bool:
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if tp is int:
            return int(value)
        if tp is float:
            return float(value)
        if tp is str:
            return value
        if tp is tuple or typing.get_origin(tp) is tuple:
            return tuple(int(v) for v in parse_list(value))
    except ValueError:
        raise ConfigError(f"cannot interpret {value!r} as {getattr(tp, '__name__', tp)}") from None
    return value


def parse_list(value: str) -> list[str]:
    return [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]


def build(cls, values: dict, **extra):
    """Instantiate dataclass ``cls`` from the subset of ``values`` naming its fields."""
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for f in dataclasses.fields(cls):
        if not f.init:
            continue
        if f.name in extra:
            kwargs[f.name] = extra[f.name]
        elif f.name in values:
            kwargs[f.name] = coerce(values[f.name], hints[f.name])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from None


def field_names(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls) if f.init}


def check_keys(values: dict, allowed: set[str]) -> None:
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")


def resolve_seed(explicit: int | None, default: int = 0) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
    return default


def format_resolved(values: dict) -> str:
    def fmt(v):
        if isinstance(v, (tuple, list)):
            return ",".join(str(x) for x in v)
        return str(v)

    return "\n".join(f"{k} = {fmt(v)}" for k, v in values.items())
