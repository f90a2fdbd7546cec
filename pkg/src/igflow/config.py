"""Plain-text key=value configuration parsing shared by the CLI and the
field-spec file formats.  Lines are ``key = value``, '#' starts a comment,
blank lines are ignored."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "ConfigError",
    "parse_keyvalue_text",
    "parse_keyvalue_file",
    "ParamSpec",
    "coerce_params",
]


class ConfigError(ValueError):
    """A configuration file or parameter set failed validation."""


def parse_keyvalue_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_keyvalue_file(path) -> dict[str, str]:
    return parse_keyvalue_text(Path(path).read_text())


@dataclass(frozen=True)
class ParamSpec:
    """Declared experiment parameter: type, default, and help text.

    ``kind`` is one of int, float, str, floats (comma-separated list).
    Parameters without a default are required.
    """

    kind: str
    default: object = None
    required: bool = False
    help: str = ""


def _coerce_value(name: str, spec: ParamSpec, raw):
    try:
        if spec.kind == "int":
            return int(raw)
        if spec.kind == "float":
            return float(raw)
        if spec.kind == "str":
            return str(raw)
        if spec.kind == "floats":
            if isinstance(raw, (list, tuple)):
                return [float(v) for v in raw]
            return [float(part) for part in str(raw).split(",") if part.strip()]
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {name!r}: cannot parse {raw!r} as {spec.kind}") from None
    raise ConfigError(f"parameter {name!r} has unknown kind {spec.kind!r}")


def coerce_params(schema: dict[str, ParamSpec], raw: dict) -> dict:
    """Validate raw parameters against a schema; unknown keys are rejected."""
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
    out = {}
    for name, spec in schema.items():
        if name in raw:
            out[name] = _coerce_value(name, spec, raw[name])
        elif spec.required:
            raise ConfigError(f"missing required parameter {name!r}")
        else:
            out[name] = spec.default
    return out
