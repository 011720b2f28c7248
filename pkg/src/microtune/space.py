"""Typed, bounded search spaces and their grid-index bijection.

A search space is an ordered list of typed parameters, each with a finite
ordered value list. A configuration assigns a value to every parameter;
disabled parameters are pinned to their defaults so a rendered command line is
always complete. Configurations are in bijection with ``0..cardinality-1`` via
mixed-radix encoding: the first declared enabled parameter is the most
significant digit and the last declared one varies fastest.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import SpaceError

Value = bool | int | str
Configuration = dict[str, Value]

KIB = 1024
MIB = 1024**2
GIB = 1024**3


class Kind(str, Enum):
    """Parameter taxonomy: boolean, discrete (int), byte (int), categorical (str)."""

    BOOLEAN = "boolean"
    DISCRETE = "discrete"
    BYTE = "byte"
    CATEGORICAL = "categorical"


class Target(str, Enum):
    """Where a rendered parameter lands on the launched target."""

    RUNTIME_FLAG = "runtime-flag"
    CONTAINER_FLAG = "container-flag"
    ENVIRONMENT_VARIABLE = "environment-variable"


_BYTE_TEXT = re.compile(r"^([0-9]+)([bkmg])?$", re.IGNORECASE)
_SUFFIX_MULTIPLIER = {None: 1, "b": 1, "k": KIB, "m": MIB, "g": GIB}


def parse_byte_size(value: str | int) -> int:
    """Parse a byte size like ``"512m"`` (b/k/m/g suffixes, 1024-based) to an int.

    Plain integers pass through. Values must be positive.
    """
    if isinstance(value, bool):
        raise SpaceError(f"not a byte size: {value!r}")
    if isinstance(value, int):
        n = value
    else:
        match = _BYTE_TEXT.match(value.strip())
        if match is None:
            raise SpaceError(f"malformed byte size {value!r}")
        digits, suffix = match.groups()
        n = int(digits) * _SUFFIX_MULTIPLIER[suffix.lower() if suffix else None]
    if n <= 0:
        raise SpaceError(f"byte size must be positive, got {n}")
    return n


def format_byte_size(n: int) -> str:
    """Format bytes with the largest binary suffix dividing exactly, else plain."""
    if n <= 0:
        raise SpaceError(f"byte size must be positive, got {n}")
    for suffix, mult in (("g", GIB), ("m", MIB), ("k", KIB)):
        if n % mult == 0:
            return f"{n // mult}{suffix}"
    return str(n)


@dataclass(frozen=True)
class RenderRule:
    """How one parameter value becomes a flag or environment variable.

    Boolean parameters use ``on_template``/``off_template`` (either may be empty,
    meaning emit nothing). All other kinds use ``template``, which must contain
    the ``{value}`` placeholder exactly once. Environment-variable templates
    render to ``KEY=VALUE`` text, split at the first ``=``.
    """

    target: Target
    template: str | None = None
    on_template: str | None = None
    off_template: str | None = None


@dataclass(frozen=True)
class ParameterSpec:
    """One tunable parameter: ordered admissible values plus a rendering rule."""

    name: str
    kind: Kind
    values: tuple[Value, ...]
    default: Value
    render: RenderRule
    enabled: bool = True

    def __post_init__(self) -> None:
        if not self.name:
            raise SpaceError("parameter name must be non-empty")
        self._check_values()
        if not any(v == self.default and type(v) is type(self.default) for v in self.values):
            raise SpaceError(f"parameter {self.name!r}: default {self.default!r} not in values")
        self._check_render()

    def _check_values(self) -> None:
        name, kind, values = self.name, self.kind, self.values
        if not values:
            raise SpaceError(f"parameter {name!r}: values must be non-empty")
        if kind is Kind.BOOLEAN:
            if tuple(values) != (False, True):
                raise SpaceError(f"parameter {name!r}: boolean values must be [false, true]")
            return
        expected = str if kind is Kind.CATEGORICAL else int
        for v in values:
            if type(v) is not expected:
                raise SpaceError(f"parameter {name!r}: {kind.value} value {v!r} has wrong type")
            if kind is Kind.BYTE and v <= 0:
                raise SpaceError(f"parameter {name!r}: byte value {v!r} must be positive")
        if len(set(values)) != len(values):
            raise SpaceError(f"parameter {name!r}: duplicate values")

    def _check_render(self) -> None:
        rule = self.render
        if self.kind is Kind.BOOLEAN:
            if rule.template is not None or rule.on_template is None or rule.off_template is None:
                raise SpaceError(
                    f"parameter {self.name!r}: boolean render needs on_template/off_template"
                )
            texts = [rule.on_template, rule.off_template]
        else:
            if rule.template is None or rule.on_template is not None or rule.off_template is not None:
                raise SpaceError(f"parameter {self.name!r}: render needs a template")
            if rule.template.count("{value}") != 1:
                raise SpaceError(
                    f"parameter {self.name!r}: template must contain {{value}} exactly once"
                )
            texts = [rule.template]
        if rule.target is Target.ENVIRONMENT_VARIABLE:
            for text in texts:
                if text and "=" not in text:
                    raise SpaceError(
                        f"parameter {self.name!r}: environment template must contain '='"
                    )


@dataclass(frozen=True)
class SearchSpace:
    """Ordered, validated collection of parameters; immutable once built."""

    name: str
    parameters: tuple[ParameterSpec, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for p in self.parameters:
            if p.name in seen:
                raise SpaceError(f"duplicate parameter name {p.name!r}")
            seen.add(p.name)

    def parameter(self, name: str) -> ParameterSpec:
        for p in self.parameters:
            if p.name == name:
                return p
        raise SpaceError(f"unknown parameter {name!r}")

    def enabled_parameters(self) -> tuple[ParameterSpec, ...]:
        return tuple(p for p in self.parameters if p.enabled)

    def cardinality(self) -> int:
        """Product of |values| over enabled parameters; 1 when none are enabled."""
        n = 1
        for p in self.enabled_parameters():
            n *= len(p.values)
        return n

    def default_configuration(self) -> Configuration:
        return {p.name: p.default for p in self.parameters}

    def with_enabled(self, names: Iterable[str]) -> "SearchSpace":
        """Copy of the space with exactly ``names`` enabled, everything else pinned."""
        wanted = set(names)
        unknown = wanted - {p.name for p in self.parameters}
        if unknown:
            raise SpaceError(f"unknown parameter {sorted(unknown)[0]!r}")
        params = tuple(
            ParameterSpec(p.name, p.kind, p.values, p.default, p.render, p.name in wanted)
            for p in self.parameters
        )
        return SearchSpace(self.name, params)


@dataclass(frozen=True)
class RenderedConfig:
    """A configuration rendered to concrete launch inputs, in declaration order."""

    runtime_flags: tuple[str, ...]
    container_flags: tuple[str, ...]
    environment: dict[str, str]


def cardinality(space: SearchSpace) -> int:
    return space.cardinality()


def validate_configuration(space: SearchSpace, config: Mapping[str, Value]) -> None:
    """Check a configuration covers every parameter with admissible values.

    Disabled parameters must carry their defaults.
    """
    names = {p.name for p in space.parameters}
    extra = set(config) - names
    if extra:
        raise SpaceError(f"unknown parameter {sorted(extra)[0]!r} in configuration")
    for p in space.parameters:
        if p.name not in config:
            raise SpaceError(f"configuration missing parameter {p.name!r}")
        value = config[p.name]
        if not any(v == value and type(v) is type(value) for v in p.values):
            raise SpaceError(f"parameter {p.name!r}: value {value!r} not admissible")
        if not p.enabled and value != p.default:
            raise SpaceError(f"parameter {p.name!r} is disabled and must keep its default")


def index_to_config(space: SearchSpace, index: int) -> Configuration:
    """Decode a mixed-radix grid index into a full configuration.

    First declared enabled parameter is most significant; the last declared
    enabled parameter varies fastest. Disabled parameters get their defaults.
    """
    card = space.cardinality()
    if not 0 <= index < card:
        raise SpaceError(f"index {index} out of range for cardinality {card}")
    chosen: dict[str, Value] = {}
    rem = index
    for p in reversed(space.enabled_parameters()):
        rem, pos = divmod(rem, len(p.values))
        chosen[p.name] = p.values[pos]
    return {p.name: chosen.get(p.name, p.default) for p in space.parameters}


def config_to_index(space: SearchSpace, config: Mapping[str, Value]) -> int:
    """Exact inverse of :func:`index_to_config`."""
    validate_configuration(space, config)
    index = 0
    for p in space.enabled_parameters():
        index = index * len(p.values) + p.values.index(config[p.name])
    return index


def _value_text(kind: Kind, value: Value) -> str:
    if kind is Kind.BYTE:
        return format_byte_size(value)  # type: ignore[arg-type]
    if kind is Kind.BOOLEAN:
        return "true" if value else "false"
    return str(value)


def render(space: SearchSpace, config: Mapping[str, Value]) -> RenderedConfig:
    """Render a configuration into runtime flags, container flags and env vars.

    Byte values use the largest exact binary suffix (k/m/g); empty boolean
    templates contribute nothing.
    """
    validate_configuration(space, config)
    runtime: list[str] = []
    container: list[str] = []
    environment: dict[str, str] = {}
    for p in space.parameters:
        value = config[p.name]
        if p.kind is Kind.BOOLEAN:
            text = p.render.on_template if value else p.render.off_template
        else:
            text = p.render.template.replace("{value}", _value_text(p.kind, value))
        if not text:
            continue
        if p.render.target is Target.RUNTIME_FLAG:
            runtime.append(text)
        elif p.render.target is Target.CONTAINER_FLAG:
            container.append(text)
        else:
            key, _, val = text.partition("=")
            environment[key] = val
    return RenderedConfig(tuple(runtime), tuple(container), environment)


def _parse_enum(cls: type, raw: Any, context: str) -> Any:
    try:
        return cls(raw)
    except ValueError:
        options = ", ".join(m.value for m in cls)
        raise SpaceError(f"{context}: expected one of {options}, got {raw!r}") from None


def _parse_values(name: str, kind: Kind, raw: Any) -> tuple[Value, ...]:
    if not isinstance(raw, list):
        raise SpaceError(f"parameter {name!r}: values must be a list")
    if kind is Kind.BYTE:
        return tuple(parse_byte_size(v) for v in raw)
    return tuple(raw)


def _parse_render(name: str, kind: Kind, raw: Any) -> RenderRule:
    if not isinstance(raw, Mapping):
        raise SpaceError(f"parameter {name!r}: render must be an object")
    target = _parse_enum(Target, raw.get("target"), f"parameter {name!r} render target")
    if kind is Kind.BOOLEAN:
        return RenderRule(
            target=target,
            on_template=raw.get("on_template"),
            off_template=raw.get("off_template"),
        )
    return RenderRule(target=target, template=raw.get("template"))


def parse_space(document: str | Mapping[str, Any]) -> SearchSpace:
    """Parse and validate a search-space JSON document (text or parsed).

    Byte values may be written with binary suffixes ("512m") and are
    normalized to integers.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpaceError(f"malformed space document: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, Mapping) or not isinstance(doc.get("parameters"), list):
        raise SpaceError("space document must be an object with a 'parameters' list")
    params = []
    for raw in doc["parameters"]:
        if not isinstance(raw, Mapping) or "name" not in raw:
            raise SpaceError("each parameter must be an object with a 'name'")
        name = raw["name"]
        kind = _parse_enum(Kind, raw.get("kind"), f"parameter {name!r} kind")
        values = _parse_values(name, kind, raw.get("values"))
        default = raw.get("default")
        if kind is Kind.BYTE and default is not None:
            default = parse_byte_size(default)
        params.append(
            ParameterSpec(
                name=name,
                kind=kind,
                values=values,
                default=default,
                render=_parse_render(name, kind, raw.get("render")),
                enabled=bool(raw.get("enabled", True)),
            )
        )
    return SearchSpace(name=str(doc.get("name", "space")), parameters=tuple(params))


def space_to_doc(space: SearchSpace) -> dict[str, Any]:
    """Serialize a space back into its document form (bytes as plain integers)."""
    return {
        "name": space.name,
        "parameters": [
            {
                "name": p.name,
                "kind": p.kind.value,
                "values": list(p.values),
                "default": p.default,
                "enabled": p.enabled,
                "render": _render_to_doc(p),
            }
            for p in space.parameters
        ],
    }


def _render_to_doc(p: ParameterSpec) -> dict[str, Any]:
    if p.kind is Kind.BOOLEAN:
        return {
            "target": p.render.target.value,
            "on_template": p.render.on_template,
            "off_template": p.render.off_template,
        }
    return {"target": p.render.target.value, "template": p.render.template}
