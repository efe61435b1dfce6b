"""Bundled benchmark systems with committed golden verification reports."""

from __future__ import annotations

import json
from importlib import resources

from ..system import SystemSpec

_NAMES = ("linear-2d", "pendulum", "cubic-scalar", "van-der-pol")


def names() -> tuple[str, ...]:
    return _NAMES


def load_dict(name: str) -> dict:
    if name not in _NAMES:
        raise KeyError(f"unknown benchmark {name!r}; available: {', '.join(_NAMES)}")
    data = resources.files(__package__).joinpath(f"{name}.json").read_text()
    return json.loads(data)


def load(name: str) -> SystemSpec:
    return SystemSpec.from_dict(load_dict(name))
