"""Named fixture registry used by the CLI."""
from __future__ import annotations

from ..errors import ConfigError
from .fixtures import (Poiseuille, RigidHelixFlow, ShearFlow, StagnationSwirl,
                       StraightTube, Womersley)
from .grid import Gridded, load_grid
from .waveforms import as_profile, waveform_from_config

FIXTURES = {
    "StraightTube": StraightTube,
    "ShearFlow": ShearFlow,
    "RigidHelixFlow": RigidHelixFlow,
    "StagnationSwirl": StagnationSwirl,
    "Poiseuille": Poiseuille,
    "Womersley": Womersley,
    "Gridded": Gridded,
}


def list_fixtures():
    return list(FIXTURES)


def make_fixture(spec: dict, base_dir=None):
    """Build a field from a config mapping ``{"kind": name, **params}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in FIXTURES:
        raise ConfigError(f"unknown fixture {kind!r}; known: {', '.join(FIXTURES)}")
    try:
        if kind == "Gridded":
            import os
            path = spec.pop("path")
            if base_dir and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            return Gridded(load_grid(path))
        if kind == "StraightTube" and "g" in spec:
            spec["g"] = waveform_from_config(spec["g"])
        if kind == "ShearFlow" and "f" in spec:
            spec["f"] = as_profile(spec["f"])
        if kind == "StagnationSwirl" and spec.get("modulation") is not None:
            spec["modulation"] = waveform_from_config(spec["modulation"])
        return FIXTURES[kind](**spec)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad parameters for {kind}: {exc}") from exc


def describe(fixture) -> str:
    if isinstance(fixture, str):
        cls = FIXTURES[fixture]
        if fixture == "Gridded":
            return f"Gridded: {cls.citation}"
        fixture = cls()
    return fixture.describe()
