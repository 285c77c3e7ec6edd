# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Run Configuration
=================

INI configuration shared by all commands. Every key is optional; unknown sections or keys
are rejected. See ``docs/source/config.rst`` for the schema.

.. code-block:: ini

    [run]
    seed = 42

    [layer1]
    alpha = 100
    weights = out/layer1.slwt

    [pfilter]
    particles = 300

"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .kernels.lib import FormatError, _check
from .obsmodel import NegativeSampling
from .tracker import TrackerConfig

__all__ = ["DatasetConfig", "RunConfig", "parse_config", "load_config", "with_overrides"]


@dataclass(frozen=True)
class DatasetConfig:
    """Settings of session collection that are not part of the tracker."""

    threshold: float = 0.1
    min_component_area: int = 25
    search_radius: int = 2
    max_shift: float = 1.0
    max_rotation: float = 5.0
    shuffle_fraction: float = 0.0

    def __post_init__(self) -> None:
        _check(0.0 < self.threshold < 1.0, "invalid-threshold", "Threshold must lie in (0, 1).")
        _check(self.min_component_area >= 0, "invalid-min_component_area", "Area must be non-negative.")
        _check(self.search_radius >= 0, "invalid-search_radius", "Radius must be non-negative.")
        _check(
            0.0 <= self.shuffle_fraction <= 1.0,
            "invalid-shuffle_fraction",
            "Shuffle fraction must lie in [0, 1].",
        )


@dataclass(frozen=True)
class RunConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    seed: int = 42
    layer1_weights: Path | None = None
    layer2_weights: Path | None = None


def _bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


# (section, key) -> (group, field, index or None, converter)
_Entry = tuple[str, str, int | None, Callable[[str], Any]]
_SCHEMA: dict[tuple[str, str], _Entry] = {
    ("run", "seed"): ("run", "seed", None, int),
    ("dataset", "threshold"): ("dataset", "threshold", None, float),
    ("dataset", "min_component_area"): ("dataset", "min_component_area", None, int),
    ("dataset", "search_radius"): ("dataset", "search_radius", None, int),
    ("dataset", "max_shift"): ("dataset", "max_shift", None, float),
    ("dataset", "max_rotation"): ("dataset", "max_rotation", None, float),
    ("dataset", "shuffle_fraction"): ("dataset", "shuffle_fraction", None, float),
    ("dataset", "sessions"): ("tracker", "n_sessions", None, int),
    ("dataset", "frames"): ("tracker", "n_frames", None, int),
    ("layer1", "edge"): ("tracker", "edge1", None, int),
    ("layer1", "units"): ("tracker", "p1", None, int),
    ("layer1", "alpha"): ("tracker", "alpha", 0, float),
    ("layer1", "gamma"): ("tracker", "gamma", 0, float),
    ("layer1", "input_scale"): ("tracker", "input_scale", 0, float),
    ("layer1", "weights"): ("run", "layer1_weights", None, Path),
    ("layer2", "edge"): ("tracker", "edge2", None, int),
    ("layer2", "units"): ("tracker", "p2", None, int),
    ("layer2", "alpha"): ("tracker", "alpha", 1, float),
    ("layer2", "gamma"): ("tracker", "gamma", 1, float),
    ("layer2", "input_scale"): ("tracker", "input_scale", 1, float),
    ("layer2", "weights"): ("run", "layer2_weights", None, Path),
    ("stack", "k1"): ("tracker", "k1", None, int),
    ("stack", "k2"): ("tracker", "k2", None, int),
    ("stack", "max_iter"): ("tracker", "max_iter", None, int),
    ("obsmodel", "v"): ("tracker", "v", None, int),
    ("obsmodel", "eta"): ("tracker", "eta", None, float),
    ("obsmodel", "varphi"): ("tracker", "varphi", None, float),
    ("obsmodel", "first_positives"): ("tracker", "n_first_positives", None, int),
    ("obsmodel", "negative_sampling"): ("tracker", "negative_sampling", None, NegativeSampling),
    ("obsmodel", "annulus_outer"): ("tracker", "annulus_outer", None, float),
    ("obsmodel", "proportional_sigma"): ("tracker", "proportional_sigma", None, float),
    ("obsmodel", "F_es"): ("tracker", "F_es", None, int),
    ("obsmodel", "F_rp"): ("tracker", "F_rp", None, int),
    ("obsmodel", "F_rn"): ("tracker", "F_rn", None, int),
    ("obsmodel", "N_ns"): ("tracker", "N_ns", None, int),
    ("obsmodel", "F_f"): ("tracker", "F_f", None, int),
    ("obsmodel", "F_et"): ("tracker", "F_et", None, int),
    ("obsmodel", "F_s"): ("tracker", "F_s", None, int),
    ("obsmodel", "upsilon"): ("tracker", "upsilon", None, float),
    ("obsmodel", "lambda"): ("tracker", "lam", None, float),
    ("pfilter", "particles"): ("tracker", "n_particles", None, int),
    ("pfilter", "q_x"): ("tracker", "variances", 0, float),
    ("pfilter", "q_y"): ("tracker", "variances", 1, float),
    ("pfilter", "q_scale"): ("tracker", "variances", 2, float),
    ("pfilter", "q_aspect"): ("tracker", "variances", 3, float),
    ("tracker", "debug"): ("tracker", "debug", None, _bool),
}
SECTIONS = tuple(dict.fromkeys(section for section, _ in _SCHEMA))


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse INI text into a validated :py:class:`RunConfig`."""
    parser = configparser.ConfigParser(interpolation=None)
    # Keys such as ``F_es`` are case-sensitive.
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise FormatError("config-malformed", f"{source}: {e}", offset=getattr(e, "lineno", None))

    groups: dict[str, dict[str, Any]] = {"run": {}, "dataset": {}, "tracker": {}}
    defaults = TrackerConfig()
    for section in parser.sections():
        if section not in SECTIONS:
            raise FormatError("config-unknown-key", f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            entry = _SCHEMA.get((section, key))
            if entry is None:
                raise FormatError("config-unknown-key", f"{source}: unknown key {section}.{key}")
            group, name, index, convert = entry
            try:
                value = convert(raw.strip())
            except ValueError as e:
                raise FormatError("config-bad-value", f"{source}: {section}.{key}: {e}")
            if index is not None:
                current = list(groups[group].get(name, getattr(defaults, name)))
                current[index] = value
                value = tuple(current)
            groups[group][name] = value

    return RunConfig(
        tracker=TrackerConfig(**groups["tracker"]),
        dataset=DatasetConfig(**groups["dataset"]),
        **groups["run"],
    )


def load_config(path: os.PathLike | str | None) -> RunConfig:
    """Load a configuration file, or the defaults when ``path`` is ``None``."""
    if path is None:
        return RunConfig()
    p = Path(os.path.expanduser(path))
    if not p.exists():
        raise FileNotFoundError(str(p))
    return parse_config(p.read_text(), source=str(p))


def with_overrides(config: RunConfig, **tracker_fields: Any) -> RunConfig:
    """Replace tracker fields, ignoring those set to ``None``."""
    changes = {k: v for k, v in tracker_fields.items() if v is not None}
    if not changes:
        return config
    return dataclasses.replace(config, tracker=dataclasses.replace(config.tracker, **changes))
