# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
from __future__ import annotations

from pathlib import Path

import pytest

from slowtrack.config import RunConfig, load_config, parse_config, with_overrides
from slowtrack.kernels.lib import FormatError, InvalidInputError
from slowtrack.obsmodel import NegativeSampling


def test_defaults() -> None:
    config = load_config(None)
    assert config == RunConfig()
    assert config.seed == 42
    assert config.tracker.n_particles == 1000
    assert config.tracker.variances == (4.0, 4.0, 1e-4, 1e-4)
    assert config.dataset.threshold == 0.1
    assert parse_config("") == RunConfig()


def test_parse() -> None:
    text = """
[run]
seed = 7

[dataset]
threshold = 0.2
sessions = 500
shuffle_fraction = 0.5

[layer1]
units = 32
weights = out/layer1.slwt

[layer2]
alpha = 250

[obsmodel]
F_es = 10
lambda = 0.01
negative_sampling = annular

[pfilter]
particles = 300
q_scale = 0.001

[tracker]
debug = yes
"""
    config = parse_config(text)
    assert config.seed == 7
    assert config.dataset.threshold == 0.2
    assert config.dataset.shuffle_fraction == 0.5
    assert config.tracker.n_sessions == 500
    assert config.tracker.p1 == 32
    assert config.layer1_weights == Path("out/layer1.slwt")
    assert config.layer2_weights is None
    assert config.tracker.alpha == (100.0, 250.0)
    assert config.tracker.F_es == 10
    assert config.tracker.lam == 0.01
    assert config.tracker.negative_sampling == NegativeSampling.ANNULAR
    assert config.tracker.n_particles == 300
    assert config.tracker.variances == (4.0, 4.0, 0.001, 1e-4)
    assert config.tracker.debug


def test_errors(tmp_path: Path) -> None:
    with pytest.raises(FormatError, match="config-unknown-key"):
        parse_config("[pfilter]\nparticle = 3\n")
    with pytest.raises(FormatError, match="config-unknown-key"):
        parse_config("[camera]\nfps = 3\n")
    with pytest.raises(FormatError, match="config-bad-value"):
        parse_config("[pfilter]\nparticles = many\n")
    with pytest.raises(FormatError, match="config-bad-value"):
        parse_config("[obsmodel]\nnegative_sampling = random\n")
    with pytest.raises(FormatError, match="config-malformed"):
        parse_config("particles = 3\n")
    with pytest.raises(InvalidInputError, match="invalid-n_particles"):
        parse_config("[pfilter]\nparticles = 0\n")
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.ini")

    path = tmp_path / "run.ini"
    path.write_text("[run]\nseed = 3\n")
    assert load_config(path).seed == 3


def test_with_overrides() -> None:
    config = RunConfig()
    assert with_overrides(config, n_particles=None) is config
    changed = with_overrides(config, n_particles=50, debug=True)
    assert changed.tracker.n_particles == 50
    assert changed.tracker.debug
    assert changed.seed == config.seed
