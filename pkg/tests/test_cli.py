# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from slowtrack import dataset, slowae
from slowtrack.cli import main
from slowtrack.kernels.lib import ExitStatus

from .test_kernels.utils import moving_square

CONFIG = """
[run]
seed = 5

[dataset]
sessions = 40

[layer1]
units = 16

[layer2]
units = 16

[stack]
max_iter = 5

[obsmodel]
first_positives = 3
N_ns = 5

[pfilter]
particles = 50
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Config, trained weights and a short sequence with its ground truth."""
    root = tmp_path_factory.mktemp("cli")
    (root / "run.ini").write_text(CONFIG)
    ini = str(root / "run.ini")
    assert main(["-c", ini, "collect", "--synthetic", "--out", str(root / "l1.sltk")]) == 0
    assert main(
        ["-c", ini, "collect", "--synthetic", "--edge", "14", "--out", str(root / "l2.sltk")]
    ) == 0
    assert main(
        ["-c", ini, "train", "--layer", "1", "--sessions", str(root / "l1.sltk"),
         "--out", str(root / "layer1.slwt")]
    ) == 0
    assert main(
        ["-c", ini, "train", "--layer", "2", "--sessions", str(root / "l2.sltk"),
         "--layer1", str(root / "layer1.slwt"), "--out", str(root / "layer2.slwt")]
    ) == 0

    frames, boxes = moving_square(n_frames=10)
    seq = root / "seq"
    seq.mkdir()
    for i, f in enumerate(frames):
        Image.fromarray(np.round(f * 255).astype(np.uint8)).save(seq / f"{i:04}.png")
    (root / "gt.txt").write_text("".join(f"{x},{y},{w},{h}\n" for x, y, w, h in boxes))
    return root


def _track_args(root: Path, out: Path, *extra: str) -> list[str]:
    return [
        "-c", str(root / "run.ini"), "track", str(root / "seq"), "--box", "10,20,20,20",
        "--layer1", str(root / "layer1.slwt"), "--layer2", str(root / "layer2.slwt"),
        "--out", str(out), *extra,
    ]


def test_collect_and_train(workspace: Path) -> None:
    sessions = dataset.import_sessions(workspace / "l1.sltk")
    assert 0 < len(sessions) <= 40
    assert sessions[0].patches.shape == (5, 8, 8)

    layer1 = slowae.load_weights(workspace / "layer1.slwt")
    assert (layer1.n_units, layer1.dim, layer1.edge) == (16, 64, 8)
    assert layer1.config.alpha == 100.0
    layer2 = slowae.load_weights(workspace / "layer2.slwt")
    assert (layer2.n_units, layer2.dim, layer2.edge) == (16, 32, 14)
    assert layer2.config.alpha == 300.0


def test_collect_sequences(workspace: Path, tmp_path: Path) -> None:
    out = tmp_path / "seq.sltk"
    args = ["-c", str(workspace / "run.ini"), "collect", str(workspace / "seq"), "--sessions", "6"]
    assert main([*args, "--out", str(out)]) == 0
    sessions = dataset.import_sessions(out)
    assert 0 < len(sessions) <= 6
    assert all(s.source_id.startswith("seq@") for s in sessions)


def test_train_requires_layer1(workspace: Path, tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    status = main(
        ["train", "--layer", "2", "--sessions", str(workspace / "l2.sltk"),
         "--out", str(tmp_path / "layer2.slwt")]
    )
    assert status == ExitStatus.USAGE
    assert "error: layer1-weights-missing" in capsys.readouterr().err

    status = main(
        ["-c", str(workspace / "run.ini"), "train", "--layer", "1",
         "--sessions", str(workspace / "l2.sltk"), "--out", str(tmp_path / "x.slwt")]
    )
    assert status == ExitStatus.USAGE
    assert "error: geometry-mismatch" in capsys.readouterr().err


def test_visualize(workspace: Path, tmp_path: Path) -> None:
    args = [
        "visualize", "--layer1", str(workspace / "layer1.slwt"),
        "--layer2", str(workspace / "layer2.slwt"), "--pairs", "0", "1", "--out", str(tmp_path),
    ]
    assert main(["-c", str(workspace / "run.ini"), *args]) == 0
    assert (tmp_path / "stimuli_layer1.png").exists()
    assert (tmp_path / "stimuli_layer2.png").exists()


def test_track_is_deterministic(workspace: Path, tmp_path: Path) -> None:
    assert main(_track_args(workspace, tmp_path / "a", "--seed", "3")) == 0
    assert main(_track_args(workspace, tmp_path / "b", "--seed", "3")) == 0
    a = (tmp_path / "a" / "track.csv").read_bytes()
    assert a == (tmp_path / "b" / "track.csv").read_bytes()
    assert len(a.decode().splitlines()) == 11
    assert (tmp_path / "a" / "timing.csv").exists()


def test_track_and_eval(workspace: Path, tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    run = tmp_path / "run"
    assert main(_track_args(workspace, run, "--trials", "2", "--overlays")) == 0
    assert (run / "trial_00" / "track.csv").exists()
    assert len(list((run / "trial_01" / "overlays").iterdir())) == 10

    report = tmp_path / "report"
    status = main(
        ["eval", str(run), "--gt", str(workspace / "gt.txt"), "--trials", "2", "--out", str(report)]
    )
    assert status == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.startswith("SR ") and " COL " in line and " trial " in line
    assert (report / "report.csv").exists()
    assert (report / "report.png").exists()
    assert len((report / "summary.csv").read_text().splitlines()) == 3

    status = main(
        ["eval", str(run), "--gt", str(workspace / "gt.txt"), "--trials", "5", "--out", str(report)]
    )
    assert status == ExitStatus.USAGE


def test_errors(workspace: Path, tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    status = main(["train", "--layer", "1", "--sessions", str(tmp_path / "none.sltk"),
                   "--out", str(tmp_path / "w.slwt")])
    assert status == ExitStatus.DATA_FORMAT
    assert "error: file-missing" in capsys.readouterr().err

    bad = tmp_path / "bad.ini"
    bad.write_text("[pfilter]\nparticles = lots\n")
    status = main(["-c", str(bad), "collect", "--synthetic", "--out", str(tmp_path / "s.sltk")])
    assert status == ExitStatus.DATA_FORMAT
    assert "error: config-bad-value" in capsys.readouterr().err

    garbage = tmp_path / "garbage.slwt"
    garbage.write_bytes(b"nonsense")
    status = main(_track_args(workspace, tmp_path / "out")[:6] + [
        "--layer1", str(garbage), "--layer2", str(workspace / "layer2.slwt"), "--out", str(tmp_path / "o")
    ])
    assert status == ExitStatus.DATA_FORMAT
    assert "error: bad-magic" in capsys.readouterr().err

    with pytest.raises(SystemExit):
        main(["track", "seq", "--box", "1,2,3"])
