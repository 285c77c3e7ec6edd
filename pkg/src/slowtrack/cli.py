# Copyright (c) 2025, slowtrack developers.
# SPDX-License-Identifier: BSD-3-Clause
"""
Command Line Interface
======================

.. code-block:: sh

    slowtrack collect seqs/street seqs/park --out l1.sltk
    slowtrack collect --synthetic --edge 14 --out l2.sltk
    slowtrack train --layer 1 --sessions l1.sltk --out layer1.slwt
    slowtrack train --layer 2 --sessions l2.sltk --layer1 layer1.slwt --out layer2.slwt
    slowtrack visualize --layer1 layer1.slwt --layer2 layer2.slwt --out stimuli/
    slowtrack track seqs/car --box 120,64,40,30 --layer1 layer1.slwt \\
        --layer2 layer2.slwt --trials 5 --jobs 5 --out runs/car
    slowtrack eval runs/car --gt seqs/car/groundtruth.txt --trials 5 --out reports/car

Errors are reported on one line as ``error: <code>: <message>`` with the exit status of
:py:class:`~slowtrack.kernels.lib.ExitStatus`.

"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Sequence, TypeVar

from . import dataset, evaluation, slowae, stack, tracker, viz
from .config import RunConfig, load_config, with_overrides
from .kernels import __version__
from .kernels.lib import ExitStatus, InvalidInputError, SlowTrackError
from .utils import derived_generator

__all__ = ["main", "build_parser"]

_logger = logging.getLogger(__name__)

_R = TypeVar("_R")


def _box(text: str) -> tuple[float, float, float, float]:
    fields = text.replace(" ", "").split(",")
    if len(fields) != 4:
        raise argparse.ArgumentTypeError(f"expecting x,y,w,h, got {text!r}")
    try:
        x, y, w, h = (float(f) for f in fields)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expecting numbers, got {text!r}")
    return x, y, w, h


def _pool_map(fn: Callable[..., _R], jobs: int, *iterables: Sequence[Any]) -> list[_R]:
    """Run independent commands in worker processes, or inline for a single job."""
    if jobs <= 1:
        return [fn(*args) for args in zip(*iterables)]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(fn, *iterables))


def _split_sessions(total: int, n_parts: int) -> list[int]:
    base, extra = divmod(total, n_parts)
    return [base + (1 if i < extra else 0) for i in range(n_parts)]


def _collect_one(
    directory: str, count: int, edge: int, config: RunConfig, seed: int
) -> list[dataset.TrackSession]:
    frames = dataset.load_sequence(directory)
    ds = config.dataset
    mask = dataset.accumulate_difference_mask(frames, ds.threshold, ds.min_component_area)
    return dataset.sample_track_sessions(
        frames,
        mask,
        edge,
        count,
        config.tracker.n_frames,
        seed,
        search_radius=ds.search_radius,
        source=Path(directory).name,
    )


def cmd_collect(args: argparse.Namespace, config: RunConfig) -> int:
    edge = args.edge if args.edge is not None else config.tracker.edge1
    total = args.sessions if args.sessions is not None else config.tracker.n_sessions
    fraction = args.shuffle_fraction
    if fraction is None:
        fraction = config.dataset.shuffle_fraction
    rng = derived_generator(config.seed, 0)

    if args.synthetic:
        bases = dataset.edge_patches(edge, total, rng)
        sessions = dataset.generate_synthetic_sessions(
            bases, config.tracker.n_frames, config.dataset.max_shift, config.dataset.max_rotation, rng
        )
        sessions = dataset.standardize_sessions(sessions)
    else:
        if not args.sequences:
            raise InvalidInputError("missing-sequences", "Give sequence directories or --synthetic.")
        counts = _split_sessions(total, len(args.sequences))
        seeds = [config.seed ^ (i + 1) for i in range(len(args.sequences))]
        n = len(counts)
        parts = _pool_map(
            _collect_one, args.jobs, args.sequences, counts, [edge] * n, [config] * n, seeds
        )
        sessions = [s for part in parts for s in part]
    if fraction > 0:
        sessions = dataset.shuffle_sessions(sessions, fraction, rng)
    dataset.export_sessions(sessions, args.out)
    _logger.info("Wrote %d sessions of edge %d to %s", len(sessions), edge, args.out)
    return ExitStatus.SUCCESS


def _layer1_path(args: argparse.Namespace, config: RunConfig) -> Path | None:
    path = getattr(args, "layer1", None) or config.layer1_weights
    return None if path is None else Path(path)


def _load_layer1(args: argparse.Namespace, config: RunConfig) -> slowae.LayerWeights:
    path = _layer1_path(args, config)
    if path is None or not path.exists():
        raise SlowTrackError(
            "layer1-weights-missing",
            "Layer-1 weights are required, train layer 1 first"
            + ("" if path is None else f" ({path} does not exist)."),
        )
    return slowae.load_weights(path)


def _load_model(args: argparse.Namespace, config: RunConfig) -> stack.StackedModel:
    layer1 = _load_layer1(args, config)
    path = args.layer2 or config.layer2_weights
    if path is None or not Path(path).exists():
        raise SlowTrackError("layer2-weights-missing", "Layer-2 weights are required.")
    layer2 = slowae.load_weights(path)
    return stack.StackedModel(layer1, layer2, config.tracker.k1, config.tracker.k2)


def cmd_train(args: argparse.Namespace, config: RunConfig) -> int:
    layer = args.layer
    if layer == 1:
        config = with_overrides(
            config,
            alpha=None if args.alpha is None else (args.alpha, config.tracker.alpha[1]),
            gamma=None if args.gamma is None else (args.gamma, config.tracker.gamma[1]),
        )
    else:
        config = with_overrides(
            config,
            alpha=None if args.alpha is None else (config.tracker.alpha[0], args.alpha),
            gamma=None if args.gamma is None else (config.tracker.gamma[0], args.gamma),
        )
    cfg = config.tracker
    layer1 = _load_layer1(args, config) if layer == 2 else None
    sessions = dataset.import_sessions(args.sessions)
    if not sessions:
        raise InvalidInputError("empty-dataset", f"{args.sessions} holds no session.")
    edge = cfg.edge1 if layer == 1 else cfg.edge2
    if sessions[0].edge != edge:
        raise InvalidInputError(
            "geometry-mismatch",
            f"Layer {layer} expects {edge}x{edge} patches, sessions have edge {sessions[0].edge}.",
        )
    if layer1 is not None:
        sessions = stack.layer2_training_vectors(sessions, layer1, cfg.k1)
    p = cfg.p1 if layer == 1 else cfg.p2
    result = slowae.fit_layer(
        sessions, p, cfg.cost_config(layer), cfg.optimizer, derived_generator(config.seed, layer), edge=edge
    )
    slowae.save_weights(result.weights, args.out)
    print(
        f"layer {layer}: cost {result.initial_cost:.6g} -> {result.final_cost:.6g} "
        f"in {result.n_iter} iterations ({result.status.value})"
    )
    return ExitStatus.SUCCESS


def cmd_visualize(args: argparse.Namespace, config: RunConfig) -> int:
    layer1 = _load_layer1(args, config)
    viz.render_grid(layer1, 1, args.pairs, args.theta_step, args.out)
    if args.layer2 is not None or config.layer2_weights is not None:
        model = _load_model(args, config)
        viz.render_grid(model, 2, args.pairs, args.theta_step, args.out)
    return ExitStatus.SUCCESS


def _track_trial(
    sequence: str,
    box: tuple[float, float, float, float],
    config: RunConfig,
    layer1: Path,
    layer2: Path,
    seed: int,
    out: Path,
    overlays: bool,
) -> None:
    model = stack.StackedModel(
        slowae.load_weights(layer1), slowae.load_weights(layer2), config.tracker.k1, config.tracker.k2
    )
    out.mkdir(parents=True, exist_ok=True)
    result = tracker.run(
        sequence,
        box,
        config.tracker,
        model,
        seed=seed,
        overlay_dir=out / "overlays" if overlays else None,
    )
    result.write_csv(out / "track.csv")
    result.write_timing(out / "timing.csv")


def cmd_track(args: argparse.Namespace, config: RunConfig) -> int:
    model = _load_model(args, config)
    seed = config.seed if args.seed is None else args.seed
    layer1 = _layer1_path(args, config)
    layer2 = Path(args.layer2 or config.layer2_weights)
    assert layer1 is not None
    out = Path(args.out)
    dirs = [out] if args.trials == 1 else [out / f"trial_{i:02}" for i in range(args.trials)]
    _logger.info("Tracking with %d features, %d trial(s)", model.n_features, args.trials)
    n = len(dirs)
    _pool_map(
        _track_trial,
        args.jobs,
        [args.sequence] * n,
        [args.box] * n,
        [config] * n,
        [layer1] * n,
        [layer2] * n,
        [seed + i for i in range(n)],
        dirs,
        [args.overlays] * n,
    )
    return ExitStatus.SUCCESS


def _find_tracks(paths: Sequence[str]) -> list[Path]:
    found: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            trials = sorted(p.glob("trial_*/track.csv"))
            found.extend(trials if trials else [p / "track.csv"])
        else:
            found.append(p)
    for f in found:
        if not f.exists():
            raise FileNotFoundError(str(f))
    return found


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    tracks = _find_tracks(args.results)
    if args.trials is not None and len(tracks) != args.trials:
        raise InvalidInputError(
            "trials-mismatch", f"Expecting {args.trials} trials, found {len(tracks)}."
        )
    gt = evaluation.load_ground_truth(args.gt)
    results = [evaluation.load_track_csv(t) for t in tracks]
    metrics = [evaluation.evaluate(r, gt) for r in results]
    selected = evaluation.median_trial(metrics)
    scores = evaluation.trial_scores(metrics)

    out = Path(args.out)
    evaluation.emit_report(results[selected], gt, out, args.name)
    with open(out / "summary.csv", "w", newline="") as fd:
        writer = csv.writer(fd, lineterminator="\n")
        writer.writerow(("trial", "path", "success_rate", "mean_col", "score", "selected"))
        for i, (t, m) in enumerate(zip(tracks, metrics)):
            writer.writerow(
                (i, str(t), f"{m.success_rate:.6f}", f"{m.mean_col:.6f}", f"{scores[i]:.6f}", int(i == selected))
            )
    m = metrics[selected]
    print(f"SR {m.success_rate:.1f} COL {m.mean_col:.2f} trial {selected}")
    return ExitStatus.SUCCESS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slowtrack",
        description="Slowness-regularized feature learning and particle-filter tracking.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG.")
    parser.add_argument("-c", "--config", default=None, help="INI configuration file.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="Collect tracked patch sessions.")
    p.add_argument("sequences", nargs="*", help="Directories of frames.")
    p.add_argument("--synthetic", action="store_true", help="Synthesize translating-edge sessions.")
    p.add_argument("--edge", type=int, default=None, help="Patch edge, layer-1 edge by default.")
    p.add_argument("--sessions", type=int, default=None, help="Number of sessions.")
    p.add_argument("--shuffle-fraction", type=float, default=None, help="Fraction of sessions with shuffled frames.")
    p.add_argument("--jobs", type=int, default=1, help="Sequences processed in parallel.")
    p.add_argument("--out", required=True, help="Output session file.")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train", help="Train one autoencoder layer.")
    p.add_argument("--layer", type=int, choices=(1, 2), required=True)
    p.add_argument("--sessions", required=True, help="Session file.")
    p.add_argument("--layer1", default=None, help="Layer-1 weights, required for layer 2.")
    p.add_argument("--alpha", type=float, default=None, help="Override the slowness weight.")
    p.add_argument("--gamma", type=float, default=None, help="Override the sparsity weight.")
    p.add_argument("--out", required=True, help="Output weight file.")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("visualize", help="Render optimal stimuli.")
    p.add_argument("--layer1", default=None)
    p.add_argument("--layer2", default=None)
    p.add_argument("--pairs", type=int, nargs="+", default=None, help="Pooled units to render.")
    p.add_argument("--theta-step", type=float, default=viz.DEFAULT_THETA_STEP, help="Phase step in degrees.")
    p.add_argument("--out", required=True, help="Output directory.")
    p.set_defaults(func=cmd_visualize)

    p = sub.add_parser("track", help="Track a target through a sequence.")
    p.add_argument("sequence", help="Directory of frames.")
    p.add_argument("--box", type=_box, required=True, help="Initial box as x,y,w,h.")
    p.add_argument("--layer1", default=None)
    p.add_argument("--layer2", default=None)
    p.add_argument("--seed", type=int, default=None, help="Seed of the first trial.")
    p.add_argument("--trials", type=int, default=1, help="Independent runs with consecutive seeds.")
    p.add_argument("--jobs", type=int, default=1, help="Trials run in parallel.")
    p.add_argument("--overlays", action="store_true", help="Write frames with the estimated box.")
    p.add_argument("--out", required=True, help="Output directory.")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="Evaluate tracking results.")
    p.add_argument("results", nargs="+", help="track.csv files or run directories.")
    p.add_argument("--gt", required=True, help="Ground truth, one x,y,w,h line per frame.")
    p.add_argument("--trials", type=int, default=None, help="Expected number of trials.")
    p.add_argument("--name", default="report", help="Report file stem.")
    p.add_argument("--out", required=True, help="Output directory.")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        return int(args.func(args, config))
    except SlowTrackError as e:
        print(f"error: {e.code}: {e.msg}", file=sys.stderr)
        return e.status
    except FileNotFoundError as e:
        print(f"error: file-missing: {e.filename or e}", file=sys.stderr)
        return ExitStatus.DATA_FORMAT


if __name__ == "__main__":
    sys.exit(main())
