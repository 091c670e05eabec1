"""Command-line entry points.

Subcommands
-----------
``adforge detect``
    Scan a video for the billboard and write the keyframe corner file.
``adforge render``
    Replace the billboard with an advert image and write the output video
    plus an optional per-frame report.
``adforge synth``
    Generate a deterministic synthetic scene (frames, heatmaps, ground
    truth) from a small JSON description — the fixture generator used by
    the tests and the demo flow.
``adforge serve``
    Run the HTTP job service.

Videos are Y4M files (C444, full range) or directories holding a
``frame_%06d.png`` sequence; both are accepted wherever ``--video`` is.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .compositor import BLEND_MODES, Advert, BlendConfig
from .detector import ChromaBaseline, HeatmapFiles
from .errors import AdforgeError
from .geometry import Quad
from .pipeline import (
    JobConfig,
    SceneSpec,
    detect_keyframe,
    drift_motions,
    generate_synthetic_scene,
    report_to_dict,
    run_job,
    save_scene,
)
from .tracker import TrackParams
from .videoio import (
    read_corners_json,
    read_png,
    read_png_sequence,
    read_y4m,
    write_corners_json,
    write_png,
    write_y4m,
)


def _load_video(path_str: str) -> list[np.ndarray]:
    """Load a video: a .y4m file or a directory of frame_%06d.png files."""
    path = Path(path_str)
    if path.is_dir():
        return read_png_sequence(path)
    _, frames = read_y4m(path)
    return list(frames)


def _parse_color(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected R,G,B with three components")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad color component: {exc}") from exc
    if not all(0.0 <= v <= 1.0 for v in vals):
        raise argparse.ArgumentTypeError("color components must lie in [0, 1]")
    return vals  # type: ignore[return-value]


def _parse_frame_rate(text: str) -> tuple[int, int]:
    num, _, den = text.partition(":")
    try:
        rate = (int(num), int(den or "1"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad frame rate {text!r}") from exc
    if rate[0] < 1 or rate[1] < 1:
        raise argparse.ArgumentTypeError("frame rate parts must be positive")
    return rate


def _add_detector_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("detector")
    group.add_argument("--heatmap-dir", help="directory of per-frame heatmap PGMs")
    group.add_argument(
        "--heatmap-stem", default="heatmap", help="heatmap filename stem (default: heatmap)"
    )
    group.add_argument(
        "--baseline-color",
        type=_parse_color,
        default=(0.0, 1.0, 0.0),
        metavar="R,G,B",
        help="chroma detector reference color in [0,1] (used when no --heatmap-dir)",
    )
    group.add_argument(
        "--baseline-sigma", type=float, default=0.1, help="chroma detector color tolerance"
    )
    group.add_argument(
        "--threshold", type=float, default=0.5, help="heatmap binarization threshold"
    )
    group.add_argument(
        "--stride", type=int, default=10, help="frame stride while scanning for the billboard"
    )
    group.add_argument(
        "--recognition-cutoff",
        type=float,
        default=0.5,
        help="minimum recognition score to accept a keyframe",
    )
    group.add_argument(
        "--min-area", type=float, default=None, help="minimum billboard region area in pixels"
    )


def _detector_from_args(args: argparse.Namespace):
    if args.heatmap_dir:
        return HeatmapFiles(Path(args.heatmap_dir), stem=args.heatmap_stem)
    return ChromaBaseline(color=args.baseline_color, sigma=args.baseline_sigma)


def _add_klt_args(parser: argparse.ArgumentParser) -> None:
    d = TrackParams()
    group = parser.add_argument_group("tracker")
    group.add_argument("--klt-window", type=int, default=d.window)
    group.add_argument("--klt-levels", type=int, default=d.pyramid_levels)
    group.add_argument("--klt-max-iters", type=int, default=d.max_iterations)
    group.add_argument("--klt-epsilon", type=float, default=d.convergence_epsilon)
    group.add_argument("--klt-min-eig", type=float, default=d.min_eigenvalue)
    group.add_argument("--klt-max-features", type=int, default=d.max_features)
    group.add_argument("--klt-quality", type=float, default=d.feature_quality)
    group.add_argument("--klt-min-distance", type=float, default=d.min_feature_distance)
    group.add_argument("--klt-inlier-threshold", type=float, default=d.reprojection_inlier_threshold)


def _track_from_args(args: argparse.Namespace) -> TrackParams:
    return TrackParams(
        window=args.klt_window,
        pyramid_levels=args.klt_levels,
        max_iterations=args.klt_max_iters,
        convergence_epsilon=args.klt_epsilon,
        min_eigenvalue=args.klt_min_eig,
        max_features=args.klt_max_features,
        feature_quality=args.klt_quality,
        min_feature_distance=args.klt_min_distance,
        reprojection_inlier_threshold=args.klt_inlier_threshold,
    )


def cmd_detect(args: argparse.Namespace) -> int:
    frames = _load_video(args.video)
    cfg = JobConfig(
        frames=frames,
        detector=_detector_from_args(args),
        stride=args.stride,
        recognition_cutoff=args.recognition_cutoff,
        threshold=args.threshold,
        min_area=args.min_area,
    )
    frame_index, quad = detect_keyframe(cfg)
    write_corners_json(args.out, frame_index, quad)
    print(f"detected billboard at frame {frame_index}; corners written to {args.out}")
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    frames = _load_video(args.video)
    advert = Advert(read_png(args.advert))
    frame_index, quad = read_corners_json(args.corners)
    cfg = JobConfig(
        frames=frames,
        advert=advert,
        corners_override=(frame_index, quad),
        blend=BlendConfig(
            mode=args.blend,
            solver_tolerance=args.solver_tol,
            max_iterations=args.solver_max_iters,
        ),
        track=_track_from_args(args),
    )
    result = run_job(cfg)
    write_y4m(args.out, result.frames, frame_rate=args.frame_rate)
    if args.report:
        Path(args.report).write_text(json.dumps(report_to_dict(result.report), indent=2))
    print(
        f"wrote {len(result.frames)} frames to {args.out} "
        f"({result.report.frames_rendered} rendered, termination: {result.report.termination})"
    )
    return 0


def _scene_spec_from_json(payload: dict) -> SceneSpec:
    """Build a SceneSpec from the synth JSON description.

    Recognized keys (all optional): width, height, frame_count, seed,
    margin, texture_amplitude, supersample, billboard_color [r,g,b],
    background_color [r,g,b], billboard_size [w,h], quad [[x,y]*4],
    and either motions [[3x3]*frame_count] or
    drift {dx, dy, px, py} applied per frame.
    """
    if not isinstance(payload, dict):
        raise ValueError("scene description must be a JSON object")
    kwargs: dict = {}
    for key in ("width", "height", "frame_count", "seed", "supersample"):
        if key in payload:
            kwargs[key] = int(payload[key])
    for key in ("margin", "texture_amplitude"):
        if key in payload:
            kwargs[key] = float(payload[key])
    for key in ("billboard_color", "background_color"):
        if key in payload:
            value = tuple(float(v) for v in payload[key])
            if len(value) != 3:
                raise ValueError(f"{key} must have three components")
            kwargs[key] = value
    if "billboard_size" in payload:
        w, h = payload["billboard_size"]
        kwargs["billboard_size"] = (int(w), int(h))
    if "quad" in payload:
        kwargs["quad"] = Quad(np.asarray(payload["quad"], dtype=np.float64))
    if "motions" in payload and "drift" in payload:
        raise ValueError("give either motions or drift, not both")
    frame_count = kwargs.get("frame_count", SceneSpec.frame_count)
    if "motions" in payload:
        kwargs["motions"] = [np.asarray(m, dtype=np.float64) for m in payload["motions"]]
    elif "drift" in payload:
        drift = payload["drift"]
        kwargs["motions"] = drift_motions(
            frame_count,
            dx=float(drift.get("dx", 0.0)),
            dy=float(drift.get("dy", 0.0)),
            px=float(drift.get("px", 0.0)),
            py=float(drift.get("py", 0.0)),
        )
    return SceneSpec(**kwargs)


def cmd_synth(args: argparse.Namespace) -> int:
    payload = json.loads(Path(args.spec).read_text())
    spec = _scene_spec_from_json(payload)
    scene = generate_synthetic_scene(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_scene(scene, out_dir)
    write_y4m(out_dir / "scene.y4m", scene.frames, frame_rate=args.frame_rate)
    write_png(out_dir / "advert.png", scene.billboard.image)
    write_corners_json(out_dir / "corners.json", 0, scene.quads[0])
    quads_payload = {"quads": [quad.corners.tolist() for quad in scene.quads]}
    (out_dir / "quads.json").write_text(json.dumps(quads_payload, indent=2))
    print(
        f"wrote {len(scene.frames)} frames ({spec.width}x{spec.height}) to {out_dir} "
        "(PNG sequence, heatmaps, scene.y4m, advert.png, corners.json, quads.json)"
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        videos_dir=args.videos_dir,
        adverts_dir=args.adverts_dir,
        retention_seconds=args.retention_seconds,
        frame_rate=args.frame_rate,
        detector_color=args.baseline_color,
        detector_sigma=args.baseline_sigma,
    )
    uvicorn.run(create_app(config), host=args.host, port=args.port, log_level="info")
    return 0


def _env(name: str, default):
    return os.environ.get(name, default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="locate the billboard and write its corners")
    p_detect.add_argument("--video", required=True, help=".y4m file or PNG-sequence directory")
    _add_detector_args(p_detect)
    p_detect.add_argument("--out", required=True, help="output corner JSON path")
    p_detect.set_defaults(func=cmd_detect)

    p_render = sub.add_parser("render", help="composite an advert over the tracked billboard")
    p_render.add_argument("--video", required=True, help=".y4m file or PNG-sequence directory")
    p_render.add_argument("--advert", required=True, help="advert PNG")
    p_render.add_argument("--corners", required=True, help="keyframe corner JSON")
    p_render.add_argument("--blend", choices=sorted(BLEND_MODES), default="poisson")
    p_render.add_argument("--solver-tol", type=float, default=BlendConfig.solver_tolerance)
    p_render.add_argument("--solver-max-iters", type=int, default=BlendConfig.max_iterations)
    _add_klt_args(p_render)
    p_render.add_argument(
        "--frame-rate", type=_parse_frame_rate, default=(30, 1), metavar="NUM[:DEN]"
    )
    p_render.add_argument("--out", required=True, help="output .y4m path")
    p_render.add_argument("--report", help="optional per-frame report JSON path")
    p_render.set_defaults(func=cmd_render)

    p_synth = sub.add_parser("synth", help="generate a synthetic scene fixture")
    p_synth.add_argument("--spec", required=True, help="scene description JSON")
    p_synth.add_argument("--out-dir", required=True, help="output directory")
    p_synth.add_argument(
        "--frame-rate", type=_parse_frame_rate, default=(30, 1), metavar="NUM[:DEN]"
    )
    p_synth.set_defaults(func=cmd_synth)

    p_serve = sub.add_parser("serve", help="run the HTTP job service")
    p_serve.add_argument(
        "--videos-dir",
        default=_env("ADFORGE_VIDEOS_DIR", "videos"),
        help="directory of .y4m source videos (env: ADFORGE_VIDEOS_DIR)",
    )
    p_serve.add_argument(
        "--adverts-dir",
        default=_env("ADFORGE_ADVERTS_DIR", "adverts"),
        help="directory of advert PNGs (env: ADFORGE_ADVERTS_DIR)",
    )
    p_serve.add_argument(
        "--host", default=_env("ADFORGE_HOST", "127.0.0.1"), help="listen address (env: ADFORGE_HOST)"
    )
    p_serve.add_argument(
        "--port", type=int, default=int(_env("ADFORGE_PORT", "8008")), help="listen port (env: ADFORGE_PORT)"
    )
    p_serve.add_argument(
        "--retention-seconds",
        type=float,
        default=float(_env("ADFORGE_RETENTION_SECONDS", "3600")),
        help="how long finished results stay downloadable (env: ADFORGE_RETENTION_SECONDS)",
    )
    p_serve.add_argument(
        "--baseline-color",
        type=_parse_color,
        default=_parse_color(_env("ADFORGE_BASELINE_COLOR", "0,1,0")),
        metavar="R,G,B",
        help="default chroma detector color (env: ADFORGE_BASELINE_COLOR)",
    )
    p_serve.add_argument(
        "--baseline-sigma",
        type=float,
        default=float(_env("ADFORGE_BASELINE_SIGMA", "0.1")),
        help="default chroma detector tolerance (env: ADFORGE_BASELINE_SIGMA)",
    )
    p_serve.add_argument(
        "--frame-rate", type=_parse_frame_rate, default=(30, 1), metavar="NUM[:DEN]"
    )
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (AdforgeError, ValueError, OSError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
