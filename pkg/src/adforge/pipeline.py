"""End-to-end orchestration: keyframe detection, corner confirmation,
tracking, warping, blending, and reporting — plus a deterministic
synthetic scene generator used by the test suite, CLI and service
fixtures.

Workflow: the first sampled frame whose detector score clears the
recognition cutoff becomes the keyframe; its localized (or manually
overridden) quad anchors a homography from the advert rectangle.  From
the keyframe forward, the tracker advances the quad frame by frame and
every frame is composited independently.  Frames before the keyframe
pass through untouched; after a tracking loss the remaining frames pass
through and the loss is recorded in the report.
"""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import detector as detector_mod
from . import kernels
from .compositor import (
    Advert,
    BlendConfig,
    clamp_frame,
    direct_composite,
    poisson_blend,
    warp_advert,
)
from .errors import EmptyOmega, NoBillboardFound, OmegaTouchesBorder, QuadOutOfBounds, TrackingLost
from .geometry import (
    Quad,
    estimate_homography,
    invert_homography,
    normalize_homography,
    project_points,
)
from .imagecore import to_grayscale
from .maskops import localize_quad, mask_interior, rasterize_quad
from .tracker import TrackParams, init_state, update_quad
from .videoio import write_png

STATUS_PASSTHROUGH = "passthrough"
STATUS_RENDERED = "rendered"
STATUS_LOST = "lost-passthrough"

TERMINATION_COMPLETED = "completed"

# The gradient blend reads source values one pixel outside the region it
# solves on, and its boundary conditions come from the pixels ringing that
# region.  Insetting the region by a few pixels keeps both on pixels the
# advert fully covers: the guidance ring stays on real (unclamped) advert
# samples and the Dirichlet ring on pixels free of background mixing from
# the quad's antialiased rim, which would otherwise tint the whole blend.
BLEND_INTERIOR_MARGIN = 3


def _blend_region(omega: np.ndarray) -> np.ndarray:
    region = omega
    for _ in range(BLEND_INTERIOR_MARGIN):
        region = mask_interior(region)
    return region


@dataclass(frozen=True)
class JobConfig:
    """Everything one render run needs, fully in memory.

    frames is the decoded video; file handling belongs to the caller
    (CLI/service).  corners_override, when present, supersedes detection
    entirely: (frame_index, Quad) plays the role of operator-confirmed
    corners.  min_area is in pixels (None = 0.1% of the frame).
    """

    frames: Sequence[np.ndarray]
    advert: Advert | None = None
    detector: detector_mod.DetectorSource | None = None
    stride: int = 10
    recognition_cutoff: float = 0.5
    threshold: float = 0.5
    min_area: float | None = None
    corners_override: tuple[int, Quad] | None = None
    blend: BlendConfig = field(default_factory=BlendConfig)
    track: TrackParams = field(default_factory=TrackParams)

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        if not 0.0 <= self.recognition_cutoff <= 1.0:
            raise ValueError("recognition_cutoff must be in [0, 1]")
        if self.detector is None and self.corners_override is None:
            raise ValueError("need a detector or a corners override")


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int
    status: str  # passthrough | rendered | lost-passthrough
    corners: list | None = None
    alive_features: int = 0
    max_inlier_error: float = 0.0
    blend_residual: float = 0.0


@dataclass(frozen=True)
class RenderReport:
    keyframe_index: int
    frames_rendered: int
    termination: str
    entries: list


@dataclass(frozen=True)
class RenderResult:
    frames: list
    report: RenderReport


def detect_keyframe(cfg: JobConfig) -> tuple[int, Quad]:
    """Scan frames at the configured stride; localize the first frame
    whose recognition score clears the cutoff."""
    if cfg.detector is None:
        raise ValueError("detect_keyframe needs a detector")
    for i in range(0, len(cfg.frames), cfg.stride):
        score = detector_mod.recognize(cfg.detector, i, cfg.frames[i])
        if score >= cfg.recognition_cutoff:
            heatmap = detector_mod.localize(cfg.detector, i, cfg.frames[i])
            return i, localize_quad(heatmap, cfg.threshold, cfg.min_area)
    raise NoBillboardFound(
        f"no sampled frame scored >= {cfg.recognition_cutoff} (stride {cfg.stride})"
    )


def run_job(cfg: JobConfig, on_frame: Callable[[int, np.ndarray], None] | None = None):
    """Render the full video.  Returns RenderResult(frames, report);
    on_frame, when given, receives each emitted frame in order."""
    frames = list(cfg.frames)
    if not frames:
        raise NoBillboardFound("video has no frames")
    if cfg.advert is None:
        raise ValueError("run_job needs an advert to composite")
    height, width = frames[0].shape[:2]

    if cfg.corners_override is not None:
        keyframe_index, quad = cfg.corners_override
        if not 0 <= keyframe_index < len(frames):
            raise ValueError(f"corners override frame {keyframe_index} out of range")
    else:
        keyframe_index, quad = detect_keyframe(cfg)

    h_key = estimate_homography(cfg.advert.source_quad.corners, quad.corners)
    state = init_state(to_grayscale(frames[keyframe_index]), quad, keyframe_index, cfg.track)

    out_frames: list[np.ndarray] = []
    entries: list[FrameRecord] = []
    rendered = 0
    termination = TERMINATION_COMPLETED

    def emit(index: int, frame: np.ndarray, record: FrameRecord) -> None:
        out_frames.append(frame)
        entries.append(record)
        if on_frame is not None:
            on_frame(index, frame)

    for i in range(keyframe_index):
        emit(i, frames[i], FrameRecord(frame_index=i, status=STATUS_PASSTHROUGH))

    lost = False
    for i in range(keyframe_index, len(frames)):
        if not lost and i > keyframe_index:
            try:
                state = update_quad(frames[i - 1], frames[i], state, cfg.track)
            except TrackingLost as exc:
                lost = True
                termination = f"tracking lost at frame {i}: {exc}"
        if lost:
            emit(i, frames[i], FrameRecord(frame_index=i, status=STATUS_LOST))
            continue
        h_frame = normalize_homography(state.cumulative_homography @ h_key)
        try:
            warped, omega = warp_advert(cfg.advert, h_frame, width, height)
            if cfg.blend.mode == "poisson":
                blend = poisson_blend(frames[i], warped, _blend_region(omega), cfg.blend)
                composite, residual = blend.frame, blend.residual
            else:
                composite, residual = direct_composite(frames[i], warped, omega), 0.0
        except (EmptyOmega, OmegaTouchesBorder) as exc:
            lost = True
            termination = f"render region left the frame at frame {i}: {exc}"
            emit(i, frames[i], FrameRecord(frame_index=i, status=STATUS_LOST))
            continue
        rendered += 1
        emit(
            i,
            clamp_frame(composite),
            FrameRecord(
                frame_index=i,
                status=STATUS_RENDERED,
                corners=state.quad.as_list(),
                alive_features=state.alive_count,
                max_inlier_error=state.max_inlier_error,
                blend_residual=residual,
            ),
        )

    report = RenderReport(
        keyframe_index=keyframe_index,
        frames_rendered=rendered,
        termination=termination,
        entries=entries,
    )
    return RenderResult(frames=out_frames, report=report)


def report_to_dict(report: RenderReport) -> dict:
    return {
        "keyframe_index": report.keyframe_index,
        "frames_rendered": report.frames_rendered,
        "termination": report.termination,
        "frames": [
            {
                "frame_index": e.frame_index,
                "status": e.status,
                "corners": e.corners,
                "alive_features": e.alive_features,
                "max_inlier_error": e.max_inlier_error,
                "blend_residual": e.blend_residual,
            }
            for e in report.entries
        ],
    }


# --------------------------------------------------------------------------
# Synthetic scenes: a reproducible stand-in for real footage.


@dataclass(frozen=True)
class SceneSpec:
    """Deterministic test scene: a textured billboard over a textured
    background, moved by per-frame homographies (frame t maps the
    frame-0 plane to frame t; entry 0 is the identity)."""

    width: int = 320
    height: int = 240
    frame_count: int = 60
    seed: int = 0
    quad: Quad | None = None  # default: centered rectangle
    motions: Sequence[np.ndarray] | None = None  # default: all identity
    margin: float = 12.0
    billboard_color: tuple[float, float, float] = (0.20, 0.62, 0.32)
    background_color: tuple[float, float, float] = (0.62, 0.45, 0.50)
    texture_amplitude: float = 0.14
    billboard_size: tuple[int, int] = (120, 72)  # advert-plane resolution (w, h)
    supersample: int = 4  # sub-rays per pixel axis when rendering the billboard


@dataclass(frozen=True)
class SyntheticScene:
    frames: list
    quads: list  # ground-truth Quad per frame
    heatmaps: list  # rasterized ground truth at 0.95 / 0.05
    billboard: Advert  # the billboard's own content (self-insertion tests)


def default_scene_quad(width: int, height: int) -> Quad:
    """A centered axis-aligned rectangle covering ~1/4 of the frame."""
    w4, h4 = width / 4.0, height / 4.0
    return Quad(
        [
            [w4, h4],
            [width - w4, h4],
            [width - w4, height - h4],
            [w4, height - h4],
        ]
    )


def drift_motions(
    frame_count: int,
    dx: float = 0.0,
    dy: float = 0.0,
    px: float = 0.0,
    py: float = 0.0,
) -> list[np.ndarray]:
    """Per-frame homographies for a steady translation plus a mild
    projective drift: H_t = [[1,0,dx*t],[0,1,dy*t],[px*t,py*t,1]]."""
    return [
        np.array([[1.0, 0.0, dx * t], [0.0, 1.0, dy * t], [px * t, py * t, 1.0]])
        for t in range(frame_count)
    ]


def _smooth_noise(rng: np.random.Generator, height: int, width: int, step: int) -> np.ndarray:
    """Multi-octave band-limited noise in [0,1]: coarse random grids at
    three scales, bilinearly upsampled, blended and lightly blurred.
    The coarse octaves keep gradient energy alive at every pyramid
    level, which the tracker needs."""
    from . import kernels
    from .imagecore import _binomial_smooth

    ys, xs = np.mgrid[0:height, 0:width]
    xs = xs.ravel().astype(np.float64)
    ys = ys.ravel().astype(np.float64)
    values = np.full(height * width, 0.5)
    for octave_step, weight in ((step, 0.40), (step * 3, 0.35), (step * 8, 0.25)):
        gh = height // octave_step + 2
        gw = width // octave_step + 2
        grid = rng.random((gh, gw))
        values += weight * (
            kernels.bilinear_many(grid, xs / octave_step, ys / octave_step) - 0.5
        )
    return _binomial_smooth(values.reshape(height, width))


def _textured_plane(
    rng: np.random.Generator,
    height: int,
    width: int,
    base: tuple[float, float, float],
    amplitude: float,
    step: int,
) -> np.ndarray:
    noise = _smooth_noise(rng, height, width, step) - 0.5
    frame = np.empty((height, width, 3))
    for c in range(3):
        frame[:, :, c] = base[c] + amplitude * noise
    return np.clip(frame, 0.0, 1.0)


def _render_billboard(
    background: np.ndarray,
    advert: Advert,
    h: np.ndarray,
    supersample: int,
) -> np.ndarray:
    """Composite the advert onto the background under homography ``h``
    with area-averaged sampling: each output pixel is the mean of
    supersample² sub-rays.

    Point-sampled warping makes the rendered texture's effective blur
    depend on the sub-pixel phase of the motion, which reads as spurious
    apparent displacement to a tracker; area averaging makes appearance
    vary smoothly with motion, as real footage does.  Edge pixels get a
    coverage-weighted mix of advert and background (soft edges)."""
    height, width = background.shape[:2]
    ah, aw = advert.image.shape[:2]
    h_inv = invert_homography(h)
    dest = project_points(h, advert.source_quad.corners)
    x0 = max(int(np.floor(dest[:, 0].min())) - 1, 0)
    x1 = min(int(np.ceil(dest[:, 0].max())) + 1, width - 1)
    y0 = max(int(np.floor(dest[:, 1].min())) - 1, 0)
    y1 = min(int(np.ceil(dest[:, 1].max())) + 1, height - 1)
    if x1 < x0 or y1 < y0:
        return background.copy()
    xs, ys = np.meshgrid(
        np.arange(x0, x1 + 1, dtype=np.float64),
        np.arange(y0, y1 + 1, dtype=np.float64),
    )
    shape = xs.shape
    offsets = (np.arange(supersample) + 0.5) / supersample - 0.5
    acc = np.zeros(shape + (3,))
    coverage = np.zeros(shape)
    channels = [np.ascontiguousarray(advert.image[:, :, c]) for c in range(3)]
    for oy in offsets:
        for ox in offsets:
            # Sub-rays cover the pixel's cell [ix, ix+1) x [iy, iy+1)
            # around its center (ix + 0.5, iy + 0.5).
            sx = (xs + 0.5 + ox).ravel()
            sy = (ys + 0.5 + oy).ravel()
            w = h_inv[2, 0] * sx + h_inv[2, 1] * sy + h_inv[2, 2]
            w = np.where(np.abs(w) < 1e-12, 1e-12, w)
            u = (h_inv[0, 0] * sx + h_inv[0, 1] * sy + h_inv[0, 2]) / w
            v = (h_inv[1, 0] * sx + h_inv[1, 1] * sy + h_inv[1, 2]) / w
            inside = (u >= 0.0) & (u <= aw) & (v >= 0.0) & (v <= ah)
            for c in range(3):
                sample = kernels.bilinear_many(channels[c], u - 0.5, v - 0.5)
                acc[:, :, c] += np.where(inside, sample, 0.0).reshape(shape)
            coverage += inside.reshape(shape).astype(np.float64)
    n = float(supersample * supersample)
    acc /= n
    coverage /= n
    out = background.copy()
    patch = out[y0 : y1 + 1, x0 : x1 + 1]
    out[y0 : y1 + 1, x0 : x1 + 1] = acc + (1.0 - coverage)[:, :, None] * patch
    return out


def generate_synthetic_scene(spec: SceneSpec) -> SyntheticScene:
    """Render the scene: background + billboard content warped by each
    ground-truth homography, with matching 0.95/0.05 heatmaps.

    Raises QuadOutOfBounds if any ground-truth corner comes within
    spec.margin of the frame border.
    """
    rng = np.random.default_rng(spec.seed)
    quad0 = spec.quad if spec.quad is not None else default_scene_quad(spec.width, spec.height)
    motions = (
        list(spec.motions)
        if spec.motions is not None
        else [np.eye(3) for _ in range(spec.frame_count)]
    )
    if len(motions) != spec.frame_count:
        raise ValueError(f"need {spec.frame_count} motion entries, got {len(motions)}")

    background = _textured_plane(
        rng, spec.height, spec.width, spec.background_color, spec.texture_amplitude, step=9
    )
    bw, bh = spec.billboard_size
    billboard_image = _textured_plane(
        rng, bh, bw, spec.billboard_color, spec.texture_amplitude, step=5
    )
    billboard = Advert(image=billboard_image)
    h_board = estimate_homography(billboard.source_quad.corners, quad0.corners)

    frames = []
    quads = []
    heatmaps = []
    lo_x, hi_x = spec.margin, spec.width - 1 - spec.margin
    lo_y, hi_y = spec.margin, spec.height - 1 - spec.margin
    for t, motion in enumerate(motions):
        corners = project_points(motion, quad0.corners)
        if (
            corners[:, 0].min() < lo_x
            or corners[:, 0].max() > hi_x
            or corners[:, 1].min() < lo_y
            or corners[:, 1].max() > hi_y
        ):
            raise QuadOutOfBounds(
                f"frame {t}: ground-truth quad leaves the {spec.margin}px safe margin"
            )
        quad_t = Quad(corners)
        h_t = normalize_homography(motion @ h_board)
        frames.append(_render_billboard(background, billboard, h_t, spec.supersample))
        quads.append(quad_t)
        omega = rasterize_quad(quad_t, spec.width, spec.height)
        heatmaps.append(np.where(omega, 0.95, 0.05))
    return SyntheticScene(frames=frames, quads=quads, heatmaps=heatmaps, billboard=billboard)


def save_scene(scene: SyntheticScene, directory, heatmap_stem: str = "heatmap") -> None:
    """Write scene frames as a PNG sequence plus heatmap PGMs (the
    fixture layout the CLI and service tests consume)."""
    from pathlib import Path

    from .detector import save_heatmap_pgm

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(scene.frames):
        write_png(directory / f"frame_{i:06d}.png", frame)
    for i, hm in enumerate(scene.heatmaps):
        save_heatmap_pgm(directory / f"{heatmap_stem}_{i:06d}.pgm", hm)
