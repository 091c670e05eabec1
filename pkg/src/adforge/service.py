"""HTTP job service: video/advert catalogs, asynchronous billboard
detection, operator corner confirmation, and render jobs with polled
progress.

Job lifecycle: created -> detecting -> detected -> corners_confirmed ->
rendering -> done | failed (detection may also fail).  Corners may be
re-confirmed any number of times until rendering starts.  Each job is
advanced by a single worker thread; state changes go through one guarded
transition helper, so no call sequence can produce an illegal move.

Results are kept in memory and expire after a configurable retention
window, after which the result download returns 410.
"""

from __future__ import annotations

import dataclasses
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, ConfigDict, Field

from .compositor import BLEND_MODES, Advert, BlendConfig
from .detector import ChromaBaseline
from .errors import AdforgeError, NoBillboardFound, NotConvex
from .geometry import Quad, order_corners
from .pipeline import JobConfig, RenderResult, detect_keyframe, report_to_dict, run_job
from .tracker import TrackParams
from .videoio import png_bytes, read_png, read_y4m, y4m_bytes

STATE_CREATED = "created"
STATE_DETECTING = "detecting"
STATE_DETECTED = "detected"
STATE_CORNERS_CONFIRMED = "corners_confirmed"
STATE_RENDERING = "rendering"
STATE_DONE = "done"
STATE_FAILED = "failed"

# The complete transition relation; _transition refuses anything else.
LEGAL_TRANSITIONS: dict[str, frozenset[str]] = {
    STATE_CREATED: frozenset({STATE_DETECTING}),
    STATE_DETECTING: frozenset({STATE_DETECTED, STATE_FAILED}),
    STATE_DETECTED: frozenset({STATE_CORNERS_CONFIRMED}),
    STATE_CORNERS_CONFIRMED: frozenset({STATE_CORNERS_CONFIRMED, STATE_RENDERING}),
    STATE_RENDERING: frozenset({STATE_DONE, STATE_FAILED}),
    STATE_DONE: frozenset(),
    STATE_FAILED: frozenset(),
}


@dataclass
class ServiceConfig:
    videos_dir: Path
    adverts_dir: Path
    retention_seconds: float = 3600.0
    frame_rate: tuple[int, int] = (30, 1)
    detector_color: tuple[float, float, float] = (0.0, 1.0, 0.0)
    detector_sigma: float = 0.1

    def __post_init__(self):
        self.videos_dir = Path(self.videos_dir)
        self.adverts_dir = Path(self.adverts_dir)


@dataclass
class Job:
    """One render job.  Mutated only under its lock: by its worker
    thread and by state-changing request handlers."""

    id: str
    video: str
    advert: str
    config: JobConfig
    state: str = STATE_CREATED
    keyframe_index: int | None = None
    detected_quad: Quad | None = None
    confirmed_frame: int | None = None
    confirmed_quad: Quad | None = None
    progress: float = 0.0
    error: str | None = None
    result: RenderResult | None = None
    rendered_frames: list = field(default_factory=list)
    done_at: float | None = None
    frame_count: int = 0
    width: int = 0
    height: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _transition(job: Job, to_state: str) -> None:
    """Move a job to a new state, enforcing the transition relation.
    Callers must hold job.lock."""
    if to_state not in LEGAL_TRANSITIONS[job.state]:
        raise RuntimeError(f"illegal job transition {job.state} -> {to_state}")
    job.state = to_state


def _quad_json(quad: Quad | None) -> list | None:
    return quad.as_list() if quad is not None else None


class DetectorOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")
    color: tuple[float, float, float] | None = None
    sigma: float | None = Field(default=None, gt=0.0)


class JobRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    video: str
    advert: str
    detector: DetectorOptions | None = None
    stride: int | None = Field(default=None, ge=1)
    recognition_cutoff: float | None = Field(default=None, ge=0.0, le=1.0)
    threshold: float | None = Field(default=None, ge=0.0, le=1.0)
    min_area: float | None = Field(default=None, gt=0.0)


class CornersRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    frame: int = Field(ge=0)
    corners: list[tuple[float, float]] = Field(min_length=4, max_length=4)


class BlendOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")
    mode: str | None = None
    solver_tolerance: float | None = Field(default=None, gt=0.0)
    max_iterations: int | None = Field(default=None, ge=1)


class TrackOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")
    window: int | None = Field(default=None, ge=1)
    pyramid_levels: int | None = Field(default=None, ge=1)
    max_iterations: int | None = Field(default=None, ge=1)
    convergence_epsilon: float | None = Field(default=None, gt=0.0)
    min_eigenvalue: float | None = Field(default=None, gt=0.0)
    max_features: int | None = Field(default=None, ge=1)
    feature_quality: float | None = Field(default=None, gt=0.0, lt=1.0)
    min_feature_distance: float | None = Field(default=None, gt=0.0)
    reprojection_inlier_threshold: float | None = Field(default=None, gt=0.0)


class RenderRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    blend: BlendOptions | None = None
    track: TrackOptions | None = None


def _scan_videos(directory: Path) -> dict[str, Path]:
    return {p.stem: p for p in sorted(directory.glob("*.y4m"))}


def _scan_adverts(directory: Path) -> dict[str, Path]:
    return {p.stem: p for p in sorted(directory.glob("*.png"))}


def _overridden(defaults, options, cls):
    """Dataclass copy with the non-None fields of a pydantic options
    model applied on top."""
    if options is None:
        return defaults
    updates = {k: v for k, v in options.model_dump().items() if v is not None}
    merged = {**defaults.__dict__, **updates}
    return cls(**merged)


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="adforge")
    jobs: dict[str, Job] = {}
    jobs_lock = threading.Lock()

    def get_job(job_id: str) -> Job:
        with jobs_lock:
            job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")
        return job

    @app.get("/videos")
    def list_videos():
        try:
            catalog = []
            for vid, path in _scan_videos(config.videos_dir).items():
                stream, _ = read_y4m(path)
                catalog.append(
                    {
                        "id": vid,
                        "name": path.name,
                        "width": stream.width,
                        "height": stream.height,
                        "frame_count": stream.frame_count,
                    }
                )
            return catalog
        except OSError as exc:
            raise HTTPException(status_code=500, detail=f"video catalog unreadable: {exc}")
        except AdforgeError as exc:
            raise HTTPException(status_code=500, detail=f"bad video in catalog: {exc}")

    @app.get("/adverts")
    def list_adverts():
        try:
            catalog = []
            for aid, path in _scan_adverts(config.adverts_dir).items():
                image = read_png(path)
                catalog.append(
                    {
                        "id": aid,
                        "name": path.name,
                        "width": image.shape[1],
                        "height": image.shape[0],
                    }
                )
            return catalog
        except OSError as exc:
            raise HTTPException(status_code=500, detail=f"advert catalog unreadable: {exc}")
        except AdforgeError as exc:
            raise HTTPException(status_code=500, detail=f"bad advert in catalog: {exc}")

    def detect_worker(job: Job) -> None:
        with job.lock:
            _transition(job, STATE_DETECTING)
        try:
            keyframe, quad = detect_keyframe(job.config)
        except (NoBillboardFound, AdforgeError, ValueError) as exc:
            with job.lock:
                job.error = str(exc)
                _transition(job, STATE_FAILED)
            return
        with job.lock:
            job.keyframe_index = keyframe
            job.detected_quad = quad
            _transition(job, STATE_DETECTED)

    @app.post("/jobs", status_code=201)
    def create_job(request: JobRequest):
        videos = _scan_videos(config.videos_dir)
        adverts = _scan_adverts(config.adverts_dir)
        if request.video not in videos:
            raise HTTPException(status_code=404, detail=f"no video {request.video!r}")
        if request.advert not in adverts:
            raise HTTPException(status_code=404, detail=f"no advert {request.advert!r}")

        stream, frame_iter = read_y4m(videos[request.video])
        frames = list(frame_iter)
        advert = Advert(read_png(adverts[request.advert]))

        opts = request.detector
        color = config.detector_color
        sigma = config.detector_sigma
        if opts is not None:
            color = opts.color if opts.color is not None else color
            sigma = opts.sigma if opts.sigma is not None else sigma
        job_config = JobConfig(
            frames=frames,
            advert=advert,
            detector=ChromaBaseline(color=tuple(color), sigma=sigma),
            stride=request.stride if request.stride is not None else 10,
            recognition_cutoff=(
                request.recognition_cutoff if request.recognition_cutoff is not None else 0.5
            ),
            threshold=request.threshold if request.threshold is not None else 0.5,
            min_area=request.min_area,
        )
        job = Job(
            id=uuid.uuid4().hex,
            video=request.video,
            advert=request.advert,
            config=job_config,
            frame_count=stream.frame_count,
            width=stream.width,
            height=stream.height,
        )
        with jobs_lock:
            jobs[job.id] = job
        threading.Thread(target=detect_worker, args=(job,), daemon=True).start()
        return {"id": job.id}

    @app.post("/jobs/{job_id}/corners")
    def confirm_corners(job_id: str, request: CornersRequest):
        job = get_job(job_id)
        if request.frame >= job.frame_count:
            raise HTTPException(
                status_code=422,
                detail=f"frame {request.frame} out of range (video has {job.frame_count})",
            )
        pts = np.asarray(request.corners, dtype=np.float64)
        if not (
            (pts[:, 0] >= 0).all()
            and (pts[:, 0] <= job.width - 1).all()
            and (pts[:, 1] >= 0).all()
            and (pts[:, 1] <= job.height - 1).all()
        ):
            raise HTTPException(status_code=422, detail="corners out of frame bounds")
        # The posted sequence must itself trace a convex quad (either
        # orientation); only then is it canonicalized for storage.  A
        # self-intersecting listing of otherwise convex-position points
        # is an operator mistake, not a reordering opportunity.
        try:
            Quad(pts)
        except NotConvex:
            try:
                Quad(pts[::-1])
            except NotConvex as exc:
                raise HTTPException(status_code=422, detail=f"corners not convex: {exc}")
        quad = order_corners(pts)
        with job.lock:
            if job.state not in (STATE_DETECTED, STATE_CORNERS_CONFIRMED):
                raise HTTPException(
                    status_code=409,
                    detail=f"cannot confirm corners in state {job.state!r}",
                )
            job.confirmed_frame = request.frame
            job.confirmed_quad = quad
            _transition(job, STATE_CORNERS_CONFIRMED)
        return {"frame": request.frame, "corners": quad.as_list()}

    def render_worker(job: Job, cfg: JobConfig) -> None:
        total = max(len(cfg.frames), 1)

        def on_frame(index: int, frame: np.ndarray) -> None:
            with job.lock:
                job.rendered_frames.append(frame)
                job.progress = max(job.progress, (index + 1) / total)

        try:
            result = run_job(cfg, on_frame=on_frame)
        except (AdforgeError, ValueError) as exc:
            with job.lock:
                job.error = str(exc)
                _transition(job, STATE_FAILED)
            return
        with job.lock:
            job.result = result
            job.progress = 1.0
            job.done_at = time.monotonic()
            _transition(job, STATE_DONE)

    @app.post("/jobs/{job_id}/render")
    def start_render(job_id: str, request: RenderRequest | None = None):
        job = get_job(job_id)
        blend_opts = request.blend if request is not None else None
        track_opts = request.track if request is not None else None
        if blend_opts is not None and blend_opts.mode is not None:
            if blend_opts.mode not in BLEND_MODES:
                raise HTTPException(
                    status_code=422,
                    detail=f"blend mode must be one of {list(BLEND_MODES)}",
                )
        try:
            blend = _overridden(BlendConfig(), blend_opts, BlendConfig)
            track = _overridden(TrackParams(), track_opts, TrackParams)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        with job.lock:
            if job.state != STATE_CORNERS_CONFIRMED:
                raise HTTPException(
                    status_code=409, detail=f"cannot render in state {job.state!r}"
                )
            cfg = dataclasses.replace(
                job.config,
                corners_override=(job.confirmed_frame, job.confirmed_quad),
                blend=blend,
                track=track,
            )
            _transition(job, STATE_RENDERING)
        threading.Thread(target=render_worker, args=(job, cfg), daemon=True).start()
        return {"state": STATE_RENDERING}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = get_job(job_id)
        with job.lock:
            payload = {
                "id": job.id,
                "state": job.state,
                "video": job.video,
                "advert": job.advert,
                "keyframe_index": job.keyframe_index,
                "detected_corners": _quad_json(job.detected_quad),
                "confirmed_frame": job.confirmed_frame,
                "confirmed_corners": _quad_json(job.confirmed_quad),
                "progress": job.progress,
                "frame_count": job.frame_count,
                "width": job.width,
                "height": job.height,
                "error": job.error,
                "report": (
                    report_to_dict(job.result.report) if job.result is not None else None
                ),
            }
        return payload

    @app.get("/jobs/{job_id}/frames/{frame_index}")
    def frame_preview(job_id: str, frame_index: int):
        job = get_job(job_id)
        with job.lock:
            if frame_index < 0 or frame_index >= len(job.rendered_frames):
                raise HTTPException(
                    status_code=404,
                    detail=f"frame {frame_index} not rendered yet",
                )
            frame = job.rendered_frames[frame_index]
        return Response(content=png_bytes(frame), media_type="image/png")

    @app.get("/jobs/{job_id}/result")
    def job_result(job_id: str):
        job = get_job(job_id)
        with job.lock:
            if job.state != STATE_DONE:
                raise HTTPException(
                    status_code=409, detail=f"no result in state {job.state!r}"
                )
            expired = (
                job.done_at is not None
                and time.monotonic() - job.done_at > config.retention_seconds
            )
            if expired:
                job.result = None
                raise HTTPException(status_code=410, detail="result retention expired")
            frames = job.result.frames
        data, _ = y4m_bytes(frames, config.frame_rate)
        return Response(
            content=data,
            media_type="video/x-yuv4mpeg",
            headers={"Content-Disposition": f'attachment; filename="{job_id}.y4m"'},
        )

    return app
