"""adforge: deterministic billboard replacement for video.

Locates a planar billboard in a video from per-frame likelihood maps (or a
chroma baseline), tracks its four corners with a pyramidal sparse optical
flow tracker, and composites an advert into the tracked region either
directly or by gradient-domain (seamless) blending.  Ships a CLI
(``adforge detect|render|synth|serve``) and an HTTP job service.

Hot kernels run through numba when available; ``ADFORGE_NUMBA=0`` forces
the pure-numpy fallback, ``ADFORGE_NUMBA=1`` requires numba (see
``adforge.kernels``).
"""

from .compositor import (
    BLEND_MODES,
    Advert,
    BlendConfig,
    BlendResult,
    direct_composite,
    poisson_blend,
    warp_advert,
)
from .detector import ChromaBaseline, HeatmapFiles, localize, recognize
from .errors import AdforgeError
from .geometry import (
    Quad,
    convex_hull,
    estimate_homography,
    fit_homography,
    invert_homography,
    min_area_rect,
    normalize_homography,
    order_corners,
    project,
    project_points,
)
from .imagecore import build_pyramid, to_grayscale
from .maskops import (
    Region,
    connected_components,
    largest_region,
    localize_quad,
    rasterize_quad,
    threshold,
    trace_boundary,
)
from .pipeline import (
    FrameRecord,
    JobConfig,
    RenderReport,
    RenderResult,
    SceneSpec,
    SyntheticScene,
    detect_keyframe,
    drift_motions,
    generate_synthetic_scene,
    report_to_dict,
    run_job,
    save_scene,
)
from .tracker import TrackParams, TrackState, good_features, init_state, track_point, update_quad
from .videoio import (
    VideoStream,
    read_corners_json,
    read_png,
    read_png_sequence,
    read_y4m,
    write_corners_json,
    write_png,
    write_png_sequence,
    write_y4m,
    y4m_bytes,
)

__version__ = "0.1.0"

__all__ = [
    "AdforgeError",
    "Advert",
    "BLEND_MODES",
    "BlendConfig",
    "BlendResult",
    "ChromaBaseline",
    "FrameRecord",
    "HeatmapFiles",
    "JobConfig",
    "Quad",
    "Region",
    "RenderReport",
    "RenderResult",
    "SceneSpec",
    "SyntheticScene",
    "TrackParams",
    "TrackState",
    "VideoStream",
    "build_pyramid",
    "connected_components",
    "convex_hull",
    "detect_keyframe",
    "direct_composite",
    "drift_motions",
    "estimate_homography",
    "fit_homography",
    "generate_synthetic_scene",
    "good_features",
    "init_state",
    "invert_homography",
    "largest_region",
    "localize",
    "localize_quad",
    "min_area_rect",
    "normalize_homography",
    "order_corners",
    "poisson_blend",
    "project",
    "project_points",
    "rasterize_quad",
    "read_corners_json",
    "read_png",
    "read_png_sequence",
    "read_y4m",
    "recognize",
    "report_to_dict",
    "run_job",
    "save_scene",
    "threshold",
    "to_grayscale",
    "trace_boundary",
    "track_point",
    "update_quad",
    "warp_advert",
    "write_corners_json",
    "write_png",
    "write_png_sequence",
    "write_y4m",
    "y4m_bytes",
]
