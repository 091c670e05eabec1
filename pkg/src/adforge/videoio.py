"""Video, image, and corner-file I/O.

Y4M carrier: uncompressed YUV4MPEG2, planar 4:4:4 only, full-range
BT.601 conversion computed in normalized reals with half-up rounding at
the 8-bit boundary.  PNG sequences are bit-exact 8-bit RGB.  Corner
files are JSON `{"frame": int, "corners": [[x,y] x4]}` in TL, TR, BR,
BL order.
"""

import io
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from .errors import (
    DimensionMismatch,
    MalformedHeader,
    MissingFrameIndex,
    SchemaViolation,
    TruncatedFrame,
    UnsupportedColorSpace,
    UnsupportedPngType,
)
from .geometry import Quad
from .imagecore import validate_frame

Y4M_MAGIC = b"YUV4MPEG2"


@dataclass(frozen=True)
class VideoStream:
    width: int
    height: int
    frame_rate: tuple[int, int]  # (numerator, denominator)
    frame_count: int
    color_space: str = "C444"


def rgb_to_ycbcr_planes(frame: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full-range BT.601 RGB -> 8-bit Y, Cb, Cr planes, rounded half-up."""
    r, g, b = frame[:, :, 0], frame[:, :, 1], frame[:, :, 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = (b - y) / 1.772
    cr = (r - y) / 1.402

    def quantize(v: np.ndarray) -> np.ndarray:
        return np.clip(np.floor(v + 0.5), 0, 255).astype(np.uint8)

    return quantize(255.0 * y), quantize(128.0 + 255.0 * cb), quantize(128.0 + 255.0 * cr)


def ycbcr_planes_to_rgb(yp: np.ndarray, cbp: np.ndarray, crp: np.ndarray) -> np.ndarray:
    """8-bit Y, Cb, Cr planes -> RGB frame in [0, 1] (full-range BT.601)."""
    y = yp.astype(np.float64) / 255.0
    cb = (cbp.astype(np.float64) - 128.0) / 255.0
    cr = (crp.astype(np.float64) - 128.0) / 255.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.clip(np.stack((r, g, b), axis=2), 0.0, 1.0)


def _parse_y4m_header(line: bytes, path) -> tuple[int, int, tuple[int, int], str]:
    parts = line.split(b" ")
    if parts[0] != Y4M_MAGIC:
        raise MalformedHeader(f"{path}: missing YUV4MPEG2 magic")
    width = height = None
    rate = None
    color = None
    for tok in parts[1:]:
        if not tok:
            continue
        key, val = tok[:1], tok[1:]
        try:
            if key == b"W":
                width = int(val)
            elif key == b"H":
                height = int(val)
            elif key == b"F":
                num, den = val.split(b":")
                rate = (int(num), int(den))
            elif key == b"C":
                color = tok.decode("ascii")
            # I (interlacing), A (aspect), X (extensions) are ignored.
        except (ValueError, UnicodeDecodeError):
            raise MalformedHeader(f"{path}: bad header token {tok!r}") from None
    if width is None or height is None or rate is None:
        raise MalformedHeader(f"{path}: header must declare W, H and F")
    if width < 1 or height < 1 or rate[0] < 1 or rate[1] < 1:
        raise MalformedHeader(f"{path}: non-positive dimensions or frame rate")
    if color is None:
        color = "C420jpeg"  # YUV4MPEG2 default when absent
    if color != "C444":
        raise UnsupportedColorSpace(f"{path}: color space {color} not supported, need C444")
    return width, height, rate, color


def read_y4m(path: str | Path) -> tuple[VideoStream, Iterator[np.ndarray]]:
    """Parse a Y4M file.  The stream header (with an exact frame count)
    is returned eagerly; frames decode lazily from the loaded bytes."""
    path = Path(path)
    data = path.read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise MalformedHeader(f"{path}: no header line")
    width, height, rate, color = _parse_y4m_header(data[:nl], path)
    plane = width * height
    offsets = []
    pos = nl + 1
    while pos < len(data):
        mark_end = data.find(b"\n", pos)
        if mark_end < 0:
            raise TruncatedFrame(f"{path}: unterminated FRAME marker at byte {pos}")
        marker = data[pos:mark_end]
        if marker != b"FRAME" and not marker.startswith(b"FRAME "):
            raise MalformedHeader(f"{path}: bad frame marker {marker[:20]!r} at byte {pos}")
        body = mark_end + 1
        if body + 3 * plane > len(data):
            raise TruncatedFrame(f"{path}: frame {len(offsets)} has incomplete planes")
        offsets.append(body)
        pos = body + 3 * plane

    stream = VideoStream(width, height, rate, len(offsets), color)

    def frames() -> Iterator[np.ndarray]:
        for off in offsets:
            planes = np.frombuffer(data[off : off + 3 * plane], dtype=np.uint8)
            yp = planes[:plane].reshape(height, width)
            cbp = planes[plane : 2 * plane].reshape(height, width)
            crp = planes[2 * plane :].reshape(height, width)
            yield ycbcr_planes_to_rgb(yp, cbp, crp)

    return stream, frames()


def y4m_bytes(frames, frame_rate: tuple[int, int] = (30, 1)) -> tuple[bytes, VideoStream]:
    """Encode frames as Y4M (C444, full range) in memory.  Returns the
    encoded bytes and the stream header they carry."""
    frames = list(frames)
    if not frames:
        raise DimensionMismatch("cannot write a video with no frames")
    validate_frame(frames[0])
    height, width = frames[0].shape[:2]
    num, den = int(frame_rate[0]), int(frame_rate[1])
    out = io.BytesIO()
    out.write(f"YUV4MPEG2 W{width} H{height} F{num}:{den} Ip A1:1 C444\n".encode("ascii"))
    for i, frame in enumerate(frames):
        validate_frame(frame)
        if frame.shape[:2] != (height, width):
            raise DimensionMismatch(
                f"frame {i} is {frame.shape[1]}x{frame.shape[0]}, expected {width}x{height}"
            )
        yp, cbp, crp = rgb_to_ycbcr_planes(frame)
        out.write(b"FRAME\n")
        out.write(yp.tobytes())
        out.write(cbp.tobytes())
        out.write(crp.tobytes())
    return out.getvalue(), VideoStream(width, height, (num, den), len(frames), "C444")


def write_y4m(path: str | Path, frames, frame_rate: tuple[int, int] = (30, 1)) -> VideoStream:
    """Write frames as Y4M (C444, full range).  Returns the stream
    header that was written."""
    data, stream = y4m_bytes(frames, frame_rate)
    Path(path).write_bytes(data)
    return stream


def _frame_from_image(img: Image.Image, path) -> np.ndarray:
    if img.mode == "RGBA":
        img = img.convert("RGB")
    elif img.mode != "RGB":
        raise UnsupportedPngType(f"{path}: mode {img.mode} not supported, need 8-bit RGB/RGBA")
    return np.asarray(img, dtype=np.uint8).astype(np.float64) / 255.0


def read_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return _frame_from_image(img, path)


def write_png(path: str | Path, frame: np.ndarray) -> None:
    Path(path).write_bytes(png_bytes(frame))


def png_bytes(frame: np.ndarray) -> bytes:
    """Encode a frame as 8-bit RGB PNG bytes (half-up quantization)."""
    validate_frame(frame)
    q = np.clip(np.floor(frame * 255.0 + 0.5), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(q, "RGB").save(buf, format="PNG")
    return buf.getvalue()


_PLACEHOLDER_RE = re.compile(r"%0?\d*d")


def _pattern_regex(pattern: str) -> re.Pattern:
    holes = _PLACEHOLDER_RE.findall(pattern)
    if len(holes) != 1:
        raise ValueError(f"pattern {pattern!r} must contain exactly one integer placeholder")
    prefix, suffix = _PLACEHOLDER_RE.split(pattern)
    return re.compile(re.escape(prefix) + r"(\d+)" + re.escape(suffix) + "$")


def read_png_sequence(directory: str | Path, pattern: str = "frame_%06d.png") -> list[np.ndarray]:
    """Read an indexed PNG sequence in index order.

    Indices must be contiguous from the smallest present; a gap raises
    MissingFrameIndex.  All frames must share one size.
    """
    directory = Path(directory)
    rx = _pattern_regex(pattern)
    indexed = {}
    for p in sorted(directory.iterdir()):
        m = rx.match(p.name)
        if m:
            indexed[int(m.group(1))] = p
    if not indexed:
        return []
    lo, hi = min(indexed), max(indexed)
    for i in range(lo, hi + 1):
        if i not in indexed:
            raise MissingFrameIndex(f"{directory}: no file for frame index {i} ({pattern})")
    frames = [read_png(indexed[i]) for i in range(lo, hi + 1)]
    first = frames[0].shape
    for i, f in enumerate(frames[1:], start=lo + 1):
        if f.shape != first:
            raise DimensionMismatch(f"frame {i} shape {f.shape} differs from first {first}")
    return frames


def write_png_sequence(directory: str | Path, pattern: str, frames) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if len(_PLACEHOLDER_RE.findall(pattern)) != 1:
        raise ValueError(f"pattern {pattern!r} must contain exactly one integer placeholder")
    for i, frame in enumerate(frames):
        write_png(directory / (pattern % i), frame)


def write_corners_json(path: str | Path, frame_index: int, quad: Quad) -> None:
    """Write the corner exchange file.  Coordinates are serialized in
    scientific notation with 18 significant digits, which preserves any
    float64 exactly across the decimal round trip."""
    pts = ", ".join(f"[{x:.17e}, {y:.17e}]" for x, y in quad.corners)
    text = f'{{"frame": {int(frame_index)}, "corners": [{pts}]}}'
    Path(path).write_text(text, encoding="ascii")


def parse_corners_payload(payload) -> tuple[int, Quad]:
    """Validate a corner JSON object and build the Quad (strict schema:
    integer frame, exactly 4 finite [x, y] pairs, canonical order)."""
    if not isinstance(payload, dict):
        raise SchemaViolation("corner payload must be a JSON object")
    if "frame" not in payload or "corners" not in payload:
        raise SchemaViolation("corner payload needs 'frame' and 'corners' fields")
    frame_index = payload["frame"]
    if isinstance(frame_index, bool) or not isinstance(frame_index, int) or frame_index < 0:
        raise SchemaViolation(f"'frame' must be a non-negative integer, got {frame_index!r}")
    corners = payload["corners"]
    if not isinstance(corners, list) or len(corners) != 4:
        raise SchemaViolation("'corners' must be a list of exactly 4 points")
    for pt in corners:
        if not isinstance(pt, list) or len(pt) != 2:
            raise SchemaViolation(f"corner {pt!r} is not an [x, y] pair")
        for v in pt:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaViolation(f"corner coordinate {v!r} is not numeric")
    return frame_index, Quad(corners)


def read_corners_json(path: str | Path) -> tuple[int, Quad]:
    try:
        payload = json.loads(Path(path).read_text(encoding="ascii"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise SchemaViolation(f"{path}: not valid JSON ({exc})") from None
    return parse_corners_payload(payload)
