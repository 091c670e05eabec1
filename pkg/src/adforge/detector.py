"""Pluggable billboard detectors.

Two interchangeable heatmap sources: per-frame PGM files produced by any
external model, and a deterministic chroma-similarity baseline that
scores each pixel by its color distance to a reference color.  Both
yield per-pixel probabilities in [0, 1]; `recognize` reduces the map to
a scalar frame-level score (its maximum).
"""

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, MalformedPgm, MissingHeatmap, TruncatedData
from .imagecore import validate_frame

PGM_MAXVALS = (255, 65535)


@dataclass(frozen=True)
class HeatmapFiles:
    """Heatmaps stored on disk as `<stem>_<frame index %06d>.pgm`."""

    directory: str | Path
    stem: str = "heatmap"

    def path_for(self, frame_index: int) -> Path:
        return Path(self.directory) / f"{self.stem}_{frame_index:06d}.pgm"

    def heatmap(self, frame_index: int, frame: np.ndarray) -> np.ndarray:
        path = self.path_for(frame_index)
        if not path.is_file():
            raise MissingHeatmap(f"no heatmap file {path}")
        hm = load_heatmap_pgm(path)
        if hm.shape != frame.shape[:2]:
            raise DimensionMismatch(
                f"heatmap {path} is {hm.shape[1]}x{hm.shape[0]}, "
                f"frame is {frame.shape[1]}x{frame.shape[0]}"
            )
        return hm


@dataclass(frozen=True)
class ChromaBaseline:
    """Gaussian similarity to a reference color:
    heat = exp(-||rgb - color||^2 / (2 sigma^2))."""

    color: tuple[float, float, float] = (0.0, 1.0, 0.0)
    sigma: float = 0.1

    def heatmap(self, frame_index: int, frame: np.ndarray) -> np.ndarray:
        validate_frame(frame)
        ref = np.asarray(self.color, dtype=np.float64)
        d2 = ((frame - ref) ** 2).sum(axis=2)
        return np.exp(-d2 / (2.0 * self.sigma**2))


DetectorSource = HeatmapFiles | ChromaBaseline


def localize(source: DetectorSource, frame_index: int, frame: np.ndarray) -> np.ndarray:
    """Per-pixel billboard probability map for one frame."""
    return source.heatmap(frame_index, frame)


def recognize(source: DetectorSource, frame_index: int, frame: np.ndarray) -> float:
    """Frame-level billboard score: the maximum of the probability map."""
    return float(localize(source, frame_index, frame).max())


def _parse_pgm_header(data: bytes) -> tuple[int, int, int, int]:
    """Return (width, height, maxval, data offset).

    Header tokens are whitespace separated; '#' starts a comment running
    to end of line; exactly one whitespace byte follows the maxval token
    before the binary samples.
    """
    pos = 0
    n = len(data)

    def next_token() -> bytes:
        nonlocal pos
        while pos < n:
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise MalformedPgm("unexpected end of header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise MalformedPgm(f"bad magic {magic!r}, expected P5")
    fields = []
    for name in ("width", "height", "maxval"):
        tok = next_token()
        try:
            fields.append(int(tok))
        except ValueError:
            raise MalformedPgm(f"non-integer {name} token {tok!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedPgm(f"bad dimensions {width}x{height}")
    if maxval not in PGM_MAXVALS:
        raise MalformedPgm(f"unsupported maxval {maxval}, expected one of {PGM_MAXVALS}")
    if pos >= n or not data[pos : pos + 1].isspace():
        raise MalformedPgm("missing whitespace after maxval")
    return width, height, maxval, pos + 1


def load_heatmap_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255 or 65535) as probabilities
    value/maxval in [0, 1]."""
    data = Path(path).read_bytes()
    width, height, maxval, offset = _parse_pgm_header(data)
    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
    need = width * height * dtype.itemsize
    body = data[offset : offset + need]
    if len(body) < need:
        raise TruncatedData(f"{path}: expected {need} sample bytes, found {len(body)}")
    samples = np.frombuffer(body, dtype=dtype).reshape(height, width)
    return samples.astype(np.float64) / maxval


def save_heatmap_pgm(path: str | Path, heatmap: np.ndarray, maxval: int = 65535) -> None:
    """Write probabilities as a binary PGM, rounding half-up to the
    requested bit depth."""
    heatmap = np.asarray(heatmap, dtype=np.float64)
    if heatmap.ndim != 2:
        raise ValueError(f"heatmap must be 2-d, got shape {heatmap.shape}")
    if maxval not in PGM_MAXVALS:
        raise ValueError(f"maxval must be one of {PGM_MAXVALS}")
    q = np.clip(np.floor(heatmap * maxval + 0.5), 0, maxval)
    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
    h, w = heatmap.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + q.astype(dtype).tobytes())


_STEM_RE = re.compile(r"^(?P<stem>.+)_(?P<index>\d{6})\.pgm$")


def heatmap_indices(directory: str | Path, stem: str) -> list[int]:
    """Frame indices that have a heatmap file in the directory."""
    out = []
    for p in Path(directory).iterdir():
        m = _STEM_RE.match(p.name)
        if m and m.group("stem") == stem:
            out.append(int(m.group("index")))
    return sorted(out)
