"""File formats: 8-bit PGM/PNG images and the text depth-raster format.

Depth rasters are UTF-8 text: first line `rows cols`, then `rows` lines of
`cols` space-separated decimal values, row-major top to bottom.  Values are
written with shortest round-tripping precision so save followed by load is
exact.  Images are binary PGM (P5, maxval 255) or 8-bit PNG (grayscale or
RGB, converted by fixed luminance weights); pixel 255 maps to intensity 1.0.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image

from .image import LUMA_WEIGHTS, validate_gray
from .measures import DomainError

MAX_GRAY = 255


class ParseError(ValueError):
    """Malformed input file; message carries path and line diagnostics."""


def _fail(path, line_no: int | None, detail: str) -> None:
    where = f"{path}:{line_no}" if line_no is not None else str(path)
    raise ParseError(f"{where}: {detail}")


def load_depth_text(path) -> np.ndarray:
    """Parse a text depth raster into a float array (not yet a DepthMap)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: unreadable ({exc})") from exc
    lines = text.splitlines()
    if not lines:
        _fail(path, 1, "empty file, expected 'rows cols' header")
    head = lines[0].split()
    if len(head) != 2:
        _fail(path, 1, f"expected 'rows cols', got {lines[0]!r}")
    try:
        rows, cols = int(head[0]), int(head[1])
    except ValueError:
        _fail(path, 1, f"non-integer dimensions {lines[0]!r}")
    if rows <= 0 or cols <= 0:
        _fail(path, 1, f"dimensions must be positive, got {rows}x{cols}")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != rows:
        _fail(path, len(lines), f"expected {rows} data lines, found {len(body)}")
    out = np.empty((rows, cols), dtype=np.float64)
    for r, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != cols:
            _fail(path, r + 2, f"expected {cols} values, got {len(parts)}")
        for c, tok in enumerate(parts):
            try:
                v = float(tok)
            except ValueError:
                _fail(path, r + 2, f"value {c + 1}: not a number: {tok!r}")
            if not math.isfinite(v):
                _fail(path, r + 2, f"value {c + 1}: non-finite: {tok!r}")
            out[r, c] = v
    return out


def save_depth_text(path, values: np.ndarray) -> None:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise DomainError("depth raster must be a non-empty 2-D array")
    if not np.all(np.isfinite(arr)):
        raise DomainError("depth raster must be finite")
    rows, cols = arr.shape
    lines = [f"{rows} {cols}"]
    for r in range(rows):
        lines.append(" ".join(repr(float(v)) for v in arr[r]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _to_bytes(img: np.ndarray) -> np.ndarray:
    arr = validate_gray(img)
    return np.round(arr * MAX_GRAY).astype(np.uint8)


def save_pgm(path, img: np.ndarray) -> None:
    """Binary PGM (P5), 8-bit."""
    data = _to_bytes(img)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{MAX_GRAY}\n".encode("ascii"))
        fh.write(data.tobytes())


def _read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    # header tokens may be separated by any whitespace and # comments
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(raw):
        ch = raw[pos:pos + 1]
        if ch in b" \t\r\n":
            pos += 1
        elif ch == b"#":
            nl = raw.find(b"\n", pos)
            pos = len(raw) if nl < 0 else nl + 1
        else:
            end = pos
            while end < len(raw) and raw[end:end + 1] not in b" \t\r\n":
                end += 1
            tokens.append(raw[pos:end])
            pos = end
    if len(tokens) < 4 or tokens[0] != b"P5":
        _fail(path, None, "not a binary PGM (P5) file")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        _fail(path, None, "malformed PGM header")
    if w <= 0 or h <= 0:
        _fail(path, None, f"bad PGM dimensions {w}x{h}")
    if maxval != MAX_GRAY:
        _fail(path, None, f"only 8-bit PGM supported, maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    data = raw[pos:pos + w * h]
    if len(data) != w * h:
        _fail(path, None, f"truncated pixel data, expected {w * h} bytes")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w) / MAX_GRAY


def _read_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            mode = im.mode
            if mode == "L":
                return np.asarray(im, dtype=np.float64) / MAX_GRAY
            if mode == "RGB":
                rgb = np.asarray(im, dtype=np.float64) / MAX_GRAY
                return (LUMA_WEIGHTS[0] * rgb[..., 0]
                        + LUMA_WEIGHTS[1] * rgb[..., 1]
                        + LUMA_WEIGHTS[2] * rgb[..., 2])
            _fail(path, None, f"unsupported PNG mode {mode!r} (need L or RGB)")
    except ParseError:
        raise
    except Exception as exc:
        raise ParseError(f"{path}: not a readable PNG ({exc})") from exc


def load_image(path) -> np.ndarray:
    """Grayscale image in [0, 1] from a PGM or PNG file."""
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"{path}: no such file")
    with p.open("rb") as fh:
        head = fh.read(8)
    if head[:2] == b"P5":
        return _read_pgm(p)
    if head == b"\x89PNG\r\n\x1a\n":
        return _read_png(p)
    _fail(path, None, "unrecognized image format (need P5 PGM or PNG)")


def save_image(path, img: np.ndarray) -> None:
    """Write 8-bit grayscale; format chosen by suffix (.pgm or .png)."""
    p = Path(path)
    if p.suffix.lower() == ".pgm":
        save_pgm(p, img)
    elif p.suffix.lower() == ".png":
        Image.fromarray(_to_bytes(img), mode="L").save(p)
    else:
        raise DomainError(f"unsupported image suffix {p.suffix!r}")


def depth_visualization(values: np.ndarray, d_min: float, d_max: float) -> np.ndarray:
    """Depth raster as 8-bit gray: d_min maps to 0, d_max to 255 exactly."""
    if not (d_min < d_max):
        raise DomainError("need d_min < d_max")
    arr = np.asarray(values, dtype=np.float64)
    scaled = (arr - d_min) / (d_max - d_min)
    return np.round(np.clip(scaled, 0.0, 1.0) * MAX_GRAY).astype(np.uint8)


def save_depth_pgm(path, values: np.ndarray, d_min: float, d_max: float) -> None:
    data = depth_visualization(values, d_min, d_max)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{MAX_GRAY}\n".encode("ascii"))
        fh.write(data.tobytes())
