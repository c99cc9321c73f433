"""Image containers, netpbm decoding, and RGB-to-grayscale conversion.

Images are thin wrappers around read-only numpy arrays: RGB as
(height, width, 3) uint8, grayscale as (height, width) uint8, and binary
as grayscale restricted to {0, 255} where 0 marks shadow and 255 light.
File I/O covers PPM (P3/P6) and PGM (P2/P5) with maxval 255 only.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IoError, MalformedFile, UnsupportedFormat

# Channel weights of the grayscale conversion, in (r, g, b) order.
GRAY_WEIGHTS = (0.21, 0.72, 0.07)

_WHITESPACE = frozenset(b" \t\r\n\v\f")


def _freeze(px: np.ndarray) -> np.ndarray:
    out = np.array(px, dtype=np.uint8, copy=True)
    out.setflags(write=False)
    return out


def _check_intensity(px: np.ndarray, what: str) -> None:
    if not np.issubdtype(px.dtype, np.integer):
        raise ValueError(f"{what} pixels must be integers, got dtype {px.dtype}")
    if px.size and (int(px.min()) < 0 or int(px.max()) > 255):
        raise ValueError(f"{what} pixel values must lie in [0, 255]")


@dataclass(frozen=True)
class RgbImage:
    """Row-major (height, width, 3) color image, channels in [0, 255]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"RGB pixels must have shape (h, w, 3), got {px.shape}")
        _check_intensity(px, "RGB")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def pixel_count(self) -> int:
        return self.pixels.shape[0] * self.pixels.shape[1]


@dataclass(frozen=True)
class GrayImage:
    """Row-major (height, width) intensity image, values in [0, 255]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"gray pixels must have shape (h, w), got {px.shape}")
        _check_intensity(px, "gray")
        self._validate(px)
        object.__setattr__(self, "pixels", _freeze(px))

    def _validate(self, px: np.ndarray) -> None:
        pass

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def pixel_count(self) -> int:
        return self.pixels.shape[0] * self.pixels.shape[1]


class BinaryImage(GrayImage):
    """Gray image whose values are exactly 0 (shadow) or 255 (light)."""

    def _validate(self, px: np.ndarray) -> None:
        if px.size and bool(((px != 0) & (px != 255)).any()):
            raise ValueError("binary pixels must be exactly 0 or 255")


def to_gray(img: RgbImage) -> GrayImage:
    """Convert RGB to grayscale as 0.21 r + 0.72 g + 0.07 b per pixel.

    Results are rounded half-up so the output stays integral; equal-channel
    pixels (v, v, v) map back to v for every v in [0, 255].
    """
    rgb = img.pixels.astype(np.float64)
    wr, wg, wb = GRAY_WEIGHTS
    gray = wr * rgb[:, :, 0] + wg * rgb[:, :, 1] + wb * rgb[:, :, 2]
    gray = np.clip(np.floor(gray + 0.5), 0.0, 255.0)
    return GrayImage(gray.astype(np.uint8))


# --- netpbm parsing -------------------------------------------------------


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    """Next header token, skipping whitespace and '#' comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos]
        if c in _WHITESPACE:
            pos += 1
        elif c == 0x23:  # '#'
            while pos < n and buf[pos] not in (0x0A, 0x0D):
                pos += 1
        else:
            break
    if pos >= n:
        raise MalformedFile("unexpected end of file in netpbm header")
    start = pos
    while pos < n and buf[pos] not in _WHITESPACE and buf[pos] != 0x23:
        pos += 1
    return buf[start:pos], pos


def _parse_header_int(buf: bytes, pos: int, what: str) -> tuple[int, int]:
    token, pos = _next_token(buf, pos)
    try:
        value = int(token)
    except ValueError:
        raise MalformedFile(f"bad {what} token {token!r}") from None
    return value, pos


def _read_plain_samples(buf: bytes, pos: int, count: int) -> np.ndarray:
    values = np.empty(count, dtype=np.int64)
    for i in range(count):
        values[i], pos = _parse_header_int(buf, pos, "sample")
    # Only whitespace or comments may follow the raster.
    n = len(buf)
    while pos < n:
        c = buf[pos]
        if c in _WHITESPACE:
            pos += 1
        elif c == 0x23:
            while pos < n and buf[pos] not in (0x0A, 0x0D):
                pos += 1
        else:
            raise MalformedFile("trailing data after plain raster")
    if values.size and (values.min() < 0 or values.max() > 255):
        raise MalformedFile("sample value outside [0, 255]")
    return values


def _read_raw_samples(buf: bytes, pos: int, count: int) -> np.ndarray:
    if pos >= len(buf) or buf[pos] not in _WHITESPACE:
        raise MalformedFile("missing whitespace before raw raster")
    pos += 1  # exactly one separator byte
    payload = buf[pos : pos + count]
    if len(payload) < count:
        raise MalformedFile(
            f"raw raster truncated: expected {count} bytes, found {len(payload)}"
        )
    rest = buf[pos + count :]
    if rest.strip(b" \t\r\n\v\f"):
        raise MalformedFile("trailing data after raw raster")
    return np.frombuffer(payload, dtype=np.uint8).astype(np.int64)


def decode_image(data: bytes) -> RgbImage:
    """Decode PPM (P3/P6) or PGM (P2/P5) bytes into an RgbImage.

    Grayscale files are promoted to RGB with equal channels; `to_gray`
    recovers the original values exactly, so one decode path serves both.
    Only maxval 255 is accepted.
    """
    if len(data) < 2:
        raise MalformedFile("file too short for a netpbm header")
    magic = bytes(data[:2])
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise UnsupportedFormat(f"unsupported magic {magic!r} (want P2/P3/P5/P6)")
    channels = 3 if magic in (b"P3", b"P6") else 1
    raw = magic in (b"P5", b"P6")

    pos = 2
    width, pos = _parse_header_int(data, pos, "width")
    height, pos = _parse_header_int(data, pos, "height")
    maxval, pos = _parse_header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise MalformedFile(f"non-positive dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormat(f"maxval {maxval} not supported (only 255)")

    count = width * height * channels
    if raw:
        samples = _read_raw_samples(data, pos, count)
    else:
        samples = _read_plain_samples(data, pos, count)

    if channels == 3:
        return RgbImage(samples.reshape(height, width, 3))
    gray = samples.reshape(height, width)
    return RgbImage(np.repeat(gray[:, :, np.newaxis], 3, axis=2))


def encode_pgm(img: GrayImage, raw: bool = True) -> bytes:
    """Serialize a gray (or binary) image as PGM, raw P5 or plain P2."""
    header = f"{'P5' if raw else 'P2'}\n{img.width} {img.height}\n255\n"
    if raw:
        return header.encode("ascii") + img.pixels.tobytes()
    rows = "\n".join(" ".join(str(v) for v in row) for row in img.pixels)
    return (header + rows + "\n").encode("ascii")


def encode_ppm(img: RgbImage, raw: bool = True) -> bytes:
    """Serialize a color image as PPM, raw P6 or plain P3."""
    header = f"{'P6' if raw else 'P3'}\n{img.width} {img.height}\n255\n"
    if raw:
        return header.encode("ascii") + img.pixels.tobytes()
    rows = "\n".join(
        " ".join(str(v) for v in row.reshape(-1)) for row in img.pixels
    )
    return (header + rows + "\n").encode("ascii")


def load_image(path: str | Path) -> RgbImage:
    """Read and decode an image file; wraps filesystem errors as IoError."""
    try:
        data = Path(path).read_bytes()
    except OSError as err:
        raise IoError(f"cannot read image {path}: {err}") from err
    return decode_image(data)


def save_pgm(path: str | Path, img: GrayImage, raw: bool = True) -> None:
    try:
        Path(path).write_bytes(encode_pgm(img, raw=raw))
    except OSError as err:
        raise IoError(f"cannot write image {path}: {err}") from err
