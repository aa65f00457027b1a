"""Reading and writing PGM (P5) and PNG images.

Integer pixel values are mapped to ``[0, 1]`` on load by dividing by the
format maximum (the PGM ``maxval`` header, or 255/65535 for PNG). The scale
is returned alongside the image so outputs can be mapped back.
"""

from __future__ import annotations

import os

import cv2
import numpy as np

from .core import Image, MultiChannelImage

__all__ = ["read_pgm", "write_pgm", "read_png", "write_png", "read_image", "write_image", "quantize"]

_RGB_NAMES = ("red", "green", "blue")


def _header_tokens(buf: bytes, count: int):
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(buf[start:pos])
    # exactly one whitespace byte separates header and raster
    return tokens, pos + 1


def read_pgm(path):
    """Read a binary (P5) PGM as integer array ``(height, width)`` and its maxval."""
    with open(path, "rb") as fh:
        buf = fh.read()
    tokens, offset = _header_tokens(buf, 4)
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    w, h, maxval = (int(t) for t in tokens[1:])
    if not 0 < maxval < 65536:
        raise ValueError(f"{path}: invalid maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = w * h * dtype.itemsize
    raster = buf[offset:offset + expected]
    if len(raster) != expected:
        raise ValueError(f"{path}: raster has {len(raster)} bytes, expected {expected}")
    arr = np.frombuffer(raster, dtype=dtype).reshape(h, w)
    return arr.astype(np.uint16 if maxval > 255 else np.uint8), maxval


def write_pgm(path, arr, maxval: int | None = None) -> None:
    """Write an unsigned integer array as binary PGM."""
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError("PGM holds a single channel")
    if maxval is None:
        maxval = 65535 if arr.dtype == np.uint16 else 255
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())


def read_png(path):
    """Read a PNG as ``(height, width)`` or ``(height, width, 3)`` RGB integers and its max value."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such image: {path}")
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise OSError(f"cannot read image {path}")
    if arr.ndim == 3:
        if arr.shape[2] == 4:
            arr = arr[:, :, :3]
        arr = arr[:, :, ::-1]  # BGR -> RGB
    maxval = 65535 if arr.dtype == np.uint16 else 255
    return np.ascontiguousarray(arr), maxval


def write_png(path, arr) -> None:
    """Write a uint8/uint16 gray or RGB array as PNG."""
    arr = np.asarray(arr)
    if arr.ndim == 3:
        arr = arr[:, :, ::-1]
    if not cv2.imwrite(str(path), np.ascontiguousarray(arr)):
        raise OSError(f"cannot write image {path}")


def read_image(path):
    """Load a PGM or PNG normalized to ``[0, 1]``.

    Returns
    -------
    (Image or MultiChannelImage, float)
        The image and the integer full-scale value it was divided by.
        Three-channel PNGs become a red/green/blue :class:`MultiChannelImage`.
    """
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".pgm", ".pnm"):
        arr, maxval = read_pgm(path)
    elif ext == ".png":
        arr, maxval = read_png(path)
    else:
        raise ValueError(f"{path}: unsupported image format {ext!r}")
    data = arr.astype(np.float64) / maxval
    if data.ndim == 3:
        return MultiChannelImage([data[:, :, i] for i in range(data.shape[2])], _RGB_NAMES[:data.shape[2]]), maxval
    return Image(data), maxval


def quantize(data, bit_depth: int = 16):
    """Map ``[0, 1]`` floats to integers, clipping out-of-range values."""
    if bit_depth not in (8, 16):
        raise ValueError("bit_depth must be 8 or 16")
    maxval = 255 if bit_depth == 8 else 65535
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    scaled = np.rint(np.clip(np.asarray(data, dtype=np.float64), 0.0, 1.0) * maxval)
    return scaled.astype(dtype)


def write_image(path, image, bit_depth: int = 16) -> None:
    """Write an Image (PGM or PNG) or a 1- or 3-channel MultiChannelImage (PNG)."""
    ext = os.path.splitext(str(path))[1].lower()
    if isinstance(image, MultiChannelImage):
        if len(image) == 1:
            data = image[0].data
        elif len(image) == 3:
            data = image.to_array().transpose(1, 2, 0)
        else:
            raise ValueError(f"cannot store {len(image)} channels in one file")
    else:
        data = np.asarray(image, dtype=np.float64)
    q = quantize(data, bit_depth)
    if ext in (".pgm", ".pnm"):
        write_pgm(path, q)
    elif ext == ".png":
        write_png(path, q)
    else:
        raise ValueError(f"{path}: unsupported image format {ext!r}")
