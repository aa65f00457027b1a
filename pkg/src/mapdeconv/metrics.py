"""Image quality measures: PSNR, background SNR, Michelson contrast, line profiles.

Infinite results (identical images, noiseless background) are returned as
``math.inf`` and written to CSV as ``inf``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Image, as_image

__all__ = [
    "Rect",
    "LineSegment",
    "MetricReport",
    "psnr",
    "background_snr",
    "contrast",
    "line_profile",
    "write_report_csv",
    "write_profile_csv",
]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle ``[x0, x0 + width) x [y0, y0 + height)``."""

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"empty rectangle {self}")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError(f"rectangle origin outside image: {self}")

    def slices(self, image: Image):
        if self.x0 + self.width > image.width or self.y0 + self.height > image.height:
            raise ValueError(f"{self} exceeds {image.width}x{image.height} image")
        return slice(self.y0, self.y0 + self.height), slice(self.x0, self.x0 + self.width)

    def overlaps(self, other: "Rect") -> bool:
        return not (self.x0 + self.width <= other.x0 or other.x0 + other.width <= self.x0
                    or self.y0 + self.height <= other.y0 or other.y0 + other.height <= self.y0)

    @classmethod
    def parse(cls, text: str) -> "Rect":
        """From ``"x0,y0,width,height"``."""
        parts = [int(p) for p in str(text).replace(" ", "").split(",")]
        if len(parts) != 4:
            raise ValueError(f"rectangle needs 4 integers x0,y0,width,height, got {text!r}")
        return cls(*parts)


@dataclass(frozen=True)
class LineSegment:
    """Segment between two pixel coordinates, endpoints inclusive."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def length(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    def check(self, image: Image) -> None:
        for x, y in ((self.x0, self.y0), (self.x1, self.y1)):
            if not (0 <= x <= image.width - 1 and 0 <= y <= image.height - 1):
                raise ValueError(f"segment endpoint ({x}, {y}) outside {image.width}x{image.height} image")

    @classmethod
    def parse(cls, text: str) -> "LineSegment":
        """From ``"x0,y0,x1,y1"``."""
        parts = [float(p) for p in str(text).replace(" ", "").split(",")]
        if len(parts) != 4:
            raise ValueError(f"segment needs 4 numbers x0,y0,x1,y1, got {text!r}")
        return cls(*parts)


@dataclass
class MetricReport:
    """Metrics of one image; absent measurements are ``None`` and omitted from CSV."""

    method_label: str
    background_snr: float | None
    contrast: float | None
    psnr: float | None = None
    contrast_kind: str = "michelson"
    profiles: dict[str, np.ndarray] = field(default_factory=dict)


def _pair(test, reference):
    a, b = as_image(test), as_image(reference)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a.data, b.data


def psnr(test, reference) -> float:
    """Peak signal-to-noise ratio in dB, with the peak taken from ``reference``."""
    a, b = _pair(test, reference)
    peak = b.max()
    if peak <= 0:
        raise ValueError("reference peak must be positive")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return math.inf
    return float(10.0 * math.log10(peak * peak / mse))


def background_snr(image, background_region: Rect, signal_region: Rect) -> float:
    """``20 log10(mean(signal) / std(background))`` in dB."""
    img = as_image(image)
    if background_region.overlaps(signal_region):
        raise ValueError("background and signal regions overlap")
    bg = img.data[background_region.slices(img)]
    sig = img.data[signal_region.slices(img)]
    sd = float(np.std(bg))
    if sd == 0:
        return math.inf
    mean = float(np.mean(sig))
    if mean <= 0:
        raise ValueError("signal region mean must be positive")
    return 20.0 * math.log10(mean / sd)


def contrast(image, region: Rect | None = None) -> float:
    """Michelson contrast ``(max - min) / (max + min)`` over ``region``."""
    img = as_image(image)
    vals = img.data if region is None else img.data[region.slices(img)]
    hi, lo = float(vals.max()), float(vals.min())
    if hi + lo == 0:
        raise ValueError("contrast undefined on an all-zero region")
    return (hi - lo) / (hi + lo)


def _bilinear(f: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h, w = f.shape
    x0 = np.clip(np.floor(x).astype(int), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(y).astype(int), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    tx = x - x0
    ty = y - y0
    top = f[y0, x0] * (1 - tx) + f[y0, x1] * tx
    bot = f[y1, x0] * (1 - tx) + f[y1, x1] * tx
    return top * (1 - ty) + bot * ty


def line_profile(image, segment: LineSegment, normalize: bool = False) -> np.ndarray:
    """Bilinearly interpolated samples at unit spacing from start to end.

    A segment of length ``L`` yields ``floor(L) + 1`` samples. Samples on
    integer coordinates are exact pixel reads.
    """
    img = as_image(image)
    segment.check(img)
    length = segment.length
    n = int(math.floor(length + 1e-9)) + 1
    if length == 0:
        t = np.zeros(1)
        dx = dy = 0.0
    else:
        t = np.arange(n, dtype=np.float64)
        dx = (segment.x1 - segment.x0) / length
        dy = (segment.y1 - segment.y0) / length
    xs = segment.x0 + t * dx
    ys = segment.y0 + t * dy
    # Snap round-off so axis-aligned and diagonal samples hit pixel centres exactly.
    for arr in (xs, ys):
        r = np.rint(arr)
        close = np.abs(arr - r) < 1e-9
        arr[close] = r[close]
    prof = _bilinear(img.data, xs, ys)
    if normalize:
        m = prof.max()
        if m <= 0:
            raise ValueError("cannot normalize a profile whose maximum is zero")
        prof = prof / m
    return prof


def _fmt(v) -> str:
    if v is None:
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def write_report_csv(reports, path=None) -> str:
    """One row per method per metric: ``method,metric,value``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "metric", "value"])
    for r in reports:
        if r.psnr is not None:
            w.writerow([r.method_label, "psnr", _fmt(r.psnr)])
        if r.background_snr is not None:
            w.writerow([r.method_label, "background_snr", _fmt(r.background_snr)])
        if r.contrast is not None:
            w.writerow([r.method_label, f"contrast_{r.contrast_kind}", _fmt(r.contrast)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def write_profile_csv(profile, path=None) -> str:
    """``t,intensity`` per sample."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "intensity"])
    for i, v in enumerate(np.asarray(profile)):
        w.writerow([i, repr(float(v))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
