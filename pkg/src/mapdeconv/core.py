"""Image, PSF and parameter containers shared across the toolkit.

All pixel data is held as read-only float64 arrays so that values can be
passed between workers without defensive copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Image",
    "MultiChannelImage",
    "Psf",
    "DeconvParams",
    "new_image",
    "normalize_psf",
    "as_image",
]

PSF_SUM_TOL = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _check_intensities(arr: np.ndarray, what: str) -> None:
    if arr.ndim != 2:
        raise ValueError(f"{what} must be 2D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{what} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite intensities")
    if np.any(arr < 0):
        raise ValueError(f"{what} contains negative intensities")


class Image:
    """Single-channel nonnegative image on a 2D pixel lattice.

    ``data`` is a read-only ``(height, width)`` float64 array. Integer inputs
    are promoted to float64 without rescaling.
    """

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, copy=True)
        _check_intensities(arr, "image")
        self._data = _frozen(arr)

    @classmethod
    def _trusted(cls, arr: np.ndarray) -> "Image":
        # Skips validation; callers guarantee float64, finite, >= 0.
        obj = cls.__new__(cls)
        obj._data = _frozen(np.ascontiguousarray(arr, dtype=np.float64))
        return obj

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def height(self) -> int:
        return self._data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._data, other._data)

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}({self.width}x{self.height})"


def new_image(width: int, height: int, data) -> Image:
    """Build an :class:`Image` from a flat row-major buffer."""
    if int(width) != width or int(height) != height or width < 1 or height < 1:
        raise ValueError(f"width and height must be positive integers, got {width}x{height}")
    flat = np.asarray(data, dtype=np.float64).ravel()
    if flat.size != width * height:
        raise ValueError(
            f"dimension mismatch: {flat.size} values for a {width}x{height} image"
        )
    return Image(flat.reshape(int(height), int(width)))


def as_image(x) -> Image:
    """Coerce an array-like or Image to :class:`Image`."""
    if isinstance(x, Image):
        return x
    return Image(x)


class Psf(Image):
    """Unit-sum nonnegative kernel with odd side lengths.

    The center pixel is ``(height // 2, width // 2)``.
    """

    __slots__ = ()

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, copy=True)
        _check_intensities(arr, "psf")
        if arr.shape[0] % 2 == 0 or arr.shape[1] % 2 == 0:
            raise ValueError(f"psf dimensions must be odd, got {arr.shape[1]}x{arr.shape[0]}")
        total = arr.sum()
        if abs(total - 1.0) > PSF_SUM_TOL:
            raise ValueError(f"psf must sum to 1 (got {total!r}); use normalize_psf")
        self._data = _frozen(arr)

    @property
    def radius(self) -> tuple[int, int]:
        """Half-sizes ``(ry, rx)`` of the kernel."""
        return self.height // 2, self.width // 2


def normalize_psf(raw) -> Psf:
    """Scale a nonnegative odd-sized kernel to unit sum.

    Raises
    ------
    ValueError
        If the kernel is all zero, has even dimensions, or holds negative or
        non-finite values.
    """
    arr = np.array(raw, dtype=np.float64, copy=True)
    _check_intensities(arr, "psf")
    if arr.shape[0] % 2 == 0 or arr.shape[1] % 2 == 0:
        raise ValueError(f"psf dimensions must be odd, got {arr.shape[1]}x{arr.shape[0]}")
    total = arr.sum()
    if total <= 0:
        raise ValueError("psf is all zero")
    arr /= total
    # A second pass removes the residual rounding error of the first.
    arr /= arr.sum()
    return Psf(arr)


class MultiChannelImage:
    """Ordered, co-registered stack of :class:`Image` channels."""

    __slots__ = ("channels", "channel_names")

    def __init__(self, channels: Sequence, channel_names: Sequence[str] | None = None):
        chans = tuple(as_image(c) for c in channels)
        if not chans:
            raise ValueError("a multichannel image needs at least one channel")
        shape = chans[0].shape
        for c in chans[1:]:
            if c.shape != shape:
                raise ValueError(f"channel shapes differ: {shape} vs {c.shape}")
        if channel_names is None:
            channel_names = [f"ch{i}" for i in range(len(chans))]
        names = tuple(str(n) for n in channel_names)
        if len(names) != len(chans):
            raise ValueError("one name per channel is required")
        self.channels = chans
        self.channel_names = names

    @classmethod
    def from_array(cls, arr, channel_names=None) -> "MultiChannelImage":
        """Build from a ``(channels, height, width)`` array."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[None]
        return cls(list(arr), channel_names)

    def to_array(self) -> np.ndarray:
        return np.stack([c.data for c in self.channels])

    @property
    def shape(self) -> tuple[int, int]:
        return self.channels[0].shape

    @property
    def width(self) -> int:
        return self.channels[0].width

    @property
    def height(self) -> int:
        return self.channels[0].height

    def __len__(self):
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    def __getitem__(self, i) -> Image:
        return self.channels[i]

    def __eq__(self, other):
        if not isinstance(other, MultiChannelImage):
            return NotImplemented
        return self.channel_names == other.channel_names and all(
            a == b for a, b in zip(self.channels, other.channels)
        ) and len(self) == len(other)

    __hash__ = None

    def __repr__(self):
        return f"MultiChannelImage({self.width}x{self.height}, channels={list(self.channel_names)})"


@dataclass(frozen=True)
class DeconvParams:
    """Free parameters of the iterative deconvolution update.

    Defaults are the published MAP-D settings: relaxation 0.2, kernel
    bandwidth 625, a 9x9 (81-sample) window and 50 iterations.
    """

    lam: float = 0.2
    beta: float = 625.0
    window_radius: int = 4
    iterations: int = 50
    epsilon: float = 1e-8
    window_samples: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if int(self.window_radius) != self.window_radius or self.window_radius < 0:
            raise ValueError(f"window_radius must be a nonnegative integer, got {self.window_radius}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        side = 2 * int(self.window_radius) + 1
        if self.window_samples is not None and self.window_samples != side * side:
            raise ValueError(
                f"window of radius {self.window_radius} has {side * side} samples, "
                f"not {self.window_samples}"
            )
        object.__setattr__(self, "window_radius", int(self.window_radius))
        object.__setattr__(self, "iterations", int(self.iterations))
        object.__setattr__(self, "window_samples", side * side)
