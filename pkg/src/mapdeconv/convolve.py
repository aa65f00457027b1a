"""2D convolution with explicit boundary handling.

:func:`convolve_direct` is a shift-and-add spatial implementation kept as the
reference for the FFT path in :func:`convolve_fft`. Both extend the image by
the kernel radius according to a :class:`BoundaryPolicy` and return an image
of the input size.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy import fft as sfft

from .core import Image, Psf, as_image

__all__ = ["BoundaryPolicy", "convolve_direct", "convolve_fft", "flip_psf", "Convolver"]


class BoundaryPolicy(enum.Enum):
    """How the image is extended past its edges.

    ``REFLECT`` mirrors about the pixel edge (``d c b a | a b c d``).
    """

    REFLECT = "reflect"
    REPLICATE = "replicate"
    ZERO_PAD = "zero"

    @classmethod
    def coerce(cls, value) -> "BoundaryPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown boundary policy {value!r}") from None


_NP_PAD_MODE = {
    BoundaryPolicy.REFLECT: "symmetric",
    BoundaryPolicy.REPLICATE: "edge",
    BoundaryPolicy.ZERO_PAD: "constant",
}


def _pad(data: np.ndarray, ry: int, rx: int, boundary: BoundaryPolicy) -> np.ndarray:
    return np.pad(data, ((ry, ry), (rx, rx)), mode=_NP_PAD_MODE[boundary])


def _check_sizes(image: Image, psf: Psf) -> None:
    if psf.height > image.height or psf.width > image.width:
        raise ValueError(
            f"psf ({psf.width}x{psf.height}) is larger than image ({image.width}x{image.height})"
        )


def _as_psf(psf) -> Psf:
    return psf if isinstance(psf, Psf) else Psf(psf)


def convolve_direct(image, psf, boundary=BoundaryPolicy.REFLECT) -> Image:
    """Spatial convolution ``out(s) = sum_u H(u) f(s - u)``."""
    image, psf = as_image(image), _as_psf(psf)
    boundary = BoundaryPolicy.coerce(boundary)
    _check_sizes(image, psf)
    ry, rx = psf.radius
    padded = _pad(image.data, ry, rx, boundary)
    h, w = image.shape
    kernel = psf.data
    out = np.zeros((h, w))
    # out[y, x] = sum_{u,v} k[u, v] * padded[y + 2ry - u, x + 2rx - v]
    for u in range(kernel.shape[0]):
        for v in range(kernel.shape[1]):
            k = kernel[u, v]
            if k == 0.0:
                continue
            oy = 2 * ry - u
            ox = 2 * rx - v
            out += k * padded[oy:oy + h, ox:ox + w]
    return Image._trusted(out)


class Convolver:
    """FFT convolution with a fixed kernel and image shape.

    Caches the kernel transform so repeated calls inside an iterative solver
    pay for two transforms per call instead of three.
    """

    def __init__(self, psf, shape, boundary=BoundaryPolicy.REFLECT):
        self.psf = _as_psf(psf)
        self.boundary = BoundaryPolicy.coerce(boundary)
        self.shape = tuple(shape)
        h, w = self.shape
        if self.psf.height > h or self.psf.width > w:
            raise ValueError(
                f"psf ({self.psf.width}x{self.psf.height}) is larger than image ({w}x{h})"
            )
        ry, rx = self.psf.radius
        # Padded image (h + 2ry) convolved linearly with the kernel (2ry + 1).
        full = (h + 4 * ry, w + 4 * rx)
        self._fshape = tuple(sfft.next_fast_len(n, real=True) for n in full)
        self._otf = sfft.rfft2(self.psf.data, self._fshape)
        self._otf_flipped = sfft.rfft2(self.psf.data[::-1, ::-1], self._fshape)

    def _apply(self, data: np.ndarray, otf: np.ndarray) -> np.ndarray:
        ry, rx = self.psf.radius
        h, w = self.shape
        padded = _pad(data, ry, rx, self.boundary)
        spec = sfft.rfft2(padded, self._fshape)
        full = sfft.irfft2(spec * otf, self._fshape)
        out = full[2 * ry:2 * ry + h, 2 * rx:2 * rx + w]
        # FFT round-off can dip slightly below zero.
        return np.maximum(out, 0.0)

    def forward(self, data: np.ndarray) -> np.ndarray:
        """``H (x) data`` as a plain array."""
        return self._apply(np.asarray(data, dtype=np.float64), self._otf)

    def adjoint(self, data: np.ndarray) -> np.ndarray:
        """``H_{-s} (x) data``: convolution with the 180-degree rotated kernel."""
        return self._apply(np.asarray(data, dtype=np.float64), self._otf_flipped)


def convolve_fft(image, psf, boundary=BoundaryPolicy.REFLECT) -> Image:
    """FFT-based linear convolution, same contract as :func:`convolve_direct`."""
    image = as_image(image)
    conv = Convolver(psf, image.shape, boundary)
    return Image._trusted(conv.forward(image.data))


def flip_psf(psf) -> Psf:
    """Rotate a kernel by 180 degrees (the adjoint kernel)."""
    psf = _as_psf(psf)
    flipped = Psf.__new__(Psf)
    flipped._data = psf.data[::-1, ::-1].copy()
    flipped._data.setflags(write=False)
    return flipped
