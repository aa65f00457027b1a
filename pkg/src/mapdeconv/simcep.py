"""Synthetic fluorescence cell populations with known ground truth.

A population is rendered into three channels: cytoplasm (irregular elliptical
bodies with smooth texture), nuclei (a smaller ellipse inside each body) and
subcellular structures (small Gaussian spots inside each cytoplasm). The
degraded observation blurs each channel with a PSF, adds a constant
autofluorescence background, draws Poisson photon counts and adds Gaussian
detector noise.

Every random draw comes from a seeded :class:`~mapdeconv.rng.Xoshiro256`
stream, so a config reproduces bit-identical images.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .convolve import BoundaryPolicy, Convolver
from .core import MultiChannelImage, Psf
from .rng import Xoshiro256

__all__ = [
    "PhantomConfig",
    "CellRecord",
    "PhantomPair",
    "CHANNEL_NAMES",
    "generate_phantom",
    "degrade",
    "make_pair",
]

CHANNEL_NAMES = ("cytoplasm", "nuclei", "structures")


@dataclass(frozen=True)
class PhantomConfig:
    width: int = 256
    height: int = 256
    cell_count: int = 10
    subcellular_structures_per_cell: int = 4
    allow_overlap: bool = True
    autofluorescence_energy: float = 0.05
    ccd_noise_variance: float = 0.001
    photon_scale: float = 255.0
    rng_seed: int = 0
    # geometry (pixels / unit intensity)
    cell_radius_min: float = 14.0
    cell_radius_max: float = 22.0
    nucleus_scale_min: float = 0.35
    nucleus_scale_max: float = 0.5
    spot_sigma_min: float = 0.8
    spot_sigma_max: float = 1.3
    cytoplasm_level_min: float = 0.3
    cytoplasm_level_max: float = 0.5
    nucleus_level_min: float = 0.6
    nucleus_level_max: float = 0.9
    spot_amplitude_min: float = 0.7
    spot_amplitude_max: float = 1.0
    texture_amplitude: float = 0.12

    def __post_init__(self):
        for name in ("width", "height"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
        for name in ("cell_count", "subcellular_structures_per_cell"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v}")
        for name in ("autofluorescence_energy", "ccd_noise_variance"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not self.photon_scale > 0 or not math.isfinite(self.photon_scale):
            raise ValueError(f"photon_scale must be positive, got {self.photon_scale}")
        if not 0 < self.cell_radius_min <= self.cell_radius_max:
            raise ValueError("need 0 < cell_radius_min <= cell_radius_max")
        if not 0 < self.nucleus_scale_min <= self.nucleus_scale_max < 1:
            raise ValueError("need 0 < nucleus_scale_min <= nucleus_scale_max < 1")
        if not 0 < self.spot_sigma_min <= self.spot_sigma_max:
            raise ValueError("need 0 < spot_sigma_min <= spot_sigma_max")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ValueError("rng_seed must fit in 64 bits")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CellRecord:
    center: tuple[float, float]
    axes: tuple[float, float]
    angle: float
    nucleus_center: tuple[float, float]
    nucleus_axes: tuple[float, float]
    spots: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class PhantomPair:
    ground_truth: MultiChannelImage
    degraded: MultiChannelImage
    psf_used: Psf
    config_used: PhantomConfig
    cells: tuple[CellRecord, ...] = field(default=(), compare=False)


class _Body:
    """Irregular ellipse: boundary radius perturbed by low-order harmonics."""

    def __init__(self, cx, cy, a, b, angle, harmonics):
        self.cx, self.cy, self.a, self.b, self.angle = cx, cy, a, b, angle
        self.harmonics = harmonics  # (order, amplitude, phase)

    def level(self, x, y):
        """Signed distance proxy: > 0 inside, 0 on the boundary, in pixels."""
        dx = x - self.cx
        dy = y - self.cy
        c, s = math.cos(self.angle), math.sin(self.angle)
        u = c * dx + s * dy
        v = -s * dx + c * dy
        theta = np.arctan2(v, u)
        rho = np.hypot(u, v)
        boundary = (self.a * self.b) / np.hypot(self.b * np.cos(theta), self.a * np.sin(theta))
        scale = 1.0
        for k, amp, phase in self.harmonics:
            scale = scale + amp * np.cos(k * theta + phase)
        return boundary * scale - rho

    def coverage(self, x, y):
        # one-pixel soft edge
        return np.clip(self.level(x, y) + 0.5, 0.0, 1.0)


def _texture(rng: Xoshiro256, x, y, cx, cy, scale, max_amp):
    """Smooth multiplicative modulation in [1 - 2*amp, 1]."""
    amp = rng.uniform(0.0, max_amp)
    out = 0.0
    for _ in range(2):
        kx, ky = rng.uniform(-1, 1), rng.uniform(-1, 1)
        phase = rng.uniform(0, 2 * math.pi)
        freq = 2 * math.pi / (scale * rng.uniform(0.8, 1.6))
        out = out + np.cos(freq * (kx * (x - cx) + ky * (y - cy)) + phase)
    return 1.0 - amp * (1.0 - out / 2.0)


def _render(config: PhantomConfig):
    rng = Xoshiro256(config.rng_seed)
    h, w = config.height, config.width
    rmax = config.cell_radius_max
    if config.cell_count and 2 * rmax + 2 > min(h, w):
        raise ValueError(
            f"cells of radius up to {rmax:g} px cannot be placed in a {w}x{h} image"
        )
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cyto = np.zeros((h, w))
    nuc = np.zeros((h, w))
    spots = np.zeros((h, w))
    placed: list[tuple[float, float, float]] = []
    cells = []
    for _ in range(config.cell_count):
        for _attempt in range(1000):
            a = rng.uniform(config.cell_radius_min, rmax)
            b = a * rng.uniform(0.7, 1.0)
            cx = rng.uniform(rmax + 1, w - rmax - 1)
            cy = rng.uniform(rmax + 1, h - rmax - 1)
            if config.allow_overlap or all(
                math.hypot(cx - px, cy - py) > a + pr for px, py, pr in placed
            ):
                break
        else:
            raise ValueError(
                f"could not place {config.cell_count} non-overlapping cells in a {w}x{h} image"
            )
        angle = rng.uniform(0, math.pi)
        harmonics = [(k, rng.uniform(0.0, 0.06), rng.uniform(0, 2 * math.pi)) for k in (2, 3, 4)]
        body = _Body(cx, cy, a, b, angle, harmonics)
        placed.append((cx, cy, a * 1.2))

        # Restrict work to the cell's bounding box.
        r = int(math.ceil(a * 1.25)) + 2
        y0, y1 = max(int(cy) - r, 0), min(int(cy) + r + 1, h)
        x0, x1 = max(int(cx) - r, 0), min(int(cx) + r + 1, w)
        bx, by = xx[y0:y1, x0:x1], yy[y0:y1, x0:x1]

        level = rng.uniform(config.cytoplasm_level_min, config.cytoplasm_level_max)
        cov = body.coverage(bx, by)
        tex = _texture(rng, bx, by, cx, cy, a, config.texture_amplitude)
        cyto[y0:y1, x0:x1] = np.maximum(cyto[y0:y1, x0:x1], level * cov * tex)

        ns = rng.uniform(config.nucleus_scale_min, config.nucleus_scale_max)
        na, nb = a * ns, b * ns * rng.uniform(0.85, 1.0)
        # Nucleus offset kept small enough to stay inside the body.
        off = rng.uniform(0, 0.3) * (b - nb)
        phi = rng.uniform(0, 2 * math.pi)
        ncx, ncy = cx + off * math.cos(phi), cy + off * math.sin(phi)
        nucleus = _Body(ncx, ncy, na, nb, angle + rng.uniform(-0.3, 0.3), [])
        nlevel = rng.uniform(config.nucleus_level_min, config.nucleus_level_max)
        ntex = _texture(rng, bx, by, ncx, ncy, na, config.texture_amplitude)
        nuc[y0:y1, x0:x1] = np.maximum(nuc[y0:y1, x0:x1], nlevel * nucleus.coverage(bx, by) * ntex)

        centers = []
        while len(centers) < config.subcellular_structures_per_cell:
            sx = rng.uniform(cx - a, cx + a)
            sy = rng.uniform(cy - a, cy + a)
            # keep spots well inside the cytoplasm
            if float(body.level(np.float64(sx), np.float64(sy))) < 0.25 * b:
                continue
            sigma = rng.uniform(config.spot_sigma_min, config.spot_sigma_max)
            amp = rng.uniform(config.spot_amplitude_min, config.spot_amplitude_max)
            spots[y0:y1, x0:x1] += amp * np.exp(-((bx - sx) ** 2 + (by - sy) ** 2) / (2 * sigma * sigma))
            centers.append((sx, sy))
        cells.append(CellRecord((cx, cy), (a, b), angle, (ncx, ncy), (na, nb), tuple(centers)))

    np.clip(spots, 0.0, 1.0, out=spots)
    np.clip(cyto, 0.0, 1.0, out=cyto)
    np.clip(nuc, 0.0, 1.0, out=nuc)
    return MultiChannelImage([cyto, nuc, spots], CHANNEL_NAMES), tuple(cells)


def generate_phantom(config: PhantomConfig = PhantomConfig(), return_log: bool = False):
    """Render a noiseless 3-channel cell population with intensities in [0, 1].

    Channels are ``cytoplasm``, ``nuclei`` and ``structures``. The background
    is exactly zero; autofluorescence is added by :func:`degrade`.

    With ``return_log=True`` also returns the tuple of :class:`CellRecord`
    placements (centres, axes and spot positions).

    Raises
    ------
    ValueError
        If the configured cell size does not fit the image, or
        non-overlapping placement fails.
    """
    image, cells = _render(config)
    if return_log:
        return image, cells
    return image


def degrade(truth, psf, config: PhantomConfig = PhantomConfig(), seed: int = 0,
            boundary=BoundaryPolicy.REFLECT) -> MultiChannelImage:
    """Blur, add background, and apply Poisson and detector noise per channel.

    ``g = Poisson(k * (H (x) f + a)) / k + N(0, v)`` clamped at zero, with
    ``k = photon_scale``, ``a = autofluorescence_energy`` and
    ``v = ccd_noise_variance``.
    """
    if not isinstance(truth, MultiChannelImage):
        truth = MultiChannelImage.from_array(truth)
    rng = Xoshiro256(seed)
    conv = Convolver(psf, truth.shape, boundary)
    scale = float(config.photon_scale)
    sd = math.sqrt(config.ccd_noise_variance)
    out = []
    for ch in truth:
        rate = conv.forward(ch.data) + config.autofluorescence_energy
        g = rng.poisson(scale * rate).astype(np.float64) / scale
        if sd > 0:
            g += rng.normal(0.0, sd, size=g.shape)
        np.maximum(g, 0.0, out=g)
        out.append(g)
    return MultiChannelImage(out, truth.channel_names)


def noise_seed(config: PhantomConfig) -> int:
    """Seed of the noise stream used by :func:`make_pair`."""
    return (config.rng_seed + 1) % 2 ** 64


def make_pair(config: PhantomConfig = PhantomConfig(), psf=None) -> PhantomPair:
    """Ground truth and degraded observation of one population."""
    from .psf import default_psf

    psf = default_psf() if psf is None else psf
    if not isinstance(psf, Psf):
        psf = Psf(psf)
    truth, cells = generate_phantom(config, return_log=True)
    degraded = degrade(truth, psf, config, noise_seed(config))
    return PhantomPair(truth, degraded, psf, config, cells)
