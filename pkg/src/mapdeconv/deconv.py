"""Iterative Bayesian deconvolution under a Poisson likelihood.

Three update rules share one engine:

* Lucy-Richardson, the multiplicative maximum-likelihood step
  ``f <- f * [H_{-s} (x) (g / (H (x) f))]``;
* MAP-Hunt, which adds a Gaussian-prior pull ``lam * f * (g - f)`` toward the
  measured image;
* MAP-D, which pulls toward the kernel-weighted local expectation of the
  current iterate instead, ``lam * f * (E(f) - f)``.

Every method starts from the measured image, runs a fixed number of steps and
clamps the iterate at zero after each step.
"""

from __future__ import annotations

import csv
import enum
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .convolve import BoundaryPolicy, Convolver
from .core import DeconvParams, Image, MultiChannelImage, Psf, as_image
from .expectation import _expectation_array

__all__ = [
    "Method",
    "IterationRecord",
    "IterationTrace",
    "NumericalError",
    "lr_step",
    "maphunt_step",
    "mapd_step",
    "deconvolve",
    "deconvolve_multichannel",
]


class Method(enum.Enum):
    LUCY_RICHARDSON = "lr"
    MAP_HUNT = "map-hunt"
    MAP_D = "map-d"

    @classmethod
    def coerce(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        aliases = {"lucy-richardson": "lr", "richardson-lucy": "lr", "rl": "lr",
                   "maphunt": "map-hunt", "mapd": "map-d"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown method {value!r}; choose lr, map-hunt or map-d") from None


class NumericalError(ArithmeticError):
    """An iterate became non-finite."""

    def __init__(self, iteration: int, method: Method):
        super().__init__(f"non-finite values in {method.value} iterate at iteration {iteration}")
        self.iteration = iteration
        self.method = method


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    mean_abs_update: float
    min: float
    max: float
    psnr: float | None = None


@dataclass
class IterationTrace:
    """Per-iteration convergence statistics of one deconvolution run."""

    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def to_csv(self, path=None) -> str:
        """Write ``iter,mean_abs_update,min,max,psnr``; psnr is blank without ground truth."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "mean_abs_update", "min", "max", "psnr"])
        for r in self.records:
            writer.writerow([
                r.iteration,
                repr(r.mean_abs_update),
                repr(r.min),
                repr(r.max),
                "" if r.psnr is None else repr(r.psnr),
            ])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


# -- array-level steps ---------------------------------------------------------

def _lr(f, g, conv: Convolver, eps):
    blurred = conv.forward(f)
    ratio = g / np.maximum(blurred, eps)
    return f * conv.adjoint(ratio)


def _step(f, g, conv, method, lam, beta, radius, eps):
    out = _lr(f, g, conv, eps)
    if lam != 0.0:
        if method is Method.MAP_D:
            target = _expectation_array(f, beta, radius)
        elif method is Method.MAP_HUNT:
            target = g
        else:
            target = None
        if target is not None:
            out = out + lam * f * (target - f)
            np.maximum(out, 0.0, out=out)
    return out


def _check_pair(iterate: Image, measured: Image):
    if iterate.shape != measured.shape:
        raise ValueError(f"dimension mismatch: iterate {iterate.shape} vs measured {measured.shape}")


def lr_step(iterate, measured, psf, epsilon: float = 1e-8,
            boundary=BoundaryPolicy.REFLECT) -> Image:
    """One Lucy-Richardson update with ratio denominator floored at ``epsilon``."""
    f, g = as_image(iterate), as_image(measured)
    _check_pair(f, g)
    conv = Convolver(psf, f.shape, boundary)
    return Image._trusted(_lr(f.data, g.data, conv, epsilon))


def maphunt_step(iterate, measured, psf, lam: float, epsilon: float = 1e-8,
                 boundary=BoundaryPolicy.REFLECT) -> Image:
    """Lucy-Richardson update plus ``lam * f * (g - f)``, clamped at zero."""
    f, g = as_image(iterate), as_image(measured)
    _check_pair(f, g)
    conv = Convolver(psf, f.shape, boundary)
    out = _step(f.data, g.data, conv, Method.MAP_HUNT, lam, 0.0, 0, epsilon)
    return Image._trusted(out)


def mapd_step(iterate, measured, psf, params: DeconvParams = DeconvParams(),
              boundary=BoundaryPolicy.REFLECT) -> Image:
    """Lucy-Richardson update plus ``lam * f * (E(f) - f)``, clamped at zero.

    ``E(f)`` is the kernel-weighted local expectation of the current iterate
    (see :func:`mapdeconv.expectation.expectation_map`).
    """
    f, g = as_image(iterate), as_image(measured)
    _check_pair(f, g)
    conv = Convolver(psf, f.shape, boundary)
    out = _step(f.data, g.data, conv, Method.MAP_D, params.lam, params.beta,
                params.window_radius, params.epsilon)
    return Image._trusted(out)


def _psnr_array(test, ref):
    mse = np.mean((test - ref) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(ref.max() ** 2 / mse))


def deconvolve(measured, psf, method=Method.MAP_D, params: DeconvParams = DeconvParams(),
               ground_truth=None, boundary=BoundaryPolicy.REFLECT, callback=None):
    """Run ``params.iterations`` steps of ``method`` starting from ``measured``.

    Parameters
    ----------
    measured : Image or array_like
        Observed blurred, noisy image ``g``.
    psf : Psf
        Unit-sum blur kernel.
    method : Method or str
        ``"lr"``, ``"map-hunt"`` or ``"map-d"``. Lucy-Richardson ignores
        ``params.lam``; MAP-Hunt ignores ``beta`` and the window.
    params : DeconvParams
    ground_truth : Image, optional
        When given, the trace records PSNR of every iterate against it.
    callback : callable, optional
        Called as ``callback(iteration, iterate_array)`` after each step.

    Returns
    -------
    (Image, IterationTrace)

    Raises
    ------
    NumericalError
        If an iterate contains NaN or infinity.
    """
    method = Method.coerce(method)
    g = as_image(measured)
    truth = None
    if ground_truth is not None:
        truth = as_image(ground_truth)
        if truth.shape != g.shape:
            raise ValueError(f"dimension mismatch: ground truth {truth.shape} vs measured {g.shape}")
    conv = Convolver(psf, g.shape, boundary)
    lam = 0.0 if method is Method.LUCY_RICHARDSON else float(params.lam)
    gd = g.data
    f = gd.copy()
    trace = IterationTrace()
    for j in range(1, params.iterations + 1):
        nxt = _step(f, gd, conv, method, lam, params.beta, params.window_radius, params.epsilon)
        if not np.all(np.isfinite(nxt)):
            raise NumericalError(j, method)
        trace.records.append(IterationRecord(
            iteration=j,
            mean_abs_update=float(np.mean(np.abs(nxt - f))),
            min=float(nxt.min()),
            max=float(nxt.max()),
            psnr=None if truth is None else _psnr_array(nxt, truth.data),
        ))
        f = nxt
        if callback is not None:
            callback(j, f)
    return Image._trusted(f), trace


def deconvolve_multichannel(measured: MultiChannelImage, psf, method=Method.MAP_D,
                            params: DeconvParams = DeconvParams(), ground_truth=None,
                            boundary=BoundaryPolicy.REFLECT, threads: int = 1):
    """Deconvolve each channel independently with the same PSF and parameters.

    Channels may run concurrently (``threads > 1``); output is identical
    regardless of the thread count.

    Returns
    -------
    (MultiChannelImage, list of IterationTrace)
    """
    if not isinstance(measured, MultiChannelImage):
        measured = MultiChannelImage.from_array(measured)
    truths = [None] * len(measured)
    if ground_truth is not None:
        if not isinstance(ground_truth, MultiChannelImage):
            ground_truth = MultiChannelImage.from_array(ground_truth)
        if len(ground_truth) != len(measured):
            raise ValueError("ground truth and measured channel counts differ")
        truths = list(ground_truth.channels)

    def run(i):
        return deconvolve(measured[i], psf, method, params, truths[i], boundary)

    if threads > 1 and len(measured) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(len(measured))))
    else:
        results = [run(i) for i in range(len(measured))]
    out = MultiChannelImage([r[0] for r in results], measured.channel_names)
    return out, [r[1] for r in results]
