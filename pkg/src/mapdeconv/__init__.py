"""Bayesian deconvolution for fluorescence microscopy.

MAP deconvolution with a dynamically updated kernel-based estimate of the
nonstationary prior expectation (MAP-D), with Lucy-Richardson and MAP-Hunt
baselines, a synthetic cell-population simulator and image quality metrics.
"""

__version__ = "0.1.0"

from .convolve import BoundaryPolicy, convolve_direct, convolve_fft, flip_psf
from .core import DeconvParams, Image, MultiChannelImage, Psf, new_image, normalize_psf
from .deconv import (IterationTrace, Method, NumericalError, deconvolve, deconvolve_multichannel,
                     lr_step, mapd_step, maphunt_step)
from .expectation import KernelConfig, expectation_map, expectation_map_reference, kernel_weight
from .metrics import LineSegment, MetricReport, Rect, background_snr, contrast, line_profile, psnr
from .psf import PsfModel, load_psf, render_psf, save_psf
from .simcep import PhantomConfig, PhantomPair, degrade, generate_phantom, make_pair

__all__ = [
    "BoundaryPolicy", "convolve_direct", "convolve_fft", "flip_psf",
    "DeconvParams", "Image", "MultiChannelImage", "Psf", "new_image", "normalize_psf",
    "IterationTrace", "Method", "NumericalError", "deconvolve", "deconvolve_multichannel",
    "lr_step", "mapd_step", "maphunt_step",
    "KernelConfig", "expectation_map", "expectation_map_reference", "kernel_weight",
    "LineSegment", "MetricReport", "Rect", "background_snr", "contrast", "line_profile", "psnr",
    "PsfModel", "load_psf", "render_psf", "save_psf",
    "PhantomConfig", "PhantomPair", "degrade", "generate_phantom", "make_pair",
]
