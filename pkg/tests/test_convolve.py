import numpy as np
import pytest
from scipy import ndimage

from mapdeconv.convolve import BoundaryPolicy, convolve_direct, convolve_fft, flip_psf
from mapdeconv.core import Image, normalize_psf
from mapdeconv.psf import PsfModel, render_psf

from conftest import random_psf

POLICIES = list(BoundaryPolicy)
_SCIPY_MODE = {BoundaryPolicy.REFLECT: "reflect", BoundaryPolicy.REPLICATE: "nearest",
               BoundaryPolicy.ZERO_PAD: "constant"}


def brute_force(f, k, boundary):
    """Per-pixel sum over kernel taps with explicit index extension."""
    h, w = f.shape
    ry, rx = k.shape[0] // 2, k.shape[1] // 2

    def ext(i, n):
        if boundary is BoundaryPolicy.REFLECT:
            period = 2 * n
            i %= period
            return i if i < n else period - 1 - i
        return min(max(i, 0), n - 1)

    out = np.zeros_like(f)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for u in range(-ry, ry + 1):
                for v in range(-rx, rx + 1):
                    yy, xx = y - u, x - v
                    if boundary is BoundaryPolicy.ZERO_PAD and not (0 <= yy < h and 0 <= xx < w):
                        continue
                    acc += k[u + ry, v + rx] * f[ext(yy, h), ext(xx, w)]
            out[y, x] = acc
    return out


@pytest.mark.parametrize("boundary", POLICIES)
def test_direct_matches_brute_force(rng, boundary):
    f = rng.random((7, 9))
    psf = random_psf(rng, 1, 2)
    expected = brute_force(f, psf.data, boundary)
    np.testing.assert_allclose(convolve_direct(f, psf, boundary).data, expected, rtol=0, atol=1e-13)


@pytest.mark.parametrize("boundary", POLICIES)
def test_direct_matches_scipy_ndimage(rng, boundary):
    f = rng.random((20, 17))
    psf = random_psf(rng, 3, 2)
    expected = ndimage.convolve(f, psf.data, mode=_SCIPY_MODE[boundary], cval=0.0)
    np.testing.assert_allclose(convolve_direct(f, psf, boundary).data, expected, rtol=0, atol=1e-13)


@pytest.mark.parametrize("conv", [convolve_direct, convolve_fft])
def test_identity_kernel(rng, conv):
    f = rng.random((6, 5))
    out = conv(f, normalize_psf([[1.0]]))
    np.testing.assert_allclose(out.data, f, rtol=0, atol=1e-9)


@pytest.mark.parametrize("conv", [convolve_direct, convolve_fft])
def test_constant_preserved_reflect(rng, conv):
    f = np.full((11, 13), 0.37)
    out = conv(f, random_psf(rng, 2, 3), BoundaryPolicy.REFLECT)
    np.testing.assert_allclose(out.data, 0.37, rtol=0, atol=1e-12)
    assert abs(out.data.mean() - 0.37) < 1e-12


@pytest.mark.parametrize("conv,tol", [(convolve_direct, 0.0), (convolve_fft, 1e-9)])
def test_delta_reproduces_kernel(rng, conv, tol):
    f = np.zeros((5, 5))
    f[2, 2] = 1.0
    psf = random_psf(rng, 1, 1)
    out = conv(f, psf, BoundaryPolicy.ZERO_PAD).data
    expected = np.zeros((5, 5))
    expected[1:4, 1:4] = psf.data
    np.testing.assert_allclose(out, expected, rtol=0, atol=tol)


@pytest.mark.parametrize("boundary", POLICIES)
def test_fft_matches_direct_64(rng, boundary):
    f = rng.random((64, 64))
    psf = random_psf(rng, 4, 4)
    a = convolve_fft(f, psf, boundary).data
    b = convolve_direct(f, psf, boundary).data
    assert np.max(np.abs(a - b)) <= 1e-9 * f.max()


def test_psf_larger_than_image_rejected():
    psf = render_psf(PsfModel.gaussian(1.0, 3))
    for conv in (convolve_direct, convolve_fft):
        with pytest.raises(ValueError, match="larger"):
            conv(np.ones((5, 9)), psf)


def test_fft_output_nonnegative(rng):
    f = np.zeros((32, 32))
    f[5, 5] = 1.0
    out = convolve_fft(f, render_psf(PsfModel.gaussian(1.5, 5)), BoundaryPolicy.ZERO_PAD)
    assert out.data.min() >= 0.0


def test_flip_symmetric_gaussian():
    p = render_psf(PsfModel.gaussian(1.3, 4))
    np.testing.assert_array_equal(flip_psf(p).data, p.data)


def test_flip_corner():
    raw = np.zeros((3, 3))
    raw[0, 0] = 1.0
    out = flip_psf(normalize_psf(raw)).data
    assert out[2, 2] == 1.0 and out.sum() == 1.0


def test_flip_involution(rng):
    p = random_psf(rng, 1, 1)
    twice = flip_psf(flip_psf(p))
    assert twice.data.tobytes() == p.data.tobytes()
    assert abs(flip_psf(p).data.sum() - 1.0) <= 1e-12


def test_adjoint_identity_zero_pad(rng):
    psf = random_psf(rng, 2, 3)
    a = np.zeros((30, 31))
    b = np.zeros((30, 31))
    a[2:-2, 3:-3] = rng.random((26, 25))
    b[2:-2, 3:-3] = rng.random((26, 25))
    lhs = np.sum(convolve_direct(a, psf, "zero").data * b)
    rhs = np.sum(a * convolve_direct(b, flip_psf(psf), "zero").data)
    assert abs(lhs - rhs) <= 1e-9
    # same identity on the FFT path
    lhs = np.sum(convolve_fft(a, psf, "zero").data * b)
    rhs = np.sum(a * convolve_fft(b, flip_psf(psf), "zero").data)
    assert abs(lhs - rhs) <= 1e-9


def test_boundary_coerce():
    assert BoundaryPolicy.coerce("Reflect") is BoundaryPolicy.REFLECT
    with pytest.raises(ValueError):
        BoundaryPolicy.coerce("wrap")
