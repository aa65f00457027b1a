import math
import warnings

import numpy as np
import pytest
from scipy import special

from mapdeconv.convolve import convolve_fft, flip_psf
from mapdeconv.imageio import write_image
from mapdeconv.metrics import contrast
from mapdeconv.psf import AIRY_FIRST_ZERO, PsfModel, bessel_j1, default_psf, load_psf, render_psf, save_psf


def test_bessel_j1_against_scipy():
    x = np.linspace(-60, 60, 2001)
    assert np.max(np.abs(bessel_j1(x) - special.j1(x))) < 1e-12


def test_airy_first_zero_constant():
    assert abs(special.j1(AIRY_FIRST_ZERO)) < 1e-15


def test_disk_radius_zero_is_identity():
    p = render_psf(PsfModel.disk(0.0))
    assert p.data.shape == (1, 1) and p.data[0, 0] == 1.0


def test_gaussian_center_neighbor_ratio():
    p = render_psf(PsfModel.gaussian(1.0, 4)).data
    assert p[4, 4] / p[4, 5] == pytest.approx(math.exp(0.5), rel=1e-12)
    assert math.exp(0.5) == pytest.approx(1.6487, abs=1e-4)


def test_airy_zero_on_axis():
    p = render_psf(PsfModel.airy(5.0, 8)).data
    assert p[8, 13] < 1e-6 * p[8, 8]
    # sampled profile follows the closed form
    r = np.arange(1, 9)
    x = AIRY_FIRST_ZERO * r / 5.0
    expected = (2 * special.j1(x) / x) ** 2
    np.testing.assert_allclose(p[8, 9:] / p[8, 8], expected, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("model", [PsfModel.gaussian(2.0, 6), PsfModel.airy(3.0, 7), PsfModel.disk(2.5, 3)])
def test_rendered_invariants(model):
    p = render_psf(model)
    assert p.data.min() >= 0
    assert abs(p.data.sum() - 1.0) <= 1e-12
    assert p.data.shape == (model.size, model.size)
    np.testing.assert_allclose(flip_psf(p).data, p.data, rtol=0, atol=1e-15)


def test_wider_gaussian_lowers_contrast(rng):
    img = rng.random((48, 48)) ** 3
    c1 = contrast(convolve_fft(img, render_psf(PsfModel.gaussian(1.0, 5))))
    c2 = contrast(convolve_fft(img, render_psf(PsfModel.gaussian(2.0, 8))))
    assert c2 < c1 < contrast(img)


def test_small_support_warns():
    with pytest.warns(UserWarning, match="mass"):
        render_psf(PsfModel.gaussian(3.0, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        render_psf(PsfModel.gaussian(2.0, 6))


def test_default_psf():
    p = default_psf()
    assert p.data.shape == (13, 13)
    np.testing.assert_array_equal(p.data, render_psf(PsfModel.gaussian(2.0, 6)).data)


def test_model_validation():
    with pytest.raises(ValueError):
        PsfModel("lorentz", 1.0)
    with pytest.raises(ValueError):
        PsfModel.gaussian(0.0)
    with pytest.raises(ValueError):
        PsfModel.gaussian(1.0, -1)


def test_load_text_identity(tmp_path):
    path = tmp_path / "id.txt"
    path.write_text("1 1\n1.0\n")
    p = load_psf(path)
    assert p.data.shape == (1, 1) and p.data[0, 0] == 1.0


def test_save_load_roundtrip(tmp_path):
    p = render_psf(PsfModel.gaussian(1.7, 5))
    save_psf(p, tmp_path / "g.txt")
    q = load_psf(tmp_path / "g.txt")
    np.testing.assert_allclose(q.data, p.data, rtol=0, atol=1e-9)
    assert (tmp_path / "g.txt").read_text().splitlines()[0] == "11 11"


def test_load_bead_image(tmp_path):
    yy, xx = np.mgrid[-4:5, -4:5]
    bead = 0.02 + 0.9 * np.exp(-(xx ** 2 + yy ** 2) / 4.0)
    write_image(tmp_path / "bead.png", bead, 16)
    p = load_psf(tmp_path / "bead.png")
    assert abs(p.data.sum() - 1.0) <= 1e-12
    assert p.data.argmax() == 40


@pytest.mark.parametrize("text,msg", [
    ("2 1\n1.0\n", "expected 2 values"),
    ("1 2\n1.0\n", "declares 2 rows"),
    ("1 1\nabc\n", "non-numeric"),
    ("x\n1\n", "width height"),
    ("1 1\n0.0\n", "all zero"),
    ("2 1\n0.5 0.5\n", "odd"),
])
def test_load_text_errors(tmp_path, text, msg):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ValueError, match=msg):
        load_psf(path)
