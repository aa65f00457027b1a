import numpy as np
import pytest

from mapdeconv.core import normalize_psf
from mapdeconv.psf import PsfModel, render_psf


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gauss_psf():
    return render_psf(PsfModel.gaussian(1.0, 2))


def random_psf(rng, ry, rx):
    return normalize_psf(rng.random((2 * ry + 1, 2 * rx + 1)) + 1e-3)
