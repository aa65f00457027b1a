"""
Point spread function models
============================

Three analytic PSFs are available: Gaussian, Airy disk and uniform disk.
Each is sampled on an odd grid and normalized to unit sum.
"""

import numpy as np

from mapdeconv import PsfModel, render_psf
from mapdeconv.psf import AIRY_FIRST_ZERO

for model in (PsfModel.gaussian(2.0), PsfModel.airy(3.0), PsfModel.disk(3.0)):
    psf = render_psf(model).data
    ry = psf.shape[0] // 2
    print(f"{model.kind:8s} size {psf.shape}  sum {psf.sum():.15f}  centre {psf[ry, ry]:.4f}")

# The Airy width is the radius of the first dark ring.
airy = render_psf(PsfModel.airy(3.0)).data
r = airy.shape[0] // 2
print("airy row through the centre:")
print(np.array2string(airy[r, r:] / airy[r, r], precision=3))
print(f"first zero of J1 at x = {AIRY_FIRST_ZERO:.6f}")
