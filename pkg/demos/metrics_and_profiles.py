"""
Quality metrics and line profiles
=================================

PSNR needs a ground truth; background SNR and Michelson contrast work on a
single image given hand-picked rectangles; line profiles sample along a
segment at unit spacing for plotting elsewhere.
"""

import numpy as np

from mapdeconv import (LineSegment, PhantomConfig, Rect, background_snr, contrast, generate_phantom,
                       line_profile, psnr)
from mapdeconv.metrics import write_profile_csv

truth = generate_phantom(PhantomConfig(width=96, height=96, cell_count=2, rng_seed=5))[0].data
rng = np.random.default_rng(1)
noisy = np.clip(truth + rng.normal(0, 0.05, truth.shape), 0, None)

print(f"PSNR {psnr(noisy, truth):.2f} dB")

# Background in a corner, signal on the brightest 8x8 patch of the truth.
y, x = np.unravel_index(np.argmax(truth), truth.shape)
sig = Rect(int(min(max(x - 4, 0), 88)), int(min(max(y - 4, 0), 88)), 8, 8)
bg = Rect(0, 0, 8, 8)
if bg.overlaps(sig):
    bg = Rect(88, 88, 8, 8)
print(f"background SNR {background_snr(noisy, bg, sig):.2f} dB")
print(f"contrast {contrast(noisy, sig):.3f}")

# Horizontal profile through the brightest pixel, normalized to its maximum.
seg = LineSegment(0, y, 95, y)
prof = line_profile(noisy, seg, normalize=True)
print(f"{len(prof)} samples; first lines of the CSV:")
print("\n".join(write_profile_csv(prof).splitlines()[:4]))
