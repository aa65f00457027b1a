"""
Simulate a cell population and deconvolve it
=============================================

A synthetic three-channel phantom is blurred and corrupted with Poisson and
detector noise, then restored with Lucy-Richardson, MAP-Hunt and MAP-D.
PSNR against the known ground truth shows how each method trades
sharpening for noise amplification.
"""

import numpy as np

from mapdeconv import DeconvParams, PhantomConfig, deconvolve_multichannel, make_pair, psnr

# A lower-noise acquisition than the default so deblurring has headroom.
config = PhantomConfig(width=128, height=128, cell_count=4, rng_seed=0,
                       photon_scale=2550.0, ccd_noise_variance=1e-4, autofluorescence_energy=0.0)
pair = make_pair(config)


def stacked(img):
    # all channels side by side, one PSNR for the whole image
    return img.to_array().reshape(-1, config.width)


truth = stacked(pair.ground_truth)
print(f"degraded  {psnr(stacked(pair.degraded), truth):6.2f} dB")

params = DeconvParams(lam=0.2, beta=625.0, window_radius=4, iterations=50)
for method in ("lr", "map-hunt", "map-d"):
    restored, traces = deconvolve_multichannel(pair.degraded, pair.psf_used, method, params)
    print(f"{method:9s} {psnr(stacked(restored), truth):6.2f} dB")

# The trace records how far each iteration moved the estimate.
last = traces[0][-1]
print(f"final mean |update| on the cytoplasm channel: {last.mean_abs_update:.2e}")

# Dark background stays dark: the multiplicative update cannot create signal.
print("background max after MAP-D:", float(np.max(restored.to_array()[:, :4, :4])))
