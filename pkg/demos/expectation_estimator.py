"""
The kernel expectation estimator
================================

MAP-D replaces the measured image, used by MAP-Hunt as the prior mean, with
a kernel-weighted local average of the current estimate. Neighbours whose
value is close to the centre pixel get weight near one; across an edge the
weight collapses, so edges survive while flat regions are smoothed.
"""

import numpy as np

from mapdeconv import KernelConfig, expectation_map

rng = np.random.default_rng(0)

# A step edge with mild noise on both sides.
img = np.zeros((40, 40))
img[:, 20:] = 0.5
noisy = np.clip(img + rng.normal(0, 0.02, img.shape), 0, None)

for beta in (0.0, 625.0, 1e5):
    est = expectation_map(noisy, KernelConfig(beta=beta, window_radius=4)).data
    flat_noise = est[:, 5:15].std()
    edge_jump = est[:, 21].mean() - est[:, 18].mean()
    print(f"beta={beta:>8g}  flat-region std {flat_noise:.4f}  edge jump {edge_jump:.3f}")

# beta = 0 is a plain box mean and blurs the edge; beta = 625 keeps it
# while still averaging out noise; very large beta barely smooths at all.
print("input flat-region std", round(float(noisy[:, 5:15].std()), 4))
