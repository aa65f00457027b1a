import numpy as np
import pytest

from mapdeconv.convolve import convolve_direct, convolve_fft
from mapdeconv.core import DeconvParams, Image, MultiChannelImage, normalize_psf
from mapdeconv.deconv import (Method, NumericalError, deconvolve, deconvolve_multichannel, lr_step,
                              mapd_step, maphunt_step)
from mapdeconv.metrics import psnr
from mapdeconv.psf import PsfModel, render_psf
from mapdeconv.simcep import PhantomConfig, make_pair

# Noise regime where deconvolution has headroom (see test_acceptance for the paper settings).
LOW_NOISE = dict(photon_scale=2550.0, ccd_noise_variance=1e-4, autofluorescence_energy=0.0)


@pytest.fixture(scope="module")
def small_pair():
    cfg = PhantomConfig(width=64, height=64, cell_count=3, cell_radius_min=8, cell_radius_max=12,
                        rng_seed=11, **LOW_NOISE)
    return make_pair(cfg, render_psf(PsfModel.gaussian(1.5, 4)))


def lr_by_hand(f, g, psf, eps):
    # direct-convolution route, independent of the FFT engine
    blurred = convolve_direct(f, psf).data
    return f * convolve_direct(g / np.maximum(blurred, eps), np.ascontiguousarray(psf.data[::-1, ::-1])).data


def test_lr_step_matches_direct_route(rng, gauss_psf):
    f = rng.random((24, 20)) + 0.1
    g = rng.random((24, 20)) + 0.1
    out = lr_step(f, g, gauss_psf).data
    np.testing.assert_allclose(out, lr_by_hand(f, g, gauss_psf, 1e-8), rtol=1e-10, atol=1e-12)


def test_lr_fixed_point(rng, gauss_psf):
    f = rng.random((20, 20)) + 0.2
    g = convolve_fft(f, gauss_psf)
    out = lr_step(f, g, gauss_psf).data
    assert np.max(np.abs(out - f)) < 1e-9


def test_lr_constant(gauss_psf):
    c = np.full((16, 16), 0.3)
    np.testing.assert_allclose(lr_step(c, c, gauss_psf).data, 0.3, rtol=0, atol=1e-12)


def test_lr_blurred_delta_peak_grows():
    psf = render_psf(PsfModel.gaussian(1.5, 4))
    f = np.zeros((16, 16))
    f[8, 8] = 1.0
    g = convolve_fft(f, psf).data
    peaks = [g.max()]
    cur = g
    for _ in range(25):
        cur = lr_step(cur, g, psf).data
        peaks.append(cur.max())
    assert all(b > a for a, b in zip(peaks, peaks[1:]))


def test_maphunt_hand_computed():
    f = np.full((3, 3), 0.5)
    g = np.full((3, 3), 0.5)
    g[1, 1] = 1.0
    out = maphunt_step(f, g, normalize_psf([[1.0]]), lam=0.2).data
    assert out[1, 1] == pytest.approx(1.05, abs=1e-12)
    np.testing.assert_allclose(np.delete(out.ravel(), 4), 0.5, rtol=0, atol=1e-12)


def test_mapd_step_formula(rng, gauss_psf):
    from mapdeconv.expectation import KernelConfig, expectation_map_reference

    f = rng.random((18, 18)) * 0.5 + 0.05
    g = rng.random((18, 18)) * 0.5 + 0.05
    p = DeconvParams(lam=0.2, beta=625, window_radius=2)
    e = expectation_map_reference(f, KernelConfig(625, 2)).data
    expected = np.maximum(lr_by_hand(f, g, gauss_psf, p.epsilon) + 0.2 * f * (e - f), 0.0)
    np.testing.assert_allclose(mapd_step(f, g, gauss_psf, p).data, expected, rtol=1e-10, atol=1e-12)


def test_reduction_chain_bit_exact(rng, gauss_psf):
    f = rng.random((20, 20))
    g = rng.random((20, 20))
    lr = lr_step(f, g, gauss_psf).data
    assert mapd_step(f, g, gauss_psf, DeconvParams(lam=0.0)).data.tobytes() == lr.tobytes()
    assert maphunt_step(f, g, gauss_psf, 0.0).data.tobytes() == lr.tobytes()
    assert mapd_step(f, g, gauss_psf, DeconvParams(window_radius=0)).data.tobytes() == lr.tobytes()


@pytest.mark.parametrize("step", ["lr", "map-hunt", "map-d"])
def test_constant_invariant(step, gauss_psf):
    c = np.full((12, 12), 0.25)
    if step == "lr":
        out = lr_step(c, c, gauss_psf)
    elif step == "map-hunt":
        out = maphunt_step(c, c, gauss_psf, 0.2)
    else:
        out = mapd_step(c, c, gauss_psf, DeconvParams())
    np.testing.assert_allclose(out.data, 0.25, rtol=0, atol=1e-12)


def test_dimension_mismatch(gauss_psf):
    with pytest.raises(ValueError, match="dimension mismatch"):
        lr_step(np.ones((8, 8)), np.ones((8, 9)), gauss_psf)
    with pytest.raises(ValueError, match="dimension mismatch"):
        deconvolve(np.ones((8, 8)), gauss_psf, ground_truth=np.ones((9, 8)))


def test_nonnegative_clamp(gauss_psf):
    f = np.full((10, 10), 0.5)
    g = np.zeros((10, 10))
    out = maphunt_step(f, g, gauss_psf, lam=50.0).data
    assert out.min() == 0.0


def test_deconvolve_single_iteration_equals_lr_step(rng, gauss_psf):
    g = rng.random((16, 16))
    out, trace = deconvolve(g, gauss_psf, "lr", DeconvParams(iterations=1))
    assert out.data.tobytes() == lr_step(g, g, gauss_psf).data.tobytes()
    out2, _ = deconvolve(g, gauss_psf, "map-d", DeconvParams(iterations=1, lam=0.0))
    assert out2 == out
    assert len(trace) == 1


def test_trace_contents(small_pair):
    g = small_pair.degraded[0]
    truth = small_pair.ground_truth[0]
    out, trace = deconvolve(g, small_pair.psf_used, "map-d", DeconvParams(iterations=7), ground_truth=truth)
    assert [r.iteration for r in trace] == list(range(1, 8))
    assert trace[-1].psnr == pytest.approx(psnr(out, truth), abs=1e-12)
    assert trace[-1].min == out.data.min() and trace[-1].max == out.data.max()
    csv = trace.to_csv().splitlines()
    assert csv[0] == "iter,mean_abs_update,min,max,psnr"
    assert len(csv) == 8
    _, bare = deconvolve(g, small_pair.psf_used, "lr", DeconvParams(iterations=2))
    assert bare.to_csv().splitlines()[1].endswith(",")


def test_lr_improves_psnr_on_phantom(small_pair):
    for c in range(3):
        g, t = small_pair.degraded[c], small_pair.ground_truth[c]
        out, _ = deconvolve(g, small_pair.psf_used, "lr", DeconvParams(iterations=50))
        assert psnr(out, t) > psnr(g, t)


def test_deterministic(small_pair):
    runs = [deconvolve(small_pair.degraded[1], small_pair.psf_used, "map-d", DeconvParams(iterations=5))
            for _ in range(2)]
    assert runs[0][0].data.tobytes() == runs[1][0].data.tobytes()
    assert runs[0][1].records == runs[1][1].records


def test_non_finite_reported(gauss_psf):
    g = np.full((10, 10), 1e300)
    with pytest.raises(NumericalError) as err:
        deconvolve(g, gauss_psf, "map-hunt", DeconvParams(lam=1e10, iterations=3))
    assert err.value.iteration == 1


def test_multichannel(small_pair):
    psf, p = small_pair.psf_used, DeconvParams(iterations=50)
    single = MultiChannelImage([small_pair.degraded[0]])
    out, _ = deconvolve_multichannel(single, psf, "map-d", p)
    assert out[0] == deconvolve(small_pair.degraded[0], psf, "map-d", p)[0]

    dup = MultiChannelImage([small_pair.degraded[2]] * 2)
    out, _ = deconvolve_multichannel(dup, psf, "map-d", DeconvParams(iterations=5), threads=2)
    assert out[0] == out[1]

    out, _ = deconvolve_multichannel(small_pair.degraded, psf, "map-d", p)
    for c in range(3):
        assert psnr(out[c], small_pair.ground_truth[c]) > psnr(small_pair.degraded[c], small_pair.ground_truth[c])


def test_multichannel_thread_independent(small_pair):
    p = DeconvParams(iterations=4)
    a, ta = deconvolve_multichannel(small_pair.degraded, small_pair.psf_used, "map-d", p, threads=1)
    b, tb = deconvolve_multichannel(small_pair.degraded, small_pair.psf_used, "map-d", p, threads=3)
    assert a == b
    assert [t.records for t in ta] == [t.records for t in tb]


def test_lr_flux_quasi_conservation():
    psf = render_psf(PsfModel.gaussian(2.0, 6))
    cfg = PhantomConfig(width=64, height=64, cell_count=2, cell_radius_min=10, cell_radius_max=12,
                        rng_seed=4, **LOW_NOISE)
    # pad with 16 zero pixels so the support stays >= 2 PSF radii from the borders
    truth = np.pad(make_pair(cfg, psf).ground_truth[0].data, 16)
    g = convolve_fft(truth, psf).data
    f = g.copy()
    for _ in range(10):
        nxt = lr_step(f, g, psf).data
        assert abs(nxt.sum() - f.sum()) / f.sum() < 0.005
        f = nxt


def test_method_coerce():
    assert Method.coerce("LR") is Method.LUCY_RICHARDSON
    assert Method.coerce("map_d") is Method.MAP_D
    with pytest.raises(ValueError):
        Method.coerce("wiener")


def test_mapd_not_worse_than_maphunt_low_noise():
    cfg = PhantomConfig(width=128, height=128, cell_count=4, rng_seed=0, **LOW_NOISE)
    pair = make_pair(cfg)
    truth = pair.ground_truth.to_array().reshape(-1, 128)
    scores = {}
    for m in ("map-hunt", "map-d"):
        out, _ = deconvolve_multichannel(pair.degraded, pair.psf_used, m, DeconvParams())
        scores[m] = psnr(out.to_array().reshape(-1, 128), truth)
    assert scores["map-d"] >= scores["map-hunt"]
