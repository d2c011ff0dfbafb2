import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import blob_dx_closed_form, blob_plane
from n2d3 import synth
from n2d3.photometric import (
    GAUSSIAN_COLOR_MATRIX,
    InvariantComponents,
    combine_invariant,
    gaussian_derivative,
    gaussian_kernels,
    invariant_components,
    invariant_map,
    rgb_to_gaussian,
)

pixels = arrays(np.float64, (4, 5, 3), elements=st.floats(0, 1))


def _pixel(rgb):
    return np.array(rgb, dtype=np.float64).reshape(1, 1, 3)


class TestGaussianColorModel:
    def test_white(self):
        out = [float(p[0, 0]) for p in rgb_to_gaussian(_pixel([1, 1, 1]))]
        np.testing.assert_allclose(out, [0.96, -0.01, -0.09], atol=1e-15)

    def test_black(self):
        assert [float(p[0, 0]) for p in rgb_to_gaussian(_pixel([0, 0, 0]))] == [0, 0, 0]

    @pytest.mark.parametrize("channel", range(3))
    def test_columns_exact(self, channel):
        rgb = np.zeros(3)
        rgb[channel] = 1
        out = [float(p[0, 0]) for p in rgb_to_gaussian(_pixel(rgb))]
        assert out == list(GAUSSIAN_COLOR_MATRIX[:, channel])

    def test_red_column(self):
        out = [float(p[0, 0]) for p in rgb_to_gaussian(_pixel([1, 0, 0]))]
        assert out == [0.06, 0.3, 0.34]

    @given(p=pixels, q=pixels, a=st.floats(0, 0.5), b=st.floats(0, 0.5))
    def test_linear(self, p, q, a, b):
        lhs = np.stack(rgb_to_gaussian(a * p + b * q))
        rhs = a * np.stack(rgb_to_gaussian(p)) + b * np.stack(rgb_to_gaussian(q))
        np.testing.assert_allclose(lhs, rhs, atol=1e-14)

    @pytest.mark.parametrize("bad", [
        np.zeros((4, 4)), np.zeros((4, 4, 4)), np.full((2, 2, 3), 1.5),
        np.full((2, 2, 3), -0.1), np.full((2, 2, 3), np.nan), np.zeros((0, 3, 3)),
    ])
    def test_rejects_bad_images(self, bad):
        with pytest.raises(ValueError):
            rgb_to_gaussian(bad)


class TestKernels:
    @pytest.mark.parametrize("sigma", [0.3, 0.8, 1.0, 2.0, 3.7])
    def test_moments(self, sigma):
        smooth, deriv = gaussian_kernels(sigma)
        x = np.arange(len(smooth)) - len(smooth) // 2
        assert len(smooth) == 2 * max(1, math.ceil(4 * sigma)) + 1
        assert smooth.sum() == pytest.approx(1.0, abs=1e-15)
        assert deriv.sum() == pytest.approx(0.0, abs=1e-15)
        # convolution flips the kernel: the response to f(x) = x is -sum(x * deriv)
        assert np.sum(-x * deriv) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("sigma", [0.0, -1.0, float("nan")])
    def test_rejects_bad_sigma(self, sigma):
        with pytest.raises(ValueError):
            gaussian_kernels(sigma)


class TestGaussianDerivative:
    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.5])
    def test_constant_plane(self, sigma):
        out = gaussian_derivative(np.full((20, 30), 0.5), sigma)
        assert np.all(out == 0.0)

    def test_ramp(self):
        plane = np.tile(np.arange(40, dtype=np.float64), (30, 1))
        out = gaussian_derivative(plane, 1.0, "horizontal")
        np.testing.assert_allclose(out[4:-4, 4:-4], 1.0, atol=1e-6)
        out_y = gaussian_derivative(plane.T.copy(), 1.0, "vertical")
        np.testing.assert_allclose(out_y[4:-4, 4:-4], 1.0, atol=1e-6)

    @pytest.mark.parametrize("sigma", [0.8, 1.0, 2.0])
    @pytest.mark.parametrize("s", [3.0, 5.0, 8.0])
    def test_blob_closed_form(self, sigma, s):
        size = 96
        got = gaussian_derivative(blob_plane(size, s), sigma, "horizontal")
        ref = blob_dx_closed_form(size, s, sigma)
        m = math.ceil(4 * sigma)
        assert np.max(np.abs(got - ref)[m:-m, m:-m]) <= 1e-4

    def test_vertical_is_transposed_horizontal(self, rng):
        plane = rng.random((17, 23))
        h = gaussian_derivative(plane.T.copy(), 1.3, "horizontal")
        v = gaussian_derivative(plane, 1.3, "vertical")
        np.testing.assert_allclose(v, h.T, atol=1e-15)

    @given(a=arrays(np.float64, (12, 14), elements=st.floats(-1, 1)),
           b=arrays(np.float64, (12, 14), elements=st.floats(-1, 1)),
           alpha=st.floats(-2, 2))
    def test_linear(self, a, b, alpha):
        lhs = gaussian_derivative(a + alpha * b)
        rhs = gaussian_derivative(a) + alpha * gaussian_derivative(b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    @given(a=arrays(np.float64, (16, 18), elements=st.floats(0, 1)), sigma=st.floats(0.5, 2.0))
    def test_mirror_antisymmetry(self, a, sigma):
        out = gaussian_derivative(a, sigma, "horizontal")
        flipped = gaussian_derivative(a[:, ::-1].copy(), sigma, "horizontal")[:, ::-1]
        scale = max(1.0, float(np.abs(out).max()))
        np.testing.assert_allclose(flipped, -out, atol=1e-10 * scale)

    @pytest.mark.parametrize("axis", ["diagonal", 2, None])
    def test_rejects_bad_axis(self, axis):
        with pytest.raises(ValueError):
            gaussian_derivative(np.zeros((5, 5)), 1.0, axis)

    def test_rejects_non_finite(self):
        plane = np.zeros((5, 5))
        plane[2, 2] = np.inf
        with pytest.raises(ValueError):
            gaussian_derivative(plane)

    def test_thread_count_bit_identical(self, rng):
        plane = rng.random((37, 53))
        ref = gaussian_derivative(plane, 1.5, "horizontal", threads=1)
        for t in range(2, 9):
            assert np.array_equal(gaussian_derivative(plane, 1.5, "horizontal", threads=t), ref)


class TestInvariant:
    def test_uniform_color(self):
        comps = invariant_components(rgb_to_gaussian(np.full((9, 11, 3), [0.2, 0.6, 0.4])))
        for c in comps:
            assert np.all(c == 0.0)

    def test_combine_examples(self):
        z = np.zeros((2, 2))
        assert np.all(combine_invariant([z, z, z, z]) == 0)
        three = np.full((2, 2), 3.0)
        four = np.full((2, 2), 4.0)
        assert np.all(combine_invariant([three, four, z, z]) == 5.0)
        for k in range(4):
            comps = [z] * 4
            comps[k] = np.full((2, 2), -0.7)
            assert np.all(combine_invariant(comps) == 0.7)

    @given(arrays(np.float64, (4, 3, 3), elements=st.floats(-1e3, 1e3)),
           st.permutations(range(4)), st.lists(st.sampled_from([-1.0, 1.0]), min_size=4, max_size=4))
    def test_combine_symmetries(self, comps, perm, signs):
        base = combine_invariant(list(comps))
        other = combine_invariant([signs[i] * comps[p] for i, p in enumerate(perm)])
        np.testing.assert_allclose(other, base, rtol=1e-15, atol=0)
        assert np.all(base >= 0)

    def test_combine_errors(self):
        with pytest.raises(ValueError):
            combine_invariant([np.zeros((2, 2))] * 3)
        with pytest.raises(ValueError):
            combine_invariant([np.zeros((2, 2))] * 3 + [np.zeros((2, 3))])

    def test_components_errors(self):
        good = rgb_to_gaussian(np.full((4, 4, 3), 0.5))
        with pytest.raises(ValueError):
            invariant_components(good, eps=0.0)
        with pytest.raises(ValueError):
            invariant_components((good.e, good.e_lambda, good.e_lambda2[:3]))
        bad = (good.e, good.e_lambda, np.full((4, 4), np.nan))
        with pytest.raises(ValueError):
            invariant_components(bad)

    def test_components_named(self):
        comps = invariant_components(rgb_to_gaussian(np.full((4, 4, 3), 0.5)))
        assert isinstance(comps, InvariantComponents)
        assert comps._fields == ("n_lx", "n_llx", "n_ly", "n_lly")

    def test_closed_form_at_one_pixel(self, rng):
        img = rng.uniform(0.2, 0.9, (12, 12, 3))
        spec = rgb_to_gaussian(img)
        comps = invariant_components(spec, 1.0)
        e, el, ell = spec
        ex, elx, ellx = (gaussian_derivative(p, 1.0, "horizontal") for p in spec)
        y, x = 6, 5
        E, El, Ell, Ex, Elx, Ellx = (float(a[y, x]) for a in (e, el, ell, ex, elx, ellx))
        assert comps.n_lx[y, x] == pytest.approx((Elx * E - El * Ex) / E**2, rel=1e-12)
        expected = (Ellx * E**2 - Ell * Ex * E - 2 * Elx * El * E + 2 * El**2 * Ex) / E**3
        assert comps.n_llx[y, x] == pytest.approx(expected, rel=1e-12)

    @given(arrays(np.float64, (10, 12, 3), elements=st.floats(0.3, 0.9)), st.sampled_from([0.5, 0.25, 0.8]))
    def test_intensity_scaling_invariance(self, img, k):
        # N is homogeneous of degree zero in the image while E stays above eps
        np.testing.assert_allclose(invariant_map(k * img), invariant_map(img), rtol=1e-9, atol=1e-12)

    @given(arrays(np.float64, (10, 12, 3), elements=st.floats(0, 1)))
    def test_non_negative_and_finite(self, img):
        n = invariant_map(img)
        assert np.all(np.isfinite(n)) and np.all(n >= 0)

    def test_thread_count_bit_identical(self, rng):
        img = rng.random((31, 45, 3))
        ref = invariant_map(img, threads=1)
        for t in range(2, 9):
            assert np.array_equal(invariant_map(img, threads=t), ref)

    def test_env_thread_override(self, rng, monkeypatch):
        img = rng.random((20, 20, 3))
        ref = invariant_map(img, threads=1)
        monkeypatch.setenv("N2D3_THREADS", "3")
        assert np.array_equal(invariant_map(img), ref)
        monkeypatch.setenv("N2D3_THREADS", "zero")
        with pytest.raises(ValueError):
            invariant_map(img)

    def test_material_edges_vanish_under_uniform_illumination(self):
        pair = synth.CorollaryPairSpec().build()
        n = invariant_map(synth.render_rgb(pair.uniform))
        inner = np.zeros_like(pair.material_edges)
        inner[6:-6, 6:-6] = True
        assert n[pair.material_edges & inner].max() < 1e-12

    def test_illumination_gradient_dominates_material_edges(self):
        pair = synth.CorollaryPairSpec().build()
        n_a = invariant_map(synth.render_rgb(pair.uniform))
        n_b = invariant_map(synth.render_rgb(pair.graded))
        inner = np.zeros_like(pair.material_edges)
        inner[6:-6, 6:-6] = True
        assert n_b[pair.illumination_edges & inner].max() > 10 * n_a[pair.material_edges & inner].max()
