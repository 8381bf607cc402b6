import numpy as np
from django.test import SimpleTestCase

from ..exceptions import DimensionError, DomainError, KernelIndexError
from ..ops.gradcheck import central_difference, max_relative_error
from ..ops.panoptic_conv import (ConvParams, panoptic_conv_backward, panoptic_conv_forward,
                                 panoptic_conv_forward_optimized, standard_conv_backward,
                                 standard_conv_forward, window_mask, window_masks)
from .oracles import direct_conv


def random_case(rng, height=7, width=9, c_in=2, c_out=3, k=3, num_ids=3):
    x = rng.standard_normal((1, c_in, height, width))
    p = rng.integers(1, num_ids + 1, size=(height, width)).astype(np.uint32)
    params = ConvParams(rng.standard_normal((c_out, c_in, k, k)), rng.standard_normal(c_out))
    return x, p, params


class WindowMaskTestCase(SimpleTestCase):

    def testMixedIds(self):
        p = np.array([[1, 1, 2], [1, 1, 2], [3, 3, 2]])
        np.testing.assert_array_equal(window_mask(p, (1, 1), 3),
                                      [[1, 1, 0], [1, 1, 0], [0, 0, 0]])

    def testUniformMap(self):
        p = np.full((9, 9), 4)
        for k in (1, 3, 5):
            np.testing.assert_array_equal(window_mask(p, (4, 4), k), np.ones((k, k)))

    def testCornerPadding(self):
        mask = window_mask(np.full((5, 5), 4), (0, 0), 3)
        np.testing.assert_array_equal(mask, [[0, 0, 0], [0, 1, 1], [0, 1, 1]])

    def testCenterOutOfBounds(self):
        with self.assertRaises(KernelIndexError):
            window_mask(np.ones((3, 3), dtype=int), (3, 0), 3)

    def testCenterAlwaysValid(self):
        rng = np.random.default_rng(5)
        p = rng.integers(0, 6, size=(8, 8))
        masks = window_masks(p, 5)
        np.testing.assert_array_equal(masks[2, 2], np.ones((8, 8)))
        self.assertGreaterEqual(masks.sum(axis=(0, 1)).min(), 1)

    def testEvenKernelRejected(self):
        with self.assertRaises(DomainError):
            ConvParams.zeros(1, 1, 2)


class PanopticConvForwardTestCase(SimpleTestCase):

    def testBorderRenormalization(self):
        params = ConvParams(np.ones((1, 1, 3, 3)), np.zeros(1))
        out = panoptic_conv_forward(np.ones((1, 1, 5, 6)), np.zeros((5, 6), dtype=int), params)
        np.testing.assert_array_equal(out, np.full((1, 1, 5, 6), 9.0))

    def testUniformMapDegeneratesToStandard(self):
        rng = np.random.default_rng(0)
        x, _, params = random_case(rng)
        p = np.full((7, 9), 12)
        masked = panoptic_conv_forward(x, p, params)
        standard = standard_conv_forward(x, params)
        np.testing.assert_array_equal(masked[:, :, 1:-1, 1:-1], standard[:, :, 1:-1, 1:-1])

        bias = params.bias[None, :, None, None]
        counts = window_masks(p, 3).sum(axis=(0, 1))
        np.testing.assert_allclose(masked - bias, (standard - bias) * 9 / counts, rtol=1e-12, atol=1e-12)

    def testSplitMapIsolatesLeftHalf(self):
        p = np.zeros((6, 8), dtype=np.uint32)
        p[:, 4:] = 1
        x = np.zeros((1, 1, 6, 8))
        x[:, :, :, 4:] = np.random.default_rng(2).standard_normal((1, 1, 6, 4))
        params = ConvParams(np.random.default_rng(3).standard_normal((2, 1, 3, 3)), np.array([0.5, -1.0]))
        out = panoptic_conv_forward(x, p, params)
        np.testing.assert_array_equal(out[0, 0, :, :4], np.full((6, 4), 0.5))
        np.testing.assert_array_equal(out[0, 1, :, :4], np.full((6, 4), -1.0))

    def testMaskedIndependence(self):
        rng = np.random.default_rng(11)
        x, p, params = random_case(rng, num_ids=4)
        out = panoptic_conv_forward(x, p, params)
        target = (3, 4)
        perturbed = x.copy()
        others = p != p[target]
        perturbed[:, :, others] += rng.standard_normal((x.shape[1], int(others.sum())))
        again = panoptic_conv_forward(perturbed, p, params)
        np.testing.assert_array_equal(again[:, :, target[0], target[1]], out[:, :, target[0], target[1]])

    def testMatchesDirectSum(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            x, p, params = random_case(rng, height=5, width=6)
            np.testing.assert_allclose(panoptic_conv_forward(x, p, params),
                                       direct_conv(x, params.weights, params.bias, p),
                                       rtol=1e-12, atol=1e-12)

    def testRandomInstancesMatchDirectSum(self):
        rng = np.random.default_rng(12)
        for seed in range(100):
            k = int(rng.choice([1, 3, 5]))
            x, p, params = random_case(rng, height=16, width=16, c_in=4, c_out=2, k=k,
                                       num_ids=int(rng.integers(1, 6)))
            expected = direct_conv(x, params.weights, params.bias, p)
            scale = max(np.max(np.abs(expected)), 1.0)
            for out in (panoptic_conv_forward(x, p, params),
                        panoptic_conv_forward_optimized(x, p, params)):
                self.assertLess(np.max(np.abs(out - expected)) / scale, 1e-12, f"instance {seed}, k={k}")

    def testSpatialMismatch(self):
        x, _, params = random_case(np.random.default_rng(0))
        with self.assertRaises(DimensionError):
            panoptic_conv_forward(x, np.zeros((7, 8), dtype=int), params)

    def testChannelMismatch(self):
        x, p, _ = random_case(np.random.default_rng(0))
        with self.assertRaises(DimensionError):
            panoptic_conv_forward(x, p, ConvParams.zeros(1, 3, 3))


class StandardConvTestCase(SimpleTestCase):

    def testIdentityKernel(self):
        x = np.random.default_rng(0).standard_normal((1, 1, 4, 5))
        params = ConvParams(np.ones((1, 1, 1, 1)), np.zeros(1))
        np.testing.assert_array_equal(standard_conv_forward(x, params), x)

    def testAllOnesInterior(self):
        params = ConvParams(np.ones((1, 1, 3, 3)), np.zeros(1))
        out = standard_conv_forward(np.ones((1, 1, 4, 4)), params)
        np.testing.assert_array_equal(out[0, 0, 1:3, 1:3], np.full((2, 2), 9.0))
        self.assertEqual(out[0, 0, 0, 0], 4.0)

    def testMatchesDirectSum(self):
        rng = np.random.default_rng(9)
        x, _, params = random_case(rng, height=4, width=5)
        np.testing.assert_allclose(standard_conv_forward(x, params),
                                   direct_conv(x, params.weights, params.bias), rtol=1e-12, atol=1e-12)


class OptimizedConvTestCase(SimpleTestCase):

    def assertEquivalent(self, x, p, params, **kwargs):
        reference = panoptic_conv_forward(x, p, params)
        optimized = panoptic_conv_forward_optimized(x, p, params, **kwargs)
        scale = max(np.max(np.abs(reference)), 1.0)
        self.assertLess(np.max(np.abs(optimized - reference)), 1e-12 * scale)

    def testRandomInstances(self):
        rng = np.random.default_rng(100)
        for _ in range(100):
            k = int(rng.choice([1, 3, 5]))
            x, p, params = random_case(rng, height=16, width=16, k=k, num_ids=int(rng.integers(1, 6)))
            self.assertEquivalent(x, p, params)

    def testBorderFixture(self):
        params = ConvParams(np.ones((1, 1, 3, 3)), np.zeros(1))
        self.assertEquivalent(np.ones((1, 1, 5, 6)), np.zeros((5, 6), dtype=int), params)

    def testThreadCountIndependent(self):
        rng = np.random.default_rng(4)
        x, p, params = random_case(rng, height=37, width=23)
        single = panoptic_conv_forward_optimized(x, p, params, threads=1, row_block=8)
        for threads in (2, 3, 8):
            pooled = panoptic_conv_forward_optimized(x, p, params, threads=threads, row_block=8)
            np.testing.assert_array_equal(pooled, single)

    def testRowBlockMustBePositive(self):
        x, p, params = random_case(np.random.default_rng(0))
        for row_block in (0, -3):
            with self.assertRaises(DomainError):
                panoptic_conv_forward_optimized(x, p, params, row_block=row_block)

    def testFloatIdsRejected(self):
        x, p, params = random_case(np.random.default_rng(0))
        with self.assertRaises(DomainError):
            panoptic_conv_forward_optimized(x, p + 0.5, params)

    def testFloat32(self):
        rng = np.random.default_rng(8)
        x, p, params = random_case(rng)
        out = panoptic_conv_forward_optimized(x.astype(np.float32), p, params)
        self.assertEqual(out.dtype, np.float32)
        np.testing.assert_allclose(out, panoptic_conv_forward(x, p, params), rtol=1e-4, atol=1e-4)


class PanopticConvBackwardTestCase(SimpleTestCase):

    def testZeroGradient(self):
        x, p, params = random_case(np.random.default_rng(0))
        grads = panoptic_conv_backward(np.zeros((1, 3, 7, 9)), x, p, params)
        for grad in (grads.grad_input, grads.grad_weights, grads.grad_bias):
            self.assertFalse(np.any(grad))

    def testUniformInteriorMatchesStandard(self):
        rng = np.random.default_rng(1)
        x, _, params = random_case(rng)
        grad_out = np.zeros((1, 3, 7, 9))
        grad_out[:, :, 1:-1, 1:-1] = rng.standard_normal((1, 3, 5, 7))
        masked = panoptic_conv_backward(grad_out, x, np.full((7, 9), 3), params)
        standard = standard_conv_backward(grad_out, x, params)
        np.testing.assert_allclose(masked.grad_input, standard.grad_input, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(masked.grad_weights, standard.grad_weights, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(masked.grad_bias, standard.grad_bias, rtol=1e-12, atol=1e-12)

    def testFiniteDifferences(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x, p, params = random_case(rng, height=5, width=5, c_in=2, c_out=2)
            weighting = rng.standard_normal((1, 2, 5, 5))
            grads = panoptic_conv_backward(weighting, x, p, params)
            numeric = central_difference(lambda v: panoptic_conv_forward(v, p, params), x, weighting, 1e-5)
            self.assertLess(max_relative_error(grads.grad_input, numeric), 1e-6)
            numeric = central_difference(
                lambda w: panoptic_conv_forward(x, p, ConvParams(w, params.bias)),
                params.weights, weighting, 1e-5)
            self.assertLess(max_relative_error(grads.grad_weights, numeric), 1e-6)
            numeric = central_difference(
                lambda b: panoptic_conv_forward(x, p, ConvParams(params.weights, b)),
                params.bias, weighting, 1e-5)
            self.assertLess(max_relative_error(grads.grad_bias, numeric), 1e-6)

    def testShapeMismatch(self):
        x, p, params = random_case(np.random.default_rng(0))
        with self.assertRaises(DimensionError):
            panoptic_conv_backward(np.zeros((1, 2, 7, 9)), x, p, params)
