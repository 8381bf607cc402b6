import numpy as np
from django.test import SimpleTestCase

from ..exceptions import DimensionError, DomainError
from ..ops.tensor_core import (PAD_ID, boundary_map, check_panoptic, make_panoptic_id,
                               nearest_downsample, nearest_upsample, nearest_upsample_transpose,
                               one_hot, pad_panoptic, resolve_dtype, split_panoptic_id)


class NearestDownsampleTestCase(SimpleTestCase):

    def testTopLeftRule(self):
        result = nearest_downsample(np.array([[1, 2], [3, 4]]), 2)
        np.testing.assert_array_equal(result, [[1]])

    def testConstantMap(self):
        result = nearest_downsample(np.full((4, 4), 7, dtype=np.uint32), 2)
        np.testing.assert_array_equal(result, np.full((2, 2), 7))

    def testRowMajorIds(self):
        result = nearest_downsample(np.arange(16).reshape(4, 4), 2)
        np.testing.assert_array_equal(result, [[0, 2], [8, 10]])

    def testNonDivisible(self):
        with self.assertRaises(DimensionError):
            nearest_downsample(np.zeros((3, 4)), 2)

    def testRoundTripIdempotent(self):
        rng = np.random.default_rng(3)
        m = rng.integers(0, 5, size=(1, 1, 3, 5)).astype(np.float64)
        up = nearest_upsample(m, 2)
        again = nearest_upsample(nearest_downsample(up[0, 0], 2)[None, None], 2)
        np.testing.assert_array_equal(again, up)


class NearestUpsampleTestCase(SimpleTestCase):

    def testReplication(self):
        result = nearest_upsample(np.array([[[[5.0]]]]), 2)
        np.testing.assert_array_equal(result, np.full((1, 1, 2, 2), 5.0))

    def testFactorOneIsIdentity(self):
        x = np.random.default_rng(0).standard_normal((1, 2, 3, 4))
        np.testing.assert_array_equal(nearest_upsample(x, 1), x)

    def testIndexArithmetic(self):
        a, b = 1.5, -2.0
        result = nearest_upsample(np.array([[[[a, b]]]]), 2)
        np.testing.assert_array_equal(result[0, 0], [[a, a, b, b], [a, a, b, b]])

    def testTransposeSumsReplicas(self):
        grad = np.arange(16, dtype=np.float64).reshape(1, 1, 4, 4)
        np.testing.assert_array_equal(nearest_upsample_transpose(grad, 2)[0, 0],
                                      [[10, 18], [42, 50]])


class OneHotTestCase(SimpleTestCase):

    def testDefinition(self):
        result = one_hot(np.array([[2]]), 3)
        np.testing.assert_array_equal(result[0, :, 0, 0], [0, 0, 1])

    def testChannelSumIsOne(self):
        s = np.random.default_rng(1).integers(0, 6, size=(5, 7))
        np.testing.assert_array_equal(one_hot(s, 6).sum(axis=1), np.ones((1, 5, 7)))

    def testColumnMap(self):
        result = one_hot(np.array([[0], [1]]), 2)
        np.testing.assert_array_equal(result[0, :, :, 0], [[1, 0], [0, 1]])

    def testIndexOutOfRange(self):
        with self.assertRaises(DomainError):
            one_hot(np.array([[0, 3]]), 3)


class PanopticIdTestCase(SimpleTestCase):

    def testEncoding(self):
        self.assertEqual(make_panoptic_id(7), 7000)
        self.assertEqual(make_panoptic_id(26, 3), 26003)
        self.assertEqual(split_panoptic_id(26003), (26, 3))

    def testInstanceIndexRange(self):
        with self.assertRaises(DomainError):
            make_panoptic_id(1, 1000)

    def testPadIdRejected(self):
        with self.assertRaises(DomainError):
            check_panoptic(np.array([[int(PAD_ID)]], dtype=np.uint64))

    def testNonIntegerIdsRejected(self):
        for ids in (np.array([[1.5, 2.0]]), np.array([[1.0, 2.0]]), np.array([[True, False]])):
            with self.assertRaises(DomainError):
                check_panoptic(ids)
        self.assertEqual(check_panoptic(np.array([[3, 4]], dtype=np.int64)).dtype, np.uint32)

    def testEmptyMapRejected(self):
        for shape in ((0, 0), (0, 4), (3, 0)):
            with self.assertRaises(DimensionError):
                check_panoptic(np.zeros(shape, dtype=np.uint32))

    def testPadding(self):
        padded = pad_panoptic(np.array([[1]]), 1)
        self.assertEqual(padded.shape, (3, 3))
        self.assertEqual(int(padded[0, 0]), int(PAD_ID))
        self.assertEqual(int(padded[1, 1]), 1)

    def testBoundaryMap(self):
        p = np.array([[1, 1, 2], [1, 1, 2], [1, 1, 1]])
        np.testing.assert_array_equal(boundary_map(p), [[0, 1, 1], [0, 1, 1], [0, 0, 1]])

    def testUnknownDtype(self):
        with self.assertRaises(DomainError):
            resolve_dtype("float16")

    def testBoundaryMapExamples(self):
        np.testing.assert_array_equal(boundary_map(np.full((3, 4), 9)), np.zeros((3, 4)))
        np.testing.assert_array_equal(boundary_map(np.array([[1, 2]])), [[1, 1]])
        cross = boundary_map(np.array([[1, 1, 1], [1, 2, 1], [1, 1, 1]]))
        np.testing.assert_array_equal(cross, [[0, 1, 0], [1, 1, 1], [0, 1, 0]])
