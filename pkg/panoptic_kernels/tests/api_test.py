import io

import numpy as np
from django.core.files.uploadedfile import SimpleUploadedFile
from django.test import SimpleTestCase
from django.urls import reverse
from PIL import Image
from rest_framework import status
from rest_framework.test import APIClient

from ..ops.io_formats import write_panoptic_png, write_semantic_png


def png_upload(name, writer, array):
    buffer = io.BytesIO()
    writer(array, buffer)
    return SimpleUploadedFile(name, buffer.getvalue(), content_type="image/png")


class StatsViewTestCase(SimpleTestCase):

    def setUp(self):
        self.client = APIClient()

    def testNewIds(self):
        response = self.client.post(
            reverse('stats'),
            {
                "panoptic": png_upload("p.png", write_panoptic_png, np.array([[1, 2], [3, 4]], dtype=np.uint32)),
                "stages": 1,
            },
            format="multipart"
        )

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data[0]["pct_new"], 75.0)
        self.assertEqual(response.data[0]["n_total"], 4)

    def testNonDivisible(self):
        response = self.client.post(
            reverse('stats'),
            {"panoptic": png_upload("p.png", write_panoptic_png, np.ones((6, 6), dtype=np.uint32))},
            format="multipart"
        )

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn("panoptic", response.data)

    def testNotPng(self):
        response = self.client.post(
            reverse('stats'),
            {"panoptic": SimpleUploadedFile("p.png", b"not an image at all, really", content_type="image/png")},
            format="multipart"
        )

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)


class SynthesisViewTestCase(SimpleTestCase):

    def setUp(self):
        self.client = APIClient()
        self.panoptic = np.full((16, 32), 1000, dtype=np.uint32)
        self.panoptic[4:12, 8:20] = 5001
        self.semantic = (self.panoptic // 1000).astype(np.int64)

    def post(self, semantic, panoptic, seed=0):
        return self.client.post(
            reverse('synthesize'),
            {
                "semantic": png_upload("s.png", write_semantic_png, semantic),
                "panoptic": png_upload("p.png", write_panoptic_png, panoptic),
                "seed": seed,
            },
            format="multipart"
        )

    def testImage(self):
        response = self.post(self.semantic, self.panoptic)

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response["Content-Type"], "image/png")
        with Image.open(io.BytesIO(response.content)) as image:
            self.assertEqual(image.size, (32, 16))
            self.assertEqual(image.mode, "RGB")

        again = self.post(self.semantic, self.panoptic)
        self.assertEqual(again.content, response.content)

    def testMismatchedMaps(self):
        response = self.post(self.semantic[:8], self.panoptic)

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn("semantic", response.data)

    def testNegativeSeed(self):
        response = self.post(self.semantic, self.panoptic, seed=-1)

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn("seed", response.data)


class SchemaTestCase(SimpleTestCase):

    def testSchema(self):
        response = APIClient().get(reverse('schema'))

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertIn(b"/api/synthesize/", response.content)
