import io
import logging

from django.http import HttpResponse
from drf_spectacular.utils import extend_schema
from rest_framework.exceptions import ValidationError
from rest_framework.response import Response
from rest_framework.views import APIView

from ..conf import kernel_setting
from ..docs import STATS_SCHEMA, SYNTHESIS_SCHEMA
from ..exceptions import PanopticKernelsError
from ..ops.generator import generator_forward
from ..ops.io_formats import read_panoptic_png, read_semantic_png, write_image_png
from ..ops.panoptic_upsample import misalignment_stats
from ..serializers import (StageStatsSerializer, StatsRequestSerializer,
                           SynthesisRequestSerializer, build_generator_config)

logger = logging.getLogger(__name__)


def _library_call(field, fn, *args, **kwargs):
    """
    Run a library call, turning its errors into a 400 on field
    """
    try:
        return fn(*args, **kwargs)
    except PanopticKernelsError as exc:
        raise ValidationError({field: [str(exc)]})


class StatsView(APIView):

    @extend_schema(**STATS_SCHEMA)
    def post(self, request, *args, **kwargs):
        serializer = StatsRequestSerializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data

        panoptic = _library_call("panoptic", read_panoptic_png, data["panoptic"])
        rows = _library_call("panoptic", misalignment_stats, panoptic, data["stages"],
                             data.get("base_scale"))
        return Response(StageStatsSerializer(rows, many=True).data)


class SynthesisView(APIView):

    @extend_schema(**SYNTHESIS_SCHEMA)
    def post(self, request, *args, **kwargs):
        serializer = SynthesisRequestSerializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data

        defaults = kernel_setting("GENERATOR")
        panoptic = _library_call("panoptic", read_panoptic_png, data["panoptic"])
        semantic = _library_call("semantic", read_semantic_png, data["semantic"],
                                 defaults["num_classes"])
        if semantic.shape != panoptic.shape:
            raise ValidationError(
                {"semantic": [f"semantic map {semantic.shape} and panoptic map {panoptic.shape} differ"]})

        scale = 2 ** len(defaults["stage_channels"])
        height, width = panoptic.shape
        if height % scale or width % scale:
            raise ValidationError(
                {"panoptic": [f"map size {height}x{width} is not divisible by {scale}"]})
        config = _library_call("seed", build_generator_config, {
            "base_height": height // scale,
            "base_width": width // scale,
            "seed": data["seed"],
        })

        image = _library_call("panoptic", generator_forward, semantic, panoptic, config)
        buffer = io.BytesIO()
        write_image_png(image, buffer)
        logger.info("synthesized %dx%d image with seed %d", height, width, config.seed)
        return HttpResponse(buffer.getvalue(), content_type="image/png")
