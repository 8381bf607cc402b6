from drf_spectacular.types import OpenApiTypes
from drf_spectacular.utils import OpenApiResponse

from .serializers import (StageStatsSerializer, StatsRequestSerializer,
                          SynthesisRequestSerializer)

"""
schema fragments for the computation endpoints
"""

STATS_SCHEMA = dict(
    request={"multipart/form-data": StatsRequestSerializer},
    responses={
        200: StageStatsSerializer(many=True),
        400: OpenApiResponse(description="unreadable map or invalid stage layout"),
    },
    description="Per-stage misalignment and new-id percentages of a panoptic PNG.",
)

SYNTHESIS_SCHEMA = dict(
    request={"multipart/form-data": SynthesisRequestSerializer},
    responses={
        (200, "image/png"): OpenApiTypes.BINARY,
        400: OpenApiResponse(description="unreadable or mismatched maps"),
    },
    description="Run the toy generator on a semantic and a panoptic PNG.",
)
