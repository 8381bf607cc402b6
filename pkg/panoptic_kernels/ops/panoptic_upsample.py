"""
Panoptic-aware 2x upsampling.

Alignment correction: every upsampled pixel (i, j) copies the feature of
the first source among (i//2, j//2), (i//2+1, j//2), (i//2, j//2+1),
(i//2+1, j//2+1) whose downsampled id equals its own high resolution id.
Sources past the bottom/right border are skipped. Pixels without a match
are holes; they stay zero and are later filled from the semantic map
through the shared panoptic-aware encoder and a per-stage 1x1 reducer.
"""
import logging
from dataclasses import dataclass

import numpy as np

from ..exceptions import DimensionError, DomainError, RoutingError
from .panoptic_conv import (ConvGrads, ConvParams, panoptic_conv_backward,
                            panoptic_conv_forward, standard_conv_backward,
                            standard_conv_forward)
from .tensor_core import (check_panoptic, check_semantic, check_tensor,
                          downsample_to, nearest_downsample, one_hot)

logger = logging.getLogger(__name__)

# (row, column) offsets from (i//2, j//2), in scan order
CANDIDATE_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1))

HOLE = 0


@dataclass(frozen=True)
class AlignResult:
    features: np.ndarray
    correction: np.ndarray
    # scan pass (1..4) that supplied each pixel, HOLE where none matched
    routing: np.ndarray
    p_d: np.ndarray
    p_u: np.ndarray

    @property
    def hole_count(self):
        return int(np.count_nonzero(self.routing == HOLE))


@dataclass(frozen=True)
class HoleFillParams:
    encoder: ConvParams
    reducer: ConvParams

    def __post_init__(self):
        if self.reducer.kernel_size != 1:
            raise DomainError(
                f"reducer must be a 1x1 convolution, got kernel size {self.reducer.kernel_size}")
        if self.reducer.in_channels != self.encoder.out_channels:
            raise DimensionError(
                f"reducer expects {self.reducer.in_channels} channels, "
                f"encoder produces {self.encoder.out_channels}")


@dataclass(frozen=True)
class UpsampleGrads:
    grad_input: np.ndarray
    encoder: ConvGrads
    reducer: ConvGrads


@dataclass(frozen=True)
class StageStats:
    stage: int
    pct_misaligned: float
    pct_new: float
    n_misaligned: int
    n_new: int
    n_total: int


def _check_pair(p_d, p_u):
    p_d = check_panoptic(p_d, "downsampled panoptic map")
    p_u = check_panoptic(p_u, "upsampled panoptic map")
    height, width = p_d.shape
    if p_u.shape != (2 * height, 2 * width):
        raise DimensionError(
            f"upsampled map {p_u.shape} must be exactly twice the downsampled map {p_d.shape}")
    return p_d, p_u


def _sources(shape, offset):
    rows, cols = np.indices(shape)
    return rows // 2 + offset[0], cols // 2 + offset[1]


def align_routing(p_d, p_u):
    """
    Scan pass number (1..4) each upsampled pixel takes its feature from,
    HOLE for pixels no candidate matches.
    """
    p_d, p_u = _check_pair(p_d, p_u)
    height, width = p_d.shape
    routing = np.full(p_u.shape, HOLE, dtype=np.int8)
    for pass_number, offset in enumerate(CANDIDATE_OFFSETS, start=1):
        src_rows, src_cols = _sources(p_u.shape, offset)
        inside = (src_rows < height) & (src_cols < width)
        candidate = np.zeros(p_u.shape, dtype=bool)
        candidate[inside] = p_d[src_rows[inside], src_cols[inside]] == p_u[inside]
        routing[candidate & (routing == HOLE)] = pass_number
    return routing


def _routed_pixels(routing):
    # (pass destinations, pass sources) for every scan pass
    for pass_number, offset in enumerate(CANDIDATE_OFFSETS, start=1):
        dst_rows, dst_cols = np.nonzero(routing == pass_number)
        yield (dst_rows, dst_cols), (dst_rows // 2 + offset[0], dst_cols // 2 + offset[1])


def align_upsample(f_d, p_d, p_u):
    f_d = check_tensor(f_d, "low resolution features")
    p_d, p_u = _check_pair(p_d, p_u)
    n, c, height, width = f_d.shape
    if (height, width) != p_d.shape:
        raise DimensionError(
            f"features {f_d.shape[2:]} do not match downsampled map {p_d.shape}")

    routing = align_routing(p_d, p_u)
    features = np.zeros((n, c, 2 * height, 2 * width), dtype=f_d.dtype)
    for (dst_rows, dst_cols), (src_rows, src_cols) in _routed_pixels(routing):
        features[:, :, dst_rows, dst_cols] = f_d[:, :, src_rows, src_cols]

    result = AlignResult(
        features=features,
        correction=(routing != HOLE).astype(f_d.dtype),
        routing=routing,
        p_d=p_d,
        p_u=p_u,
    )
    logger.debug("aligned %s -> %s with %d holes", p_d.shape, p_u.shape, result.hole_count)
    return result


def encode_holes(s_u, p_u, params, num_classes, dtype=np.float64):
    """
    Hole-filling features: reducer(panoptic_conv(one_hot(s_u), p_u, encoder))
    """
    s_u = check_semantic(s_u, num_classes)
    p_u = check_panoptic(p_u)
    if s_u.shape != p_u.shape:
        raise DimensionError(f"semantic map {s_u.shape} does not match panoptic map {p_u.shape}")
    if params.encoder.in_channels != num_classes:
        raise DimensionError(
            f"encoder expects {params.encoder.in_channels} channels, class count is {num_classes}")
    encoded = panoptic_conv_forward(one_hot(s_u, num_classes, dtype=dtype), p_u, params.encoder)
    return standard_conv_forward(encoded, params.reducer)


def hole_fill(aligned, s_u, p_u, params, num_classes):
    features = aligned.features
    if params.reducer.out_channels != features.shape[1]:
        raise DimensionError(
            f"reducer produces {params.reducer.out_channels} channels, "
            f"aligned features have {features.shape[1]}")
    if np.shape(p_u) != features.shape[2:]:
        raise DimensionError(f"panoptic map {np.shape(p_u)} does not match features {features.shape[2:]}")
    f_hole = encode_holes(s_u, p_u, params, num_classes, dtype=features.dtype)
    corrected = aligned.correction.astype(bool)
    return np.where(corrected, features, features + (1 - aligned.correction) * f_hole)


def stage_maps(p_full, s_full, target_scale):
    """
    (p_d, p_u, s_u) for an upsampling layer whose output is target_scale
    """
    height, width = target_scale
    if height % 2 or width % 2:
        raise DimensionError(f"target scale {height}x{width} must be even")
    p_u = downsample_to(check_panoptic(p_full), height, width)
    s_u = downsample_to(check_semantic(s_full), height, width)
    return nearest_downsample(p_u, 2), p_u, s_u


def panoptic_upsample(f_d, p_full, s_full, target_scale, params, num_classes):
    f_d = check_tensor(f_d, "low resolution features")
    target_scale = tuple(target_scale)
    if target_scale != (2 * f_d.shape[2], 2 * f_d.shape[3]):
        raise DimensionError(
            f"target scale {target_scale} is not twice the feature size {f_d.shape[2:]}")
    p_d, p_u, s_u = stage_maps(p_full, s_full, target_scale)
    aligned = align_upsample(f_d, p_d, p_u)
    return hole_fill(aligned, s_u, p_u, params, num_classes)


def align_upsample_backward(grad_out, aligned):
    """
    Scatter-add transpose of the copy routing. The routing is recomputed
    from the recorded maps and must agree with the one stored at forward
    time.
    """
    routing = align_routing(aligned.p_d, aligned.p_u)
    if routing.shape != aligned.routing.shape or np.any(routing != aligned.routing):
        raise RoutingError("recorded routing does not match the panoptic maps it claims to come from")
    grad_out = check_tensor(grad_out, "output gradient")
    if grad_out.shape != aligned.features.shape:
        raise DimensionError(
            f"output gradient {grad_out.shape} does not match aligned features {aligned.features.shape}")

    n, c = grad_out.shape[:2]
    height, width = aligned.p_d.shape
    grad_in = np.zeros((n, c, height, width), dtype=grad_out.dtype)
    for (dst_rows, dst_cols), (src_rows, src_cols) in _routed_pixels(routing):
        np.add.at(grad_in, (slice(None), slice(None), src_rows, src_cols),
                  grad_out[:, :, dst_rows, dst_cols])
    return grad_in


def panoptic_upsample_backward(grad_out, f_d, p_full, s_full, target_scale, params, num_classes):
    f_d = check_tensor(f_d, "low resolution features")
    p_d, p_u, s_u = stage_maps(p_full, s_full, target_scale)
    aligned = align_upsample(f_d, p_d, p_u)
    grad_out = check_tensor(grad_out, "output gradient")
    grad_in = align_upsample_backward(grad_out, aligned)

    encoder_input = one_hot(s_u, num_classes, dtype=f_d.dtype)
    encoded = panoptic_conv_forward(encoder_input, p_u, params.encoder)
    grad_holes = grad_out * (1 - aligned.correction)
    reducer_grads = standard_conv_backward(grad_holes, encoded, params.reducer)
    encoder_grads = panoptic_conv_backward(reducer_grads.grad_input, encoder_input, p_u, params.encoder)
    return UpsampleGrads(grad_input=grad_in, encoder=encoder_grads, reducer=reducer_grads)


def stage_stats(stage, p_d, p_u):
    p_d, p_u = _check_pair(p_d, p_u)
    replicated = p_d.repeat(2, axis=0).repeat(2, axis=1)
    known = np.isin(p_u, np.unique(p_d))
    n_new = int(np.count_nonzero(~known))
    n_misaligned = int(np.count_nonzero((p_u != replicated) & known))
    n_total = int(p_u.size)
    return StageStats(
        stage=stage,
        pct_misaligned=100.0 * n_misaligned / n_total,
        pct_new=100.0 * n_new / n_total,
        n_misaligned=n_misaligned,
        n_new=n_new,
        n_total=n_total,
    )


def misalignment_stats(p_full, num_stages, base_scale=None):
    """
    Per upsampling stage, how many pixels plain nearest upsampling maps to
    a feature of the wrong id although their id exists at the lower scale
    (misaligned), and how many carry an id the lower scale does not have
    at all (new). Both are percentages of the pixels at the upsampled
    scale.

    base_scale is the factor between p_full and the coarsest map; stage s
    upsamples from p_full / (base_scale / 2**s) to twice that size.
    """
    p = check_panoptic(p_full)
    num_stages = int(num_stages)
    if num_stages < 1:
        raise DomainError(f"need at least one stage, got {num_stages}")
    if base_scale is None:
        base_scale = 2 ** num_stages
    base_scale = int(base_scale)
    if base_scale < 2 ** num_stages or base_scale % 2 ** num_stages:
        raise DimensionError(
            f"base scale {base_scale} must be a multiple of 2**stages = {2 ** num_stages}")

    rows = []
    for stage in range(num_stages):
        factor_d = base_scale // 2 ** stage
        p_d = nearest_downsample(p, factor_d)
        p_u = nearest_downsample(p, factor_d // 2)
        rows.append(stage_stats(stage, p_d, p_u))
    return rows
