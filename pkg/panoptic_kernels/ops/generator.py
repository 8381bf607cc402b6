"""
Toy-scale panoptic-aware image generator.

    one_hot(s at base)  --panoptic conv (shared encoder)-->  x
    for every stage:   x = resblock(x);  x = panoptic_upsample(x)
    x = tanh(conv3x3(leaky_relu(x)))

The shared encoder that embeds the semantic map at the base resolution is
reused by every upsampling stage to fill holes, followed by that stage's
1x1 reducer. SPADE layers always read the semantic map.

Weights are drawn from numpy's counter-based Philox generator keyed by the
seed, in the order written down in init_generator_params, so a seed fully
determines the network.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import DimensionError, DomainError
from .panoptic_conv import (ConvParams, panoptic_conv_forward, panoptic_conv_forward_optimized,
                            standard_conv_forward)
from .panoptic_upsample import HoleFillParams, encode_holes, panoptic_upsample
from .tensor_core import (boundary_map, check_panoptic, check_semantic, check_tensor,
                          downsample_to, leaky_relu, nearest_upsample, one_hot,
                          resolve_dtype)

logger = logging.getLogger(__name__)

INIT_STD = 0.02
LEAKY_SLOPE = 0.2
NORM_EPS = 1e-5

MODES = ("panoptic", "baseline")


@dataclass(frozen=True)
class GeneratorConfig:
    stage_channels: Tuple[int, ...] = (64, 32, 16)
    base_height: int = 8
    base_width: int = 16
    num_classes: int = 8
    spade_hidden: int = 64
    seed: int = 0
    dtype: str = "float64"
    mode: str = "panoptic"

    def __post_init__(self):
        object.__setattr__(self, "stage_channels", tuple(int(c) for c in self.stage_channels))
        if not self.stage_channels:
            raise DomainError("stage_channels must name at least one stage")
        if any(c <= 0 for c in self.stage_channels):
            raise DomainError(f"stage channels must be positive, got {self.stage_channels}")
        if any(a < b for a, b in zip(self.stage_channels, self.stage_channels[1:])):
            raise DomainError(f"stage channels must be non-increasing, got {self.stage_channels}")
        for name in ("base_height", "base_width", "num_classes", "spade_hidden"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.seed < 0:
            raise DomainError(f"seed must be non-negative, got {self.seed}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        resolve_dtype(self.dtype)

    @property
    def num_stages(self):
        return len(self.stage_channels)

    @property
    def encoder_channels(self):
        return self.stage_channels[0]

    @property
    def output_height(self):
        return self.base_height * 2 ** self.num_stages

    @property
    def output_width(self):
        return self.base_width * 2 ** self.num_stages

    @property
    def scalar_type(self):
        return resolve_dtype(self.dtype)

    def stage_resolution(self, stage):
        """ resolution the stage's resblock runs at """
        return self.base_height * 2 ** stage, self.base_width * 2 ** stage

    def stage_in_channels(self, stage):
        return self.stage_channels[stage - 1] if stage else self.encoder_channels

    def spade_label_channels(self):
        # the baseline appends the instance boundary map to the one-hot labels
        return self.num_classes + (1 if self.mode == "baseline" else 0)


@dataclass(frozen=True)
class SpadeParams:
    shared: ConvParams
    gamma: ConvParams
    beta: ConvParams


@dataclass(frozen=True)
class ResBlockParams:
    spade_0: SpadeParams
    conv_0: ConvParams
    spade_1: SpadeParams
    conv_1: ConvParams
    spade_skip: Optional[SpadeParams] = None
    conv_skip: Optional[ConvParams] = None

    @property
    def learned_skip(self):
        return self.conv_skip is not None


@dataclass(frozen=True)
class GeneratorParams:
    encoder: ConvParams
    reducers: List[ConvParams] = field(default_factory=list)
    blocks: List[ResBlockParams] = field(default_factory=list)
    head: Optional[ConvParams] = None

    def hole_fill(self, stage):
        return HoleFillParams(encoder=self.encoder, reducer=self.reducers[stage])


def _spade_params(rng, label_channels, hidden, channels, dtype):
    return SpadeParams(
        shared=ConvParams.normal(rng, hidden, label_channels, 3, INIT_STD, dtype),
        gamma=ConvParams.normal(rng, channels, hidden, 3, INIT_STD, dtype),
        beta=ConvParams.normal(rng, channels, hidden, 3, INIT_STD, dtype),
    )


def _resblock_params(rng, config, in_channels, out_channels, dtype):
    hidden_channels = min(in_channels, out_channels)
    labels = config.spade_label_channels()
    spade_0 = _spade_params(rng, labels, config.spade_hidden, in_channels, dtype)
    conv_0 = ConvParams.normal(rng, hidden_channels, in_channels, 3, INIT_STD, dtype)
    spade_1 = _spade_params(rng, labels, config.spade_hidden, hidden_channels, dtype)
    conv_1 = ConvParams.normal(rng, out_channels, hidden_channels, 3, INIT_STD, dtype)
    if in_channels == out_channels:
        return ResBlockParams(spade_0, conv_0, spade_1, conv_1)
    spade_skip = _spade_params(rng, labels, config.spade_hidden, in_channels, dtype)
    conv_skip = ConvParams.normal(rng, out_channels, in_channels, 1, INIT_STD, dtype)
    return ResBlockParams(spade_0, conv_0, spade_1, conv_1, spade_skip, conv_skip)


def init_generator_params(config):
    """
    Draw order: encoder; the reducers in stage order; per stage the
    resblock (spade_0, conv_0, spade_1, conv_1, then spade_skip and
    conv_skip when channels change), each SPADE drawing shared, gamma,
    beta; the output head last. Every weight ~ N(0, 0.02), biases zero.
    """
    dtype = config.scalar_type
    rng = np.random.Generator(np.random.Philox(key=config.seed))
    encoder = ConvParams.normal(rng, config.encoder_channels, config.num_classes, 3, INIT_STD, dtype)
    reducers = [ConvParams.normal(rng, channels, config.encoder_channels, 1, INIT_STD, dtype)
                for channels in config.stage_channels]
    blocks = [_resblock_params(rng, config, config.stage_in_channels(stage),
                               config.stage_channels[stage], dtype)
              for stage in range(config.num_stages)]
    head = ConvParams.normal(rng, 3, config.stage_channels[-1], 3, INIT_STD, dtype)
    return GeneratorParams(encoder=encoder, reducers=reducers, blocks=blocks, head=head)


def batch_normalize(x):
    """
    Parameter-free per-channel normalization over batch and spatial dims.
    """
    mean = x.mean(axis=(0, 2, 3), keepdims=True)
    centered = x - mean
    var = (centered * centered).mean(axis=(0, 2, 3), keepdims=True)
    return centered / np.sqrt(var + NORM_EPS)


def spade_labels(s, num_classes, p=None, dtype=np.float64):
    labels = one_hot(s, num_classes, dtype=dtype)
    if p is None:
        return labels
    return np.concatenate([labels, boundary_map(p, dtype=dtype)[None, None]], axis=1)


def spade_modulation(labels, params):
    hidden = np.maximum(standard_conv_forward(labels, params.shared), 0)
    return standard_conv_forward(hidden, params.gamma), standard_conv_forward(hidden, params.beta)


def spade_denorm(x, s, params, num_classes, p=None):
    """
    normalize(x) * (1 + gamma(s)) + beta(s). Passing p appends the
    instance boundary map to the labels (baseline mode).
    """
    x = check_tensor(x)
    s = check_semantic(s, num_classes)
    if s.shape != x.shape[2:]:
        raise DimensionError(f"semantic map {s.shape} does not match features {x.shape[2:]}")
    labels = spade_labels(s, num_classes, p, dtype=x.dtype)
    if params.shared.in_channels != labels.shape[1]:
        raise DimensionError(
            f"SPADE expects {params.shared.in_channels} label channels, got {labels.shape[1]}")
    gamma, beta = spade_modulation(labels, params)
    if gamma.shape[1] != x.shape[1]:
        raise DimensionError(f"SPADE modulates {gamma.shape[1]} channels, features have {x.shape[1]}")
    return batch_normalize(x) * (1 + gamma) + beta


def _conv(x, p, params, mode, threads=1):
    if mode == "baseline":
        return standard_conv_forward(x, params)
    return panoptic_conv_forward_optimized(x, p, params, threads=threads)


def resblock_forward(x, s, p, params, num_classes, mode="panoptic", threads=1):
    x = check_tensor(x)
    p = check_panoptic(p)
    if p.shape != x.shape[2:]:
        raise DimensionError(f"panoptic map {p.shape} does not match features {x.shape[2:]}")
    boundary_source = p if mode == "baseline" else None

    def branch(h, spade, conv):
        h = spade_denorm(h, s, spade, num_classes, boundary_source)
        return _conv(leaky_relu(h, LEAKY_SLOPE), p, conv, mode, threads)

    main = branch(x, params.spade_0, params.conv_0)
    main = branch(main, params.spade_1, params.conv_1)
    skip = branch(x, params.spade_skip, params.conv_skip) if params.learned_skip else x
    return main + skip


def _check_maps(s_full, p_full, config):
    s_full = check_semantic(s_full, config.num_classes)
    p_full = check_panoptic(p_full)
    if s_full.shape != p_full.shape:
        raise DimensionError(f"semantic map {s_full.shape} and panoptic map {p_full.shape} differ")
    expected = (config.output_height, config.output_width)
    if s_full.shape != expected:
        raise DimensionError(f"maps are {s_full.shape}, configuration produces {expected}")
    return s_full, p_full


def shared_encoder_features(s_full, p_full, stage, config, params=None, reduce=True):
    """
    The shared encoder applied at the resolution stage's upsampling layer
    produces, followed by that stage's 1x1 reducer (skipped with reduce=False).
    """
    s_full, p_full = _check_maps(s_full, p_full, config)
    if not 0 <= stage < config.num_stages:
        raise DomainError(f"stage {stage} out of range for {config.num_stages} stages")
    params = params or init_generator_params(config)
    height, width = config.stage_resolution(stage + 1)
    s_u = downsample_to(s_full, height, width)
    p_u = downsample_to(p_full, height, width)
    if not reduce:
        labels = one_hot(s_u, config.num_classes, dtype=config.scalar_type)
        return panoptic_conv_forward(labels, p_u, params.encoder)
    return encode_holes(s_u, p_u, params.hole_fill(stage), config.num_classes, config.scalar_type)


def generator_forward(s_full, p_full, config, params=None, threads=1):
    s_full, p_full = _check_maps(s_full, p_full, config)
    params = params or init_generator_params(config)
    dtype = config.scalar_type

    s_base = downsample_to(s_full, config.base_height, config.base_width)
    p_base = downsample_to(p_full, config.base_height, config.base_width)
    x = _conv(one_hot(s_base, config.num_classes, dtype=dtype), p_base, params.encoder, config.mode,
              threads)

    for stage, block in enumerate(params.blocks):
        height, width = config.stage_resolution(stage)
        s_stage = downsample_to(s_full, height, width)
        p_stage = downsample_to(p_full, height, width)
        x = resblock_forward(x, s_stage, p_stage, block, config.num_classes, config.mode, threads)
        if config.mode == "baseline":
            x = nearest_upsample(x, 2)
        else:
            x = panoptic_upsample(x, p_full, s_full, (2 * height, 2 * width),
                                  params.hole_fill(stage), config.num_classes)
        logger.debug("stage %d -> %s", stage, x.shape)

    x = standard_conv_forward(leaky_relu(x, LEAKY_SLOPE), params.head)
    return np.tanh(x)
