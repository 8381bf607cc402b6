"""
Central finite-difference verification of the analytic backward passes.

The step is rounded down to a power of two and the random fixtures for
features and output weightings are dyadic, so perturbations of a pure
copy (the alignment routing) are exact and its error is exactly zero.
"""
import logging
from dataclasses import dataclass

import numpy as np

from ..exceptions import DimensionError, DomainError
from .panoptic_conv import (ConvParams, panoptic_conv_backward,
                            panoptic_conv_forward)
from .panoptic_upsample import (HoleFillParams, panoptic_upsample,
                                panoptic_upsample_backward)

logger = logging.getLogger(__name__)

OPS = ("conv", "upsample")


@dataclass(frozen=True)
class GradCheckReport:
    op: str
    seed: int
    size: tuple
    max_rel_error: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.max_rel_error < self.tolerance)


def exact_step(step):
    if step <= 0:
        raise DomainError(f"finite-difference step must be positive, got {step}")
    return float(2.0 ** np.floor(np.log2(step)))


def central_difference(f, x, weighting, step):
    """
    Gradient of sum(weighting * f(x)) with respect to every entry of x.
    """
    grad = np.zeros_like(x, dtype=np.float64)
    for index in np.ndindex(x.shape):
        plus = x.copy()
        minus = x.copy()
        plus[index] += step
        minus[index] -= step
        grad[index] = np.sum(weighting * (f(plus) - f(minus))) / (2 * step)
    return grad


def max_relative_error(analytic, numeric):
    """
    Largest absolute disagreement, relative to the larger gradient scale.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.shape != numeric.shape:
        raise DimensionError(f"gradient shapes differ: {analytic.shape} vs {numeric.shape}")
    if analytic.size == 0:
        return 0.0
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)))
    difference = np.max(np.abs(analytic - numeric))
    if difference == 0:
        return 0.0
    return float(difference / max(scale, np.finfo(np.float64).tiny))


def parse_size(text, parts=2):
    try:
        dims = tuple(int(piece) for piece in str(text).lower().split("x"))
    except ValueError:
        raise DomainError(f"size {text!r} is not of the form {'x'.join(['N'] * parts)}")
    if len(dims) != parts or any(dim <= 0 for dim in dims):
        raise DomainError(f"size {text!r} needs {parts} positive dimensions")
    return dims


def dyadic(rng, shape, denominator=16, bound=64):
    return rng.integers(-bound, bound + 1, size=shape) / denominator


def random_instance_map(rng, height, width, num_ids=3):
    return rng.integers(1, num_ids + 1, size=(height, width)).astype(np.uint32)


def random_conv_params(rng, out_channels, in_channels, kernel_size, std=0.5):
    return ConvParams(rng.normal(0.0, std, size=(out_channels, in_channels, kernel_size, kernel_size)),
                      rng.normal(0.0, std, size=out_channels))


def _with_weights(params, weights):
    return ConvParams(weights, params.bias)


def _with_bias(params, bias):
    return ConvParams(params.weights, bias)


def _worst(pairs):
    return max(max_relative_error(analytic, numeric) for analytic, numeric in pairs)


def check_conv(seed, size=(5, 5), channels=2, kernel_size=3, step=1e-5, tolerance=1e-5,
               inject_bug=False):
    height, width = size
    rng = np.random.default_rng(seed)
    step = exact_step(step)
    x = dyadic(rng, (1, channels, height, width))
    p = random_instance_map(rng, height, width)
    params = random_conv_params(rng, channels, channels, kernel_size)
    weighting = dyadic(rng, (1, channels, height, width))

    grads = panoptic_conv_backward(weighting, x, p, params)
    grad_input = grads.grad_input.copy()
    if inject_bug:
        grad_input.flat[0] += 1.0

    numeric_input = central_difference(lambda v: panoptic_conv_forward(v, p, params), x, weighting, step)
    numeric_weights = central_difference(
        lambda w: panoptic_conv_forward(x, p, _with_weights(params, w)), params.weights, weighting, step)
    numeric_bias = central_difference(
        lambda b: panoptic_conv_forward(x, p, _with_bias(params, b)), params.bias, weighting, step)

    error = _worst([(grad_input, numeric_input),
                    (grads.grad_weights, numeric_weights),
                    (grads.grad_bias, numeric_bias)])
    logger.debug("conv gradcheck seed=%d size=%s error=%.3e", seed, size, error)
    return GradCheckReport("conv", seed, tuple(size), error, tolerance)


def check_upsample(seed, size=(4, 6), channels=2, num_classes=3, constant=False, step=1e-5,
                   tolerance=1e-5, inject_bug=False):
    """
    size is the upsampled (output) resolution and must be even.
    """
    height, width = size
    if height % 2 or width % 2:
        raise DimensionError(f"upsampled size {height}x{width} must be even")
    rng = np.random.default_rng(seed)
    step = exact_step(step)
    f_d = dyadic(rng, (1, channels, height // 2, width // 2))
    if constant:
        p_full = np.full((height, width), 7, dtype=np.uint32)
        s_full = np.zeros((height, width), dtype=np.int64)
    else:
        p_full = random_instance_map(rng, height, width)
        s_full = (p_full.astype(np.int64) - 1) % num_classes
    encoder = random_conv_params(rng, 4, num_classes, 3)
    reducer = random_conv_params(rng, channels, 4, 1)
    weighting = dyadic(rng, (1, channels, height, width))
    target = (height, width)

    def forward(features, enc=encoder, red=reducer):
        return panoptic_upsample(features, p_full, s_full, target, HoleFillParams(enc, red), num_classes)

    grads = panoptic_upsample_backward(weighting, f_d, p_full, s_full, target,
                                       HoleFillParams(encoder, reducer), num_classes)
    grad_input = grads.grad_input.copy()
    if inject_bug:
        grad_input.flat[0] += 1.0

    pairs = [(grad_input, central_difference(forward, f_d, weighting, step))]
    if not constant:
        pairs += [
            (grads.encoder.grad_weights, central_difference(
                lambda w: forward(f_d, enc=_with_weights(encoder, w)), encoder.weights, weighting, step)),
            (grads.encoder.grad_bias, central_difference(
                lambda b: forward(f_d, enc=_with_bias(encoder, b)), encoder.bias, weighting, step)),
            (grads.reducer.grad_weights, central_difference(
                lambda w: forward(f_d, red=_with_weights(reducer, w)), reducer.weights, weighting, step)),
            (grads.reducer.grad_bias, central_difference(
                lambda b: forward(f_d, red=_with_bias(reducer, b)), reducer.bias, weighting, step)),
        ]
    error = _worst(pairs)
    logger.debug("upsample gradcheck seed=%d size=%s error=%.3e", seed, size, error)
    return GradCheckReport("upsample", seed, tuple(size), error, tolerance)


def run_check(op, seed, size, step=1e-5, tolerance=1e-5, inject_bug=False, constant=False):
    if op == "conv":
        return check_conv(seed, size, step=step, tolerance=tolerance, inject_bug=inject_bug)
    if op == "upsample":
        return check_upsample(seed, size, constant=constant, step=step, tolerance=tolerance,
                              inject_bug=inject_bug)
    raise DomainError(f"unknown gradient check {op!r}, expected one of {OPS}")
