"""
Panoptic-aware partial convolution.

At every output location the k x k window is masked down to the pixels
sharing the centre pixel's panoptic id, and the masked sum is rescaled by
k*k / (number of surviving pixels) before the bias is added. Windows are
padded with PAD_ID, which never matches, so borders get the same
renormalization as id boundaries.

Two forward kernels compute the same function: a reference kernel that
accumulates one window offset at a time, and an optimized kernel that
gathers masked columns for fixed blocks of output rows and lowers each
block onto a single matrix product.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import DimensionError, DomainError, KernelIndexError
from .tensor_core import check_panoptic, check_tensor, pad_panoptic

logger = logging.getLogger(__name__)


def _check_kernel_size(kernel_size):
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise DomainError(f"kernel size must be odd and >= 1, got {kernel_size}")


@dataclass(frozen=True)
class ConvParams:
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights)
        bias = np.asarray(self.bias)
        if weights.ndim != 4 or weights.shape[2] != weights.shape[3]:
            raise DimensionError(
                f"weights must have shape (c_out, c_in, k, k), got {weights.shape}")
        _check_kernel_size(weights.shape[2])
        if bias.shape != (weights.shape[0],):
            raise DimensionError(
                f"bias must have shape ({weights.shape[0]},), got {bias.shape}")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
            raise DomainError("convolution parameters must be finite")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)

    @property
    def out_channels(self):
        return self.weights.shape[0]

    @property
    def in_channels(self):
        return self.weights.shape[1]

    @property
    def kernel_size(self):
        return self.weights.shape[2]

    @classmethod
    def zeros(cls, out_channels, in_channels, kernel_size, dtype=np.float64):
        return cls(np.zeros((out_channels, in_channels, kernel_size, kernel_size), dtype=dtype),
                   np.zeros(out_channels, dtype=dtype))

    @classmethod
    def normal(cls, rng, out_channels, in_channels, kernel_size, std=0.02, dtype=np.float64):
        """
        Weights from N(0, std), zero bias. Draws exactly c_out*c_in*k*k values.
        """
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        weights = rng.normal(0.0, std, size=shape).astype(dtype)
        return cls(weights, np.zeros(out_channels, dtype=dtype))


@dataclass(frozen=True)
class ConvGrads:
    grad_input: np.ndarray
    grad_weights: np.ndarray
    grad_bias: np.ndarray


def _check_operands(x, panoptic, params):
    x = check_tensor(x, "input")
    if panoptic is not None:
        panoptic = check_panoptic(panoptic)
        if panoptic.shape != x.shape[2:]:
            raise DimensionError(
                f"panoptic map {panoptic.shape} does not match input spatial dims {x.shape[2:]}")
    if x.shape[1] != params.in_channels:
        raise DimensionError(
            f"input has {x.shape[1]} channels, weights expect {params.in_channels}")
    return x, panoptic


def window_mask(panoptic, center, kernel_size):
    """
    Binary k x k mask of the window around center, 1 where the id equals
    the centre id. Positions outside the map are 0.
    """
    p = check_panoptic(panoptic)
    _check_kernel_size(kernel_size)
    i, j = center
    height, width = p.shape
    if not (0 <= i < height and 0 <= j < width):
        raise KernelIndexError(f"center {center} outside map of size {height}x{width}")
    padded = pad_panoptic(p, kernel_size // 2)
    window = padded[i:i + kernel_size, j:j + kernel_size]
    return (window == p[i, j]).astype(np.float64)


def window_masks(panoptic, kernel_size, dtype=np.float64):
    """
    All window masks at once, shape (k, k, h, w): entry [u, v, i, j] is the
    mask value at window offset (u, v) for the window centred on (i, j).
    """
    p = check_panoptic(panoptic)
    _check_kernel_size(kernel_size)
    height, width = p.shape
    padded = pad_panoptic(p, kernel_size // 2)
    masks = np.empty((kernel_size, kernel_size, height, width), dtype=dtype)
    for u in range(kernel_size):
        for v in range(kernel_size):
            masks[u, v] = padded[u:u + height, v:v + width] == p
    return masks


def _clipped_masks(panoptic, kernel_size, dtype):
    # 1 - clip(|P - P_center|, 0, 1), laid out (h, w, k, k) for the column gather
    p = check_panoptic(panoptic)
    padded = pad_panoptic(p, kernel_size // 2).astype(np.int64)
    windows = sliding_window_view(padded, (kernel_size, kernel_size))
    diff = np.abs(windows - p.astype(np.int64)[:, :, None, None])
    return (1 - np.clip(diff, 0, 1)).astype(dtype)


def _renormalization(counts, kernel_size):
    if counts.size:
        assert counts.min() >= 1, "every in-bounds centre matches itself"
    ratio = np.zeros(counts.shape, dtype=np.float64)
    np.divide(kernel_size * kernel_size, counts, out=ratio, where=counts > 0)
    return ratio


def _accumulate(x, weights, masks):
    """
    Masked window sum, one offset at a time. masks=None is plain zero padding.
    """
    n, _, height, width = x.shape
    kernel_size = weights.shape[2]
    radius = kernel_size // 2
    padded = np.pad(x, ((0, 0), (0, 0), (radius, radius), (radius, radius)))
    acc = np.zeros((n, weights.shape[0], height, width), dtype=x.dtype)
    for u in range(kernel_size):
        for v in range(kernel_size):
            patch = np.ascontiguousarray(padded[:, :, u:u + height, v:v + width])
            if masks is not None:
                patch = patch * masks[u, v]
            acc += np.einsum("oc,nchw->nohw", weights[:, :, u, v], patch)
    return acc


def standard_conv_forward(x, params):
    """
    Stride 1, zero padding (k-1)/2, same-size output.
    """
    x, _ = _check_operands(x, None, params)
    weights = params.weights.astype(x.dtype, copy=False)
    acc = _accumulate(x, weights, None)
    return acc + params.bias.astype(x.dtype)[None, :, None, None]


def panoptic_conv_forward(x, panoptic, params):
    x, p = _check_operands(x, panoptic, params)
    kernel_size = params.kernel_size
    masks = window_masks(p, kernel_size, dtype=x.dtype)
    counts = masks.sum(axis=(0, 1))
    ratio = _renormalization(counts, kernel_size).astype(x.dtype)

    acc = _accumulate(x, params.weights.astype(x.dtype, copy=False), masks)
    out = acc * ratio + params.bias.astype(x.dtype)[None, :, None, None]
    return np.where(counts > 0, out, 0).astype(x.dtype, copy=False)


def panoptic_conv_forward_optimized(x, panoptic, params, threads=1, row_block=16):
    """
    Same result as panoptic_conv_forward. Output rows are split into fixed
    blocks of row_block rows; blocks are independent and may run on a
    thread pool, and since block boundaries never depend on the thread
    count neither does the result.
    """
    x, p = _check_operands(x, panoptic, params)
    row_block = int(row_block)
    if row_block < 1:
        raise DomainError(f"row block must be at least 1 row, got {row_block}")
    n, c_in, height, width = x.shape
    kernel_size = params.kernel_size
    radius = kernel_size // 2
    c_out = params.out_channels

    masks = _clipped_masks(p, kernel_size, x.dtype)
    counts = masks.sum(axis=(2, 3))
    ratio = _renormalization(counts, kernel_size).astype(x.dtype)
    padded = np.pad(x, ((0, 0), (0, 0), (radius, radius), (radius, radius)))
    columns_weights = params.weights.astype(x.dtype, copy=False).reshape(c_out, -1)
    bias = params.bias.astype(x.dtype)[None, :, None, None]
    out = np.empty((n, c_out, height, width), dtype=x.dtype)

    def run_block(start):
        stop = min(start + row_block, height)
        rows = stop - start
        # (n, c_in, rows, w, k, k)
        windows = sliding_window_view(
            padded[:, :, start:stop + 2 * radius, :], (kernel_size, kernel_size), axis=(2, 3))
        columns = windows * masks[start:stop]
        columns = columns.transpose(0, 2, 3, 1, 4, 5).reshape(n, rows * width, -1)
        block = np.matmul(columns, columns_weights.T)
        block = block.transpose(0, 2, 1).reshape(n, c_out, rows, width)
        out[:, :, start:stop, :] = block * ratio[start:stop] + bias

    starts = range(0, height, row_block)
    logger.debug("optimized panoptic conv %s -> %d channels, %d blocks on %d threads",
                 x.shape, c_out, len(starts), threads)
    if threads <= 1:
        for start in starts:
            run_block(start)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_block, starts))
    return np.where(counts > 0, out, 0).astype(x.dtype, copy=False)


def _backward(grad_out, x, params, masks, ratio, valid):
    n, c_in, height, width = x.shape
    kernel_size = params.kernel_size
    radius = kernel_size // 2
    weights = params.weights.astype(x.dtype, copy=False)
    grad_out = check_tensor(grad_out, "output gradient")
    expected = (n, params.out_channels, height, width)
    if grad_out.shape != expected:
        raise DimensionError(f"output gradient has shape {grad_out.shape}, expected {expected}")

    scaled = grad_out if ratio is None else grad_out * ratio
    padded = np.pad(x, ((0, 0), (0, 0), (radius, radius), (radius, radius)))
    grad_padded = np.zeros_like(padded)
    grad_weights = np.zeros_like(weights)
    for u in range(kernel_size):
        for v in range(kernel_size):
            routed = scaled if masks is None else scaled * masks[u, v]
            patch = padded[:, :, u:u + height, v:v + width]
            grad_weights[:, :, u, v] = np.einsum("nohw,nchw->oc", routed, patch)
            grad_padded[:, :, u:u + height, v:v + width] += np.einsum(
                "nohw,oc->nchw", routed, weights[:, :, u, v])

    live = grad_out if valid is None else grad_out * valid
    return ConvGrads(
        grad_input=grad_padded[:, :, radius:radius + height, radius:radius + width].copy(),
        grad_weights=grad_weights,
        grad_bias=live.sum(axis=(0, 2, 3)),
    )


def standard_conv_backward(grad_out, x, params):
    x, _ = _check_operands(x, None, params)
    return _backward(grad_out, x, params, None, None, None)


def panoptic_conv_backward(grad_out, x, panoptic, params):
    """
    Mask and ratio depend only on the panoptic map, so the layer is linear
    in both x and the weights.
    """
    x, p = _check_operands(x, panoptic, params)
    masks = window_masks(p, params.kernel_size, dtype=x.dtype)
    counts = masks.sum(axis=(0, 1))
    ratio = _renormalization(counts, params.kernel_size).astype(x.dtype)
    return _backward(grad_out, x, params, masks, ratio, (counts > 0).astype(x.dtype))
