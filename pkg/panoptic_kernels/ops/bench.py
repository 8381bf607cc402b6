"""
Microbenchmarks for the masked kernels.

Every timed output is checksummed: conv-opt against conv-ref, the other
kernels against their own first timed run. A drifting checksum raises
CheckFailure instead of producing a row.
"""
import csv
import logging
import statistics
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..exceptions import CheckFailure, DomainError
from .panoptic_conv import (ConvParams, panoptic_conv_forward,
                            panoptic_conv_forward_optimized, window_masks)
from .panoptic_upsample import HoleFillParams, align_upsample, hole_fill
from .tensor_core import checksum, nearest_downsample

logger = logging.getLogger(__name__)

KERNELS = ("conv-ref", "conv-opt", "mask", "align", "hole-fill")
FAMILIES = ("constant", "blocks", "random-instances")

REPORT_FIELDS = ["kernel", "size", "family", "iters", "median_s", "min_s",
                 "checksum", "ref_checksum", "speedup"]

HOLE_FILL_CLASSES = 8


@dataclass(frozen=True)
class BenchRow:
    kernel: str
    size: str
    family: str
    iters: int
    median_s: float
    min_s: float
    checksum: float
    ref_checksum: float
    speedup: Optional[float] = None


def format_size(shape):
    return "x".join(str(dim) for dim in shape)


def make_id_map(family, height, width, rng, num_instances=24):
    """
    constant: one id. blocks: a grid of 4x4 distinct tiles. random-instances:
    horizontal stuff bands overlaid with num_instances random rectangles.
    """
    if family == "constant":
        return np.full((height, width), 1000, dtype=np.uint32)
    if family == "blocks":
        rows = np.arange(height) * 4 // height
        cols = np.arange(width) * 4 // width
        return (1000 * (1 + rows[:, None] * 4 + cols[None, :])).astype(np.uint32)
    if family == "random-instances":
        bands = np.sort(rng.integers(0, height, size=3))
        ids = (1000 * (1 + np.searchsorted(bands, np.arange(height))))[:, None]
        ids = np.broadcast_to(ids, (height, width)).astype(np.uint32).copy()
        for instance in range(1, num_instances + 1):
            top, bottom = np.sort(rng.integers(0, height + 1, size=2))
            left, right = np.sort(rng.integers(0, width + 1, size=2))
            bottom, right = max(bottom, top + 1), max(right, left + 1)
            ids[top:bottom, left:right] = 10 * 1000 + instance
        return ids
    raise DomainError(f"unknown id-map family {family!r}, expected one of {FAMILIES}")


def _time(fn, iters, warmup):
    result = None
    for _ in range(warmup):
        result = fn()
    times = []
    sums = []
    for _ in range(iters):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
        sums.append(checksum(result))
    return times, sums, result


def _verify(kernel, sums, reference, rtol):
    scale = max(abs(reference), 1.0)
    for value in sums:
        if abs(value - reference) > rtol * scale:
            raise CheckFailure(
                f"{kernel} checksum {value!r} drifted from reference {reference!r}")


def verify_outputs(output, reference, rtol):
    """
    max |output - reference| must stay within rtol of the reference's scale,
    widened to what the output dtype can resolve
    """
    rtol = max(rtol, 64 * float(np.finfo(output.dtype).eps))
    scale = max(float(np.max(np.abs(reference))) if reference.size else 0.0, 1e-300)
    error = float(np.max(np.abs(output - reference))) if reference.size else 0.0
    if error > rtol * scale:
        raise CheckFailure(f"optimized output differs from reference by {error:.3e} "
                           f"(allowed {rtol * scale:.3e})")
    return error / scale


def _kernel_fn(kernel, x, p, params, threads, row_block):
    if kernel == "conv-ref":
        return lambda: panoptic_conv_forward(x, p, params)
    if kernel == "conv-opt":
        return lambda: panoptic_conv_forward_optimized(x, p, params, threads=threads, row_block=row_block)
    if kernel == "mask":
        return lambda: window_masks(p, params.kernel_size, dtype=x.dtype)
    if kernel == "align":
        p_d = nearest_downsample(p, 2)
        f_d = x[:, :, ::2, ::2]
        return lambda: align_upsample(f_d, p_d, p).features
    if kernel == "hole-fill":
        p_d = nearest_downsample(p, 2)
        aligned = align_upsample(x[:, :, ::2, ::2], p_d, p)
        semantic = (p // 1000 % HOLE_FILL_CLASSES).astype(np.int64)
        rng = np.random.default_rng(0)
        fill = HoleFillParams(
            encoder=ConvParams.normal(rng, x.shape[1], HOLE_FILL_CLASSES, 3, dtype=x.dtype),
            reducer=ConvParams.normal(rng, x.shape[1], x.shape[1], 1, dtype=x.dtype))
        return lambda: hole_fill(aligned, semantic, p, fill, HOLE_FILL_CLASSES)
    raise DomainError(f"unknown kernel {kernel!r}, expected one of {KERNELS}")


def bench_fixture(shape, family="random-instances", seed=0, dtype=np.float64, kernel_size=3):
    n, c, h, w = shape
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, c, h, w)).astype(dtype)
    p = make_id_map(family, h, w, rng)
    params = ConvParams.normal(rng, c, c, kernel_size, std=1.0, dtype=dtype)
    return x, p, params


def bench_kernel(kernel, x, p, params, iters, threads=1, row_block=16, warmup=1):
    """
    (times, checksums, last output) for iters timed runs of one kernel.
    """
    if iters < 1:
        raise DomainError(f"iters must be at least 1, got {iters}")
    fn = _kernel_fn(kernel, x, p, params, threads, row_block)
    return _time(fn, iters, warmup)


def run_suite(sizes, families=FAMILIES, iters=10, kernels=KERNELS, threads=1, row_block=16,
              warmup=2, rtol=1e-12, seed=0):
    if iters < 1:
        raise DomainError(f"iters must be at least 1, got {iters}")
    rows = []
    for shape in sizes:
        for family in families:
            x, p, params = bench_fixture(shape, family, seed)
            ref_output = None
            ref_median = None
            for kernel in kernels:
                times, sums, output = bench_kernel(kernel, x, p, params, iters, threads, row_block, warmup)
                if kernel == "conv-opt":
                    if ref_output is None:
                        ref_output = panoptic_conv_forward(x, p, params)
                    verify_outputs(output, ref_output, rtol)
                    expected = checksum(ref_output)
                else:
                    expected = sums[0]
                    _verify(kernel, sums, expected, rtol)
                median = statistics.median(times)
                if kernel == "conv-ref":
                    ref_output, ref_median = output, median
                speedup = ref_median / median if kernel == "conv-opt" and ref_median else None
                rows.append(BenchRow(kernel, format_size(shape), family, iters, median, min(times),
                                     sums[-1], expected, speedup))
                logger.info("%s %s %s median %.4fs", kernel, format_size(shape), family, median)
    return rows


def write_report(rows, stream):
    writer = csv.DictWriter(stream, fieldnames=REPORT_FIELDS)
    writer.writeheader()
    for row in rows:
        record = asdict(row)
        record["speedup"] = "" if row.speedup is None else "%.3f" % row.speedup
        for key in ("median_s", "min_s"):
            record[key] = "%.6f" % record[key]
        for key in ("checksum", "ref_checksum"):
            record[key] = "%.17g" % record[key]
        writer.writerow(record)
