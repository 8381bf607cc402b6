"""
Dense array substrate shared by the kernels.

Tensors are rank 4 numpy arrays in (n, c, h, w) layout, float64 unless a
caller asks for float32. Panoptic maps are 2-D uint32 arrays, semantic maps
2-D integer arrays of class indices.
"""
import logging

import numpy as np

from ..exceptions import DimensionError, DomainError

logger = logging.getLogger(__name__)

# never present in user data; used to pad maps at borders
PAD_ID = np.uint32(2 ** 32 - 1)

# class_id * INSTANCE_OFFSET + instance_index
INSTANCE_OFFSET = 1000

DTYPES = {
    "float64": np.float64,
    "float32": np.float32,
}


def resolve_dtype(name):
    try:
        return DTYPES[str(name)]
    except KeyError:
        raise DomainError(f"unsupported scalar type {name!r}, expected one of {sorted(DTYPES)}")


def check_tensor(x, name="tensor"):
    x = np.asarray(x)
    if x.ndim != 4:
        raise DimensionError(f"{name} must have rank 4 (n, c, h, w), got shape {x.shape}")
    if x.dtype not in (np.float64, np.float32):
        x = x.astype(np.float64)
    return x


def check_panoptic(p, name="panoptic map"):
    p = np.asarray(p)
    if p.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {p.shape}")
    if p.size == 0:
        raise DimensionError(f"{name} is empty, got shape {p.shape}")
    if not np.issubdtype(p.dtype, np.integer):
        raise DomainError(f"{name} must hold integer ids, got {p.dtype}")
    if p.min() < 0 or p.max() >= int(PAD_ID):
        raise DomainError(f"{name} ids must lie in [0, {int(PAD_ID)})")
    return p.astype(np.uint32, copy=False)


def check_semantic(s, num_classes=None, name="semantic map"):
    s = np.asarray(s)
    if s.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {s.shape}")
    if not np.issubdtype(s.dtype, np.integer):
        raise DomainError(f"{name} must hold integer class indices, got {s.dtype}")
    if s.size and s.min() < 0:
        raise DomainError(f"{name} holds negative class index {int(s.min())}")
    if num_classes is not None and s.size and s.max() >= num_classes:
        raise DomainError(f"{name} holds class index {int(s.max())} >= class count {num_classes}")
    return s.astype(np.int64, copy=False)


def make_panoptic_id(class_id, instance_index=0):
    """
    Stuff classes use instance_index 0, things number their instances from 1.
    """
    if instance_index < 0 or instance_index >= INSTANCE_OFFSET:
        raise DomainError(f"instance index {instance_index} outside [0, {INSTANCE_OFFSET})")
    if class_id < 0:
        raise DomainError(f"negative class id {class_id}")
    return class_id * INSTANCE_OFFSET + instance_index


def split_panoptic_id(panoptic_id):
    return divmod(int(panoptic_id), INSTANCE_OFFSET)


def nearest_downsample(label_map, factor):
    """
    Keep the top-left sample of every factor x factor block.
    """
    label_map = np.asarray(label_map)
    if label_map.ndim != 2:
        raise DimensionError(f"map must be 2-D, got shape {label_map.shape}")
    factor = int(factor)
    if factor < 1:
        raise DimensionError(f"downsampling factor must be positive, got {factor}")
    height, width = label_map.shape
    if height % factor or width % factor:
        raise DimensionError(
            f"map of size {height}x{width} is not divisible by factor {factor}")
    return np.ascontiguousarray(label_map[::factor, ::factor])


def downsample_to(label_map, height, width):
    """
    Nearest-downsample a full-resolution map to (height, width).
    """
    full_h, full_w = np.shape(label_map)
    if height <= 0 or width <= 0 or full_h % height or full_w % width:
        raise DimensionError(
            f"map of size {full_h}x{full_w} cannot be reduced to {height}x{width}")
    factor_h, factor_w = full_h // height, full_w // width
    if factor_h != factor_w:
        raise DimensionError(
            f"map of size {full_h}x{full_w} needs unequal factors to reach {height}x{width}")
    return nearest_downsample(label_map, factor_h)


def nearest_upsample(x, factor):
    x = check_tensor(x)
    factor = int(factor)
    if factor < 1:
        raise DimensionError(f"upsampling factor must be >= 1, got {factor}")
    if factor == 1:
        return x.copy()
    return x.repeat(factor, axis=2).repeat(factor, axis=3)


def nearest_upsample_transpose(grad, factor):
    """
    Adjoint of nearest_upsample: each source receives the sum of its replicas.
    """
    grad = check_tensor(grad, "gradient")
    n, c, h, w = grad.shape
    if h % factor or w % factor:
        raise DimensionError(f"gradient of size {h}x{w} is not divisible by {factor}")
    return grad.reshape(n, c, h // factor, factor, w // factor, factor).sum(axis=(3, 5))


def one_hot(semantic, num_classes, dtype=np.float64):
    semantic = check_semantic(semantic, num_classes)
    height, width = semantic.shape
    out = np.zeros((1, num_classes, height, width), dtype=dtype)
    rows, cols = np.indices((height, width))
    out[0, semantic, rows, cols] = 1
    return out


def boundary_map(panoptic, dtype=np.float64):
    """
    1 where a pixel's id differs from any in-bounds 4-neighbour.
    """
    p = check_panoptic(panoptic)
    edges = np.zeros(p.shape, dtype=bool)
    vertical = p[1:, :] != p[:-1, :]
    horizontal = p[:, 1:] != p[:, :-1]
    edges[1:, :] |= vertical
    edges[:-1, :] |= vertical
    edges[:, 1:] |= horizontal
    edges[:, :-1] |= horizontal
    return edges.astype(dtype)


def pad_panoptic(panoptic, radius):
    return np.pad(check_panoptic(panoptic), radius, mode="constant", constant_values=PAD_ID)


def leaky_relu(x, slope=0.2):
    return np.where(x >= 0, x, slope * x)


def checksum(x):
    return float(np.sum(x, dtype=np.float64))
