"""
Readers and writers for panoptic maps, semantic maps, tensors and images.

Panoptic PNGs follow the COCO panoptic convention, id = R + 256 G + 65536 B,
semantic PNGs are 8-bit grayscale class indices, tensors travel as text
fixtures and generated images as 8-bit RGB PNGs.
"""
import logging
import struct

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..exceptions import DimensionError, DomainError, FormatError
from .tensor_core import check_panoptic, check_semantic, check_tensor

logger = logging.getLogger(__name__)

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
# signature, chunk length, "IHDR", width, height, bit depth, colour type
_IHDR = struct.Struct(">8sI4sIIBB")

COLOR_GRAYSCALE = 0
COLOR_RGB = 2

MAX_PANOPTIC_PNG_ID = 256 ** 3

FIXTURE_HEADER = "tensor"


def _source_name(source):
    return getattr(source, "name", source)


def _read_head(source, size):
    if hasattr(source, "read"):
        raw = source.read(size)
        source.seek(0)
        return raw
    with open(source, "rb") as handle:
        return handle.read(size)


def _png_header(path):
    try:
        raw = _read_head(path, _IHDR.size)
    except OSError as exc:
        raise FormatError(f"cannot read PNG: {exc.strerror}", path=_source_name(path), location="offset 0")
    path = _source_name(path)
    if len(raw) < _IHDR.size:
        raise FormatError("truncated PNG header", path=path, location=f"offset {len(raw)}")
    signature, _, chunk, _, _, bit_depth, color_type = _IHDR.unpack(raw)
    if signature != PNG_SIGNATURE:
        raise FormatError("not a PNG file", path=path, location="offset 0")
    if chunk != b"IHDR":
        raise FormatError("first chunk is not IHDR", path=path, location="offset 12")
    return bit_depth, color_type


def _require_layout(path, bit_depth, color_type, expected_color, description):
    path = _source_name(path)
    if bit_depth != 8:
        raise FormatError(f"expected 8-bit {description}, bit depth is {bit_depth}",
                          path=path, location="offset 24")
    if color_type != expected_color:
        raise FormatError(f"expected {description}, PNG colour type is {color_type}",
                          path=path, location="offset 25")


def _load_pixels(path):
    try:
        with Image.open(path) as image:
            image.load()
            return np.asarray(image)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise FormatError(f"cannot decode PNG data: {exc}", path=_source_name(path), location="offset 33")


def read_panoptic_png(path):
    bit_depth, color_type = _png_header(path)
    _require_layout(path, bit_depth, color_type, COLOR_RGB, "RGB image")
    rgb = _load_pixels(path).astype(np.uint32)
    ids = rgb[:, :, 0] + 256 * rgb[:, :, 1] + 256 * 256 * rgb[:, :, 2]
    logger.debug("read panoptic map %s from %s", ids.shape, path)
    return ids.astype(np.uint32)


def write_panoptic_png(panoptic, path):
    p = check_panoptic(panoptic)
    if p.size and int(p.max()) >= MAX_PANOPTIC_PNG_ID:
        row, col = np.unravel_index(int(np.argmax(p)), p.shape)
        raise DomainError(
            f"id {int(p.max())} at row {row}, column {col} does not fit a 24-bit RGB pixel")
    rgb = np.stack([p % 256, (p // 256) % 256, p // (256 * 256)], axis=-1).astype(np.uint8)
    Image.fromarray(rgb).save(path, format="PNG")


def read_semantic_png(path, num_classes=None):
    bit_depth, color_type = _png_header(path)
    _require_layout(path, bit_depth, color_type, COLOR_GRAYSCALE, "grayscale image")
    labels = _load_pixels(path).astype(np.int64)
    if num_classes is not None:
        outside = np.argwhere(labels >= num_classes)
        if len(outside):
            row, col = outside[0]
            raise DomainError(
                f"class index {labels[row, col]} at row {row}, column {col} of {_source_name(path)} "
                f"is not below the class count {num_classes}")
    return labels


def write_semantic_png(semantic, path, num_classes=None):
    if num_classes is not None and num_classes > 256:
        raise DomainError(f"8-bit semantic PNGs hold at most 256 classes, got {num_classes}")
    s = check_semantic(semantic, num_classes if num_classes is not None else 256)
    Image.fromarray(s.astype(np.uint8)).save(path, format="PNG")


def write_tensor_fixture(x, path):
    x = check_tensor(x)
    n, c, h, w = x.shape
    with open(path, "w") as handle:
        handle.write(f"{FIXTURE_HEADER} {n} {c} {h} {w}\n")
        for row in x.astype(np.float64).reshape(-1, w) if w else ():
            handle.write(" ".join("%.17g" % value for value in row))
            handle.write("\n")


def read_tensor_fixture(path):
    try:
        with open(path) as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read tensor fixture: {exc.strerror}", path=path)
    if not lines:
        raise FormatError("empty tensor fixture", path=path, location="line 1")

    header = lines[0].split()
    if len(header) != 5 or header[0] != FIXTURE_HEADER:
        raise FormatError(f"header must be '{FIXTURE_HEADER} <n> <c> <h> <w>', got {lines[0]!r}",
                          path=path, location="line 1")
    try:
        shape = tuple(int(field) for field in header[1:])
    except ValueError:
        raise FormatError(f"non-integer dimension in header {lines[0]!r}", path=path, location="line 1")
    if any(dim < 0 for dim in shape):
        raise FormatError(f"negative dimension in header {lines[0]!r}", path=path, location="line 1")

    values = []
    for line_number, line in enumerate(lines[1:], start=2):
        for column, token in enumerate(line.split(), start=1):
            try:
                values.append(float(token))
            except ValueError:
                raise FormatError(f"cannot parse {token!r} as a number", path=path,
                                  location=f"line {line_number}, value {column}")
    expected = int(np.prod(shape))
    if len(values) != expected:
        raise FormatError(f"header declares {expected} values, found {len(values)}",
                          path=path, location=f"line {len(lines)}")
    return np.asarray(values, dtype=np.float64).reshape(shape)


def quantize_image(x):
    """
    [-1, 1] -> uint8 by round-half-up of (v + 1) / 2 * 255, clamped.
    """
    x = check_tensor(x, "image")
    if x.shape[0] != 1 or x.shape[1] != 3:
        raise DimensionError(f"image tensor must have shape (1, 3, H, W), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("image tensor contains NaN or infinite values")
    levels = np.floor((x[0].astype(np.float64) + 1) / 2 * 255 + 0.5)
    return np.clip(levels, 0, 255).astype(np.uint8).transpose(1, 2, 0)


def write_image_png(x, path):
    Image.fromarray(np.ascontiguousarray(quantize_image(x))).save(path, format="PNG")


def read_image_png(path):
    bit_depth, color_type = _png_header(path)
    _require_layout(path, bit_depth, color_type, COLOR_RGB, "RGB image")
    return _load_pixels(path)
