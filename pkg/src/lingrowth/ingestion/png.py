from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np
from PIL import Image, UnidentifiedImageError

from lingrowth.errors import DimensionMismatchError, IngestError
from lingrowth.grid import ImageField, Mask
from lingrowth.logging import get_logger

logger = get_logger(__name__)

GREYSCALE_MODES = {"1", "L", "LA", "La"}
SAMPLE_DEPTHS = {np.dtype(np.uint8): 8, np.dtype(np.uint16): 16}
SUPPORTED_BIT_DEPTHS = (8, 16)


def _is_greyscale(path: Path) -> bool:
    # pillow only parses the header here; it cannot decode 16-bit colour samples
    try:
        with Image.open(path) as image:
            image_format, mode = image.format, image.mode
    except (UnidentifiedImageError, OSError) as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    if image_format != "PNG":
        raise IngestError(f"{path} is not a PNG file")
    return mode in GREYSCALE_MODES or mode.startswith("I")


def _decode(path: Path) -> np.ndarray:
    try:
        buffer = np.fromfile(path, dtype=np.uint8)
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    try:
        pixels = cv2.imdecode(buffer, cv2.IMREAD_UNCHANGED)
    except cv2.error as exc:
        raise IngestError(f"cannot decode {path}: {exc}") from exc
    if pixels is None:
        raise IngestError(f"cannot decode {path}")
    return pixels


def read_samples(path: Path | str) -> tuple[np.ndarray, int]:
    """Integer samples of shape (H, W, N), N in {1, 3}, alpha dropped, plus bit depth."""
    path = Path(path)
    greyscale = _is_greyscale(path)
    pixels = _decode(path)
    bit_depth = SAMPLE_DEPTHS.get(pixels.dtype)
    if bit_depth is None:
        raise IngestError(f"{path}: unsupported sample type {pixels.dtype}")

    if pixels.ndim == 2:
        return pixels[:, :, None], bit_depth
    # grey with alpha decodes with the grey value leading every pixel
    if greyscale:
        return pixels[:, :, :1], bit_depth
    if pixels.shape[2] == 4:
        return cv2.cvtColor(pixels, cv2.COLOR_BGRA2RGB), bit_depth
    if pixels.shape[2] == 3:
        return cv2.cvtColor(pixels, cv2.COLOR_BGR2RGB), bit_depth
    raise IngestError(f"{path}: unsupported channel layout {pixels.shape}")


def ingest(
    input_path: Path | str, mask_path: Path | str | None = None, spacing: float = 1.0
) -> tuple[ImageField, Mask, int]:
    """Read a PNG into values in [0, 1], plus the inpainting mask and bit depth."""
    input_path = Path(input_path)
    samples, bit_depth = read_samples(input_path)
    scale = float(2**bit_depth - 1)
    field = ImageField(samples.astype(float) / scale, spacing)

    if mask_path is None:
        mask = Mask.empty(field.height, field.width)
    else:
        mask = read_mask(mask_path, (field.height, field.width))

    logger.info(
        "ingested %s: %dx%d, %d channel(s), %d-bit, %d masked pixel(s)",
        input_path,
        field.width,
        field.height,
        field.channels,
        bit_depth,
        mask.masked_count,
        extra={"component": "ingestion"},
    )
    return field, mask, bit_depth


def read_mask(mask_path: Path | str, shape: tuple[int, int]) -> Mask:
    """A pixel belongs to D iff the first channel of the mask image is nonzero."""
    mask_path = Path(mask_path)
    samples, _ = read_samples(mask_path)
    values = samples[:, :, 0]
    if values.shape != shape:
        raise DimensionMismatchError(
            f"mask {mask_path} has shape {values.shape}, expected {shape}"
        )
    return Mask(values != 0)


def write_png(path: Path | str, field: ImageField, bit_depth: int = 8) -> None:
    if bit_depth not in SUPPORTED_BIT_DEPTHS:
        raise IngestError(f"unsupported output bit depth {bit_depth}")
    if field.channels not in (1, 3):
        raise IngestError(f"cannot write {field.channels}-channel images as PNG")

    scale = float(2**bit_depth - 1)
    dtype = np.uint16 if bit_depth == 16 else np.uint8
    quantized = np.rint(np.clip(field.values, 0.0, 1.0) * scale).astype(dtype)
    if field.channels == 1:
        pixels = np.ascontiguousarray(quantized[:, :, 0])
    else:
        pixels = cv2.cvtColor(quantized, cv2.COLOR_RGB2BGR)

    path = Path(path)
    ok, encoded = cv2.imencode(".png", pixels)
    if not ok:
        raise IngestError(f"cannot encode {path}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encoded.tobytes())
    except OSError as exc:
        raise IngestError(f"cannot write {path}: {exc}") from exc
