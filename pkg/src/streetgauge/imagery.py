"""8-bit RGB raster IO.

Two on-disk forms are accepted: PNG (via Pillow) and SRIM, a headered raw
format that keeps tests free of any codec.  SRIM layout, little-endian:

    magic 'SRIM' | u16 version=1 | u32 width | u32 height | width*height*3 RGB bytes

Pixels are row-major, top-left first.  In memory a raster is a numpy
uint8 array of shape (height, width, 3).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

SRIM_MAGIC = b"SRIM"
SRIM_VERSION = 1

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class RasterFormatError(ValueError):
    pass


def _check_rgb(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError(f"expected uint8 HxWx3 raster, got {image.dtype} {image.shape}")
    if image.shape[0] == 0 or image.shape[1] == 0:
        raise ValueError("raster dimensions must be positive")
    return image


def write_srim(image: np.ndarray, path: str | Path) -> None:
    image = _check_rgb(image)
    h, w = image.shape[:2]
    with Path(path).open("wb") as fh:
        fh.write(SRIM_MAGIC)
        fh.write(struct.pack("<HII", SRIM_VERSION, w, h))
        fh.write(image.tobytes())


def read_srim(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != SRIM_MAGIC:
        raise RasterFormatError(f"{path}: bad magic {data[:4]!r}")
    version, w, h = struct.unpack_from("<HII", data, 4)
    if version != SRIM_VERSION:
        raise RasterFormatError(f"{path}: unsupported SRIM version {version}")
    payload = data[14:]
    expected = w * h * 3
    if len(payload) != expected:
        raise RasterFormatError(f"{path}: payload {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).copy()


def load_image(path: str | Path) -> np.ndarray:
    """Load an RGB raster, sniffing SRIM vs PNG by magic bytes."""
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(8)
    if head[:4] == SRIM_MAGIC:
        return read_srim(path)
    if head == _PNG_MAGIC:
        from PIL import Image

        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    raise RasterFormatError(f"{path}: not an SRIM or PNG file")


def write_image(image: np.ndarray, path: str | Path) -> None:
    """Write a raster; format chosen by extension (.png -> PNG, else SRIM)."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image

        Image.fromarray(_check_rgb(image), mode="RGB").save(path)
    else:
        write_srim(image, path)
