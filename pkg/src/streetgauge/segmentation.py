"""Per-pixel class confidences and the 12-dimensional feature sequences.

Confidence maps come from files (SRCM, below) produced by an external
segmenter, or from a deterministic mock used in tests.  Feature extraction
keeps three normalized color channels plus the confidences of the nine
retained streetscape classes, giving one 12-vector per sampled pixel.

SRCM layout, little-endian:

    magic 'SRCM' | u16 version=1 | u32 width | u32 height | u16 class_count=19
    | 19 x (u16 name_length, UTF-8 name) in canonical order
    | width*height*19 float32 values, pixel-major (row-major pixels, class fastest)
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SRCM_MAGIC = b"SRCM"
SRCM_VERSION = 1

# Canonical 19-class set, fixed order.
CLASS_NAMES: tuple[str, ...] = (
    "road",
    "sidewalk",
    "building",
    "wall",
    "fence",
    "pole",
    "traffic_light",
    "traffic_sign",
    "vegetation",
    "terrain",
    "sky",
    "person",
    "rider",
    "car",
    "truck",
    "bus",
    "train",
    "motorcycle",
    "bicycle",
)
N_CLASSES = len(CLASS_NAMES)

# Classes whose confidences survive into the feature vector, in feature order.
RETAINED_CLASSES: tuple[str, ...] = (
    "sidewalk",
    "building",
    "wall",
    "fence",
    "pole",
    "traffic_light",
    "traffic_sign",
    "vegetation",
    "terrain",
)
RETAINED_INDICES = tuple(CLASS_NAMES.index(name) for name in RETAINED_CLASSES)

N_FEATURES = 3 + len(RETAINED_CLASSES)  # r, g, b + 9 retained confidences
FEATURE_NAMES: tuple[str, ...] = ("r", "g", "b") + RETAINED_CLASSES


class ConfidenceMapError(ValueError):
    pass


@dataclass
class ConfidenceMap:
    """H x W x 19 per-pixel class confidences, each value in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 3 or self.data.shape[2] != N_CLASSES:
            raise ConfidenceMapError(f"expected HxWx{N_CLASSES} data, got {self.data.shape}")
        if self.data.shape[0] == 0 or self.data.shape[1] == 0:
            raise ConfidenceMapError("dimensions must be positive")
        if np.any(self.data < 0.0) or np.any(self.data > 1.0):
            raise ConfidenceMapError("confidence values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def write_confidence_map(confmap: ConfidenceMap, path: str | Path) -> None:
    with Path(path).open("wb") as fh:
        fh.write(SRCM_MAGIC)
        fh.write(struct.pack("<HIIH", SRCM_VERSION, confmap.width, confmap.height, N_CLASSES))
        for name in CLASS_NAMES:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(confmap.data, dtype="<f4").tobytes())


def load_confidence_map(path: str | Path) -> ConfidenceMap:
    data = Path(path).read_bytes()
    if data[:4] != SRCM_MAGIC:
        raise ConfidenceMapError(f"{path}: bad magic {data[:4]!r}")
    try:
        version, width, height, class_count = struct.unpack_from("<HIIH", data, 4)
    except struct.error as exc:
        raise ConfidenceMapError(f"{path}: truncated header") from exc
    if version != SRCM_VERSION:
        raise ConfidenceMapError(f"{path}: unsupported version {version}")
    if class_count != N_CLASSES:
        raise ConfidenceMapError(f"{path}: expected {N_CLASSES} classes, found {class_count}")
    offset = 16
    names = []
    for _ in range(class_count):
        try:
            (length,) = struct.unpack_from("<H", data, offset)
            offset += 2
            names.append(data[offset : offset + length].decode("utf-8"))
            offset += length
        except (struct.error, UnicodeDecodeError) as exc:
            raise ConfidenceMapError(f"{path}: truncated class table") from exc
    if tuple(names) != CLASS_NAMES:
        raise ConfidenceMapError(f"{path}: class list mismatch: {names}")
    expected = width * height * N_CLASSES * 4
    payload = data[offset:]
    if len(payload) != expected:
        raise ConfidenceMapError(f"{path}: payload {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f4").reshape(height, width, N_CLASSES).copy()
    return ConfidenceMap(data=values)


_MIX_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_MUL2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64 arrays (wrapping)."""
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _MIX_MUL1
        x = (x ^ (x >> np.uint64(27))) * _MIX_MUL2
        return x ^ (x >> np.uint64(31))


def mock_segment(image: np.ndarray, seed: int) -> ConfidenceMap:
    """Deterministic stand-in for a neural segmenter.

    Each confidence is a hash of (pixel coordinates, pixel color, class
    index, seed) mapped into [0, 1], so identical inputs give bit-identical
    maps on every platform.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected HxWx3 image, got {image.shape}")
    if image.shape[0] == 0 or image.shape[1] == 0:
        raise ValueError("image must be non-empty")
    h, w = image.shape[:2]
    xs = np.arange(w, dtype=np.uint64)[None, :, None]
    ys = np.arange(h, dtype=np.uint64)[:, None, None]
    classes = np.arange(N_CLASSES, dtype=np.uint64)[None, None, :]
    rgb = image.astype(np.uint64)
    packed = (rgb[:, :, 0] << np.uint64(16)) | (rgb[:, :, 1] << np.uint64(8)) | rgb[:, :, 2]
    state = _mix64(np.uint64(seed) ^ _GOLDEN)
    state = _mix64(state ^ xs)
    state = _mix64(state ^ ys)
    state = _mix64(state ^ packed[:, :, None])
    state = _mix64(state ^ classes)
    values = (state >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    return ConfidenceMap(data=values.astype(np.float32))


@dataclass
class FeatureSequence:
    """Sampled per-pixel feature rows for one frame: S x 12 in [0, 1]."""

    frame_id: str
    rows: np.ndarray
    sample_seed: int

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2 or self.rows.shape[1] != N_FEATURES:
            raise ValueError(f"rows must be Sx{N_FEATURES}, got {self.rows.shape}")
        if self.rows.shape[0] < 1:
            raise ValueError("sequence must have at least one row")


def extract_features(
    image: np.ndarray,
    confmap: ConfidenceMap,
    sample_size: int,
    seed: int,
    frame_id: str = "",
) -> FeatureSequence:
    """Build the per-pixel feature sequence for one frame.

    Colors are divided by 255; the nine retained-class confidences follow in
    canonical order.  When sample_size covers the whole raster every pixel is
    used once, in row-major order; otherwise a seeded uniform subsample
    without replacement is taken and rows appear in sampled order.
    """
    image = np.asarray(image)
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    if image.shape[:2] != confmap.data.shape[:2]:
        raise ValueError(
            f"image {image.shape[:2]} and confidence map "
            f"{confmap.data.shape[:2]} dimensions differ"
        )
    h, w = image.shape[:2]
    n_pixels = h * w
    colors = image.reshape(n_pixels, 3).astype(np.float64) / 255.0
    retained = confmap.data.reshape(n_pixels, N_CLASSES)[:, RETAINED_INDICES].astype(np.float64)
    if sample_size >= n_pixels:
        chosen = np.arange(n_pixels)
    else:
        rng = np.random.default_rng(seed)
        chosen = rng.choice(n_pixels, size=sample_size, replace=False)
    rows = np.concatenate([colors[chosen], retained[chosen]], axis=1)
    return FeatureSequence(frame_id=frame_id, rows=rows, sample_seed=seed)


def frame_seed(base_seed: int, frame_id: str) -> int:
    """Stable per-frame sampling seed derived from a base seed and frame id."""
    digest = hashlib.blake2b(
        f"{base_seed}\x00{frame_id}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


# Feature sequence container file (SRFB), little-endian:
#   magic 'SRFB' | u16 version=1 | u32 frame_count
#   per frame: u16 id_length | UTF-8 frame_id | u64 sample_seed
#              | u32 row_count | u16 dim=12 | row_count*dim float32
SRFB_MAGIC = b"SRFB"
SRFB_VERSION = 1


def write_feature_file(sequences: list[FeatureSequence], path: str | Path) -> None:
    with Path(path).open("wb") as fh:
        fh.write(SRFB_MAGIC)
        fh.write(struct.pack("<HI", SRFB_VERSION, len(sequences)))
        for seq in sequences:
            raw = seq.frame_id.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<QIH", seq.sample_seed, seq.rows.shape[0], N_FEATURES))
            fh.write(np.ascontiguousarray(seq.rows, dtype="<f4").tobytes())


def read_feature_file(path: str | Path) -> list[FeatureSequence]:
    data = Path(path).read_bytes()
    if data[:4] != SRFB_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}")
    version, count = struct.unpack_from("<HI", data, 4)
    if version != SRFB_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    offset = 10
    sequences = []
    for _ in range(count):
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        frame_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        sample_seed, n_rows, dim = struct.unpack_from("<QIH", data, offset)
        offset += 14
        if dim != N_FEATURES:
            raise ValueError(f"{path}: unexpected feature dimension {dim}")
        n_values = n_rows * dim
        rows = np.frombuffer(data, dtype="<f4", count=n_values, offset=offset)
        offset += n_values * 4
        sequences.append(
            FeatureSequence(
                frame_id=frame_id,
                rows=rows.reshape(n_rows, dim).astype(np.float64),
                sample_seed=sample_seed,
            )
        )
    return sequences
