"""File codecs: RGB images, label maps, tensors and key=value reports.

Tensor file layout (all integers unsigned 32-bit little-endian)::

    offset 0   8 bytes   magic  b"N2D3TENS"
    offset 8   u32       version (1)
    offset 12  u32       rank r, 1 <= r <= 4
    offset 16  r x u32   dims
    then       prod(dims) float32 little-endian, row-major

Label maps are 8-bit single-channel PNG (or binary PGM) holding region ids
0..3. Every malformed input raises a subclass of :class:`FormatError`.
"""
from __future__ import annotations

import math
import struct
import zlib
from pathlib import Path
from typing import Iterable

import numpy as np

from n2d3.disentangle import DisentanglementMap, Region

TENSOR_MAGIC = b"N2D3TENS"
TENSOR_VERSION = 1
MAX_RANK = 4
MAX_ELEMENTS = 2**32

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

# Approximate legend colors: blue, light blue, green, yellow.
PALETTE = {
    Region.DARKNESS: (0, 0, 255),
    Region.WELL_LIT: (128, 170, 255),
    Region.LIGHT_EFFECTS: (0, 200, 0),
    Region.HIGH_LIGHT: (255, 230, 0),
}


class FormatError(Exception):
    """Base class of every codec error."""


class ImageNotFoundError(FormatError, FileNotFoundError):
    pass


class UnsupportedFormatError(FormatError):
    """Unknown container, wrong color type or bit depth."""


class TruncatedDataError(FormatError):
    pass


class MagicMismatchError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class TensorDimensionError(FormatError):
    """Rank outside [1, 4] or an element count that cannot be represented."""


class LabelValueError(FormatError):
    pass


def _read_bytes(path) -> bytes:
    p = Path(path)
    try:
        return p.read_bytes()
    except FileNotFoundError:
        raise ImageNotFoundError(f"no such file: {p}") from None
    except IsADirectoryError:
        raise ImageNotFoundError(f"not a file: {p}") from None


# -- netpbm ----------------------------------------------------------------

def _parse_netpbm(data: bytes, magic: bytes, channels: int) -> np.ndarray:
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed, then exactly one whitespace byte before the payload
    pos = 2
    tokens = []
    n = len(data)
    while len(tokens) < 3:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise TruncatedDataError(f"{magic.decode()} header ends early")
        tok = data[start:pos]
        if not tok.isdigit():
            raise UnsupportedFormatError(f"bad {magic.decode()} header token {tok!r}")
        tokens.append(int(tok))
    if pos >= n:
        raise TruncatedDataError(f"{magic.decode()} header ends early")
    pos += 1
    width, height, maxval = tokens
    if width < 1 or height < 1:
        raise UnsupportedFormatError(f"image dimensions must be positive, got {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormatError(f"only 8-bit samples (maxval 255) are supported, got {maxval}")
    size = width * height * channels
    payload = data[pos : pos + size]
    if len(payload) < size:
        raise TruncatedDataError(f"expected {size} payload bytes, found {len(payload)}")
    arr = np.frombuffer(payload, dtype=np.uint8)
    return arr.reshape(height, width, channels) if channels > 1 else arr.reshape(height, width)


def _netpbm_bytes(arr: np.ndarray) -> bytes:
    if arr.ndim == 3:
        head = f"P6\n{arr.shape[1]} {arr.shape[0]}\n255\n"
    else:
        head = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n"
    return head.encode("ascii") + np.ascontiguousarray(arr, dtype=np.uint8).tobytes()


# -- png -------------------------------------------------------------------

def _png_header(data: bytes) -> tuple[int, int]:
    """Bit depth and color type from the IHDR chunk."""
    if len(data) < 33:
        raise TruncatedDataError("PNG shorter than its header")
    length, ctype = struct.unpack(">I4s", data[8:16])
    if ctype != b"IHDR" or length != 13:
        raise UnsupportedFormatError("PNG does not start with an IHDR chunk")
    return data[24], data[25]


def _decode_png(data: bytes, color_type: int) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError
    import io as _io

    depth, ctype = _png_header(data)
    if depth != 8 or ctype != color_type:
        kind = {2: "8-bit RGB", 0: "8-bit grayscale"}[color_type]
        raise UnsupportedFormatError(
            f"expected {kind} PNG, got bit depth {depth} color type {ctype}"
        )
    try:
        with Image.open(_io.BytesIO(data)) as im:
            im.load()
            return np.asarray(im, dtype=np.uint8).copy()
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(str(exc)) from None
    except (OSError, SyntaxError, ValueError, zlib.error, struct.error, EOFError) as exc:
        raise TruncatedDataError(f"PNG payload unreadable: {exc}") from None


def _encode_png(arr: np.ndarray, path: Path) -> None:
    from PIL import Image

    # uint8 (H, W, 3) maps to RGB and (H, W) to L
    Image.fromarray(np.ascontiguousarray(arr, dtype=np.uint8)).save(path, format="PNG")


def _is_netpbm_path(path: Path) -> bool:
    return path.suffix.lower() in (".ppm", ".pgm", ".pnm")


# -- images ----------------------------------------------------------------

def read_image_u8(path) -> np.ndarray:
    """8-bit RGB PNG or binary PPM (P6) as a ``(H, W, 3)`` uint8 array."""
    data = _read_bytes(path)
    if data.startswith(b"P6"):
        return _parse_netpbm(data, b"P6", 3)
    if data.startswith(PNG_SIGNATURE):
        return _decode_png(data, color_type=2)
    if data[:2] in (b"P3", b"P5", b"P2", b"P1", b"P4"):
        raise UnsupportedFormatError(f"netpbm variant {data[:2].decode()} is not binary RGB (P6)")
    raise UnsupportedFormatError(f"{path}: neither PNG nor binary PPM")


def read_image(path) -> np.ndarray:
    """Read an image as float64 RGB in [0, 1]."""
    return read_image_u8(path).astype(np.float64) / 255.0


def to_u8(rgb) -> np.ndarray:
    arr = np.asarray(rgb, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_image(rgb, path) -> None:
    """Write float RGB in [0, 1] (or uint8) as PNG, or PPM for ``.ppm`` paths."""
    arr = np.asarray(rgb)
    arr = arr if arr.dtype == np.uint8 else to_u8(arr)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"RGB image must have shape (H, W, 3), got {arr.shape}")
    p = Path(path)
    if _is_netpbm_path(p):
        p.write_bytes(_netpbm_bytes(arr))
    else:
        _encode_png(arr, p)


# -- label maps ------------------------------------------------------------

def write_labels(labels, path) -> None:
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise ValueError("label map must be 2-D")
    if lab.size and (lab.min() < 0 or lab.max() > 3):
        raise LabelValueError("labels must lie in {0, 1, 2, 3}")
    lab = lab.astype(np.uint8)
    p = Path(path)
    if _is_netpbm_path(p):
        p.write_bytes(_netpbm_bytes(lab))
    else:
        _encode_png(lab, p)


def read_labels(path) -> np.ndarray:
    data = _read_bytes(path)
    if data.startswith(b"P5"):
        lab = _parse_netpbm(data, b"P5", 1)
    elif data.startswith(PNG_SIGNATURE):
        lab = _decode_png(data, color_type=0)
    else:
        raise UnsupportedFormatError(f"{path}: label map must be 8-bit grayscale PNG or PGM")
    if lab.size and lab.max() > 3:
        raise LabelValueError(f"label value {int(lab.max())} outside {{0, 1, 2, 3}}")
    return lab


def palette_image(labels) -> np.ndarray:
    lab = np.asarray(labels)
    lut = np.zeros((256, 3), dtype=np.uint8)
    for region, color in PALETTE.items():
        lut[int(region)] = color
    return lut[lab]


def write_disentanglement(dmap: DisentanglementMap, path_labels, path_palette) -> None:
    """Write the label map and its color rendering."""
    write_labels(dmap.labels, path_labels)
    write_image(palette_image(dmap.labels), path_palette)


# -- tensors ---------------------------------------------------------------

def encode_tensor(tensor) -> bytes:
    arr = np.asarray(tensor, dtype=np.float32)
    if not 1 <= arr.ndim <= MAX_RANK:
        raise TensorDimensionError(f"rank must be in [1, {MAX_RANK}], got {arr.ndim}")
    head = TENSOR_MAGIC + struct.pack(f"<II{arr.ndim}I", TENSOR_VERSION, arr.ndim, *arr.shape)
    return head + np.ascontiguousarray(arr).astype("<f4").tobytes()


def decode_tensor(data: bytes) -> np.ndarray:
    if len(data) < 16:
        if len(data) >= 8 and data[:8] != TENSOR_MAGIC:
            raise MagicMismatchError(f"bad magic {data[:8]!r}")
        raise TruncatedDataError("tensor header truncated")
    if data[:8] != TENSOR_MAGIC:
        raise MagicMismatchError(f"bad magic {data[:8]!r}")
    version, rank = struct.unpack("<II", data[8:16])
    if version != TENSOR_VERSION:
        raise VersionMismatchError(f"unsupported tensor version {version}")
    if not 1 <= rank <= MAX_RANK:
        raise TensorDimensionError(f"rank must be in [1, {MAX_RANK}], got {rank}")
    head_len = 16 + 4 * rank
    if len(data) < head_len:
        raise TruncatedDataError("tensor dims truncated")
    dims = struct.unpack(f"<{rank}I", data[16:head_len])
    count = math.prod(dims)
    if count > MAX_ELEMENTS:
        raise TensorDimensionError(f"element count {count} exceeds {MAX_ELEMENTS}")
    payload = data[head_len:]
    if len(payload) < 4 * count:
        raise TruncatedDataError(f"expected {4 * count} payload bytes, found {len(payload)}")
    if len(payload) > 4 * count:
        raise TruncatedDataError(f"{len(payload) - 4 * count} trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)


def write_tensor(tensor, path) -> None:
    Path(path).write_bytes(encode_tensor(tensor))


def read_tensor(path) -> np.ndarray:
    return decode_tensor(_read_bytes(path))


# -- reports ---------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    text = str(value)
    if "\n" in text:
        raise ValueError("report values must be single-line")
    return text


def format_report(items: Iterable[tuple[str, object]]) -> str:
    lines = []
    for key, value in items:
        if "=" in key or "\n" in key:
            raise ValueError(f"bad report key {key!r}")
        lines.append(f"{key}={_fmt(value)}")
    return "\n".join(lines) + "\n"


def write_report(items, path) -> None:
    if isinstance(items, dict):
        items = items.items()
    Path(path).write_text(format_report(items))


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key] = value
    return out


def read_report(path) -> dict[str, str]:
    return parse_report(Path(path).read_text())
