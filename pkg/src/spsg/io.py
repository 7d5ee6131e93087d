"""File formats: SPSG matrix container, images, label maps."""

import struct
from pathlib import Path

import numpy as np
from PIL import Image

MAGIC = b"SPSG"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class FormatError(ValueError):
    """Raised when a file does not match the expected format."""


def write_matrix(path, M):
    """Write a 2-D float matrix in the SPSG container.

    Layout: magic ``SPSG``, u32 version, u32 rows, u32 cols, then row-major
    little-endian float64 values.
    """
    M = np.asarray(M, dtype="<f8")
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    rows, cols = M.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, rows, cols))
        fh.write(np.ascontiguousarray(M).tobytes())


def read_matrix(path):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated SPSG header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported SPSG version {version}")
    body = data[_HEADER.size:]
    if len(body) != rows * cols * 8:
        raise FormatError(f"{path}: expected {rows * cols * 8} payload bytes, got {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(np.float64)


def read_image(path):
    """Read a PNG/PPM (or anything Pillow reads) as float RGB in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    if arr.size == 0:
        raise ValueError(f"{path}: empty image")
    return arr


def write_image(path, rgb):
    rgb = np.clip(np.asarray(rgb, dtype=np.float64), 0.0, 1.0)
    Image.fromarray(np.round(rgb * 255).astype(np.uint8), mode="RGB").save(path)


def read_label_file(path):
    """Read raw integer ids from a 16-bit PNG or a headerless CSV."""
    path = Path(path)
    if path.stat().st_size == 0:
        raise ValueError(f"{path}: empty label file")
    if path.suffix.lower() == ".csv":
        ids = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    else:
        with Image.open(path) as im:
            ids = np.asarray(im).astype(np.int64)
        if ids.ndim == 3:
            raise FormatError(f"{path}: label PNG must be single-channel")
    if ids.size == 0:
        raise ValueError(f"{path}: empty label file")
    return ids


def write_label_png(path, labels):
    """Write a label map as a 16-bit grayscale PNG (id = gray value)."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > 65535:
        raise ValueError("label ids must fit in 16 bits")
    Image.fromarray(labels.astype(np.uint16)).save(path)


def read_boundary_png(path):
    """Read an 8-bit boundary-strength map, scaled to [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return arr / 255.0
