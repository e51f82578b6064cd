"""Readers and writers for the on-disk formats: IDX, PGM and the CSV snapshot."""
from __future__ import annotations

import csv
import gzip
import os
import re
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise FormatError(path, f"corrupt gzip stream ({exc})") from None
    return raw


def _idx_header(path, raw: bytes, magic: int, ndim: int) -> tuple[int, ...]:
    need = 4 + 4 * ndim
    if len(raw) < need:
        raise FormatError(path, f"truncated header, need {need} bytes, have {len(raw)}",
                          offset=len(raw))
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise FormatError(path, f"bad magic 0x{got:08x}, expected 0x{magic:08x}", offset=0)
    return struct.unpack(f">{ndim}I", raw[4:need])


def read_idx_images(path) -> np.ndarray:
    """Unsigned-byte image stack of shape (n, rows, cols)."""
    raw = _read_bytes(path)
    n, rows, cols = _idx_header(path, raw, IDX_IMAGES_MAGIC, 3)
    want = 16 + n * rows * cols
    if len(raw) < want:
        raise FormatError(path, f"truncated payload: {n}x{rows}x{cols} images need "
                          f"{want} bytes, file has {len(raw)}", offset=len(raw))
    if len(raw) > want:
        raise FormatError(path, f"{len(raw) - want} trailing bytes after payload", offset=want)
    return np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(n, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    raw = _read_bytes(path)
    (n,) = _idx_header(path, raw, IDX_LABELS_MAGIC, 1)
    want = 8 + n
    if len(raw) < want:
        raise FormatError(path, f"truncated payload: {n} labels need {want} bytes, "
                          f"file has {len(raw)}", offset=len(raw))
    if len(raw) > want:
        raise FormatError(path, f"{len(raw) - want} trailing bytes after payload", offset=want)
    return np.frombuffer(raw, dtype=np.uint8, offset=8).copy()


def write_idx_images(path, images, compress=False) -> None:
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    blob = struct.pack(">4I", IDX_IMAGES_MAGIC, n, rows, cols) + images.tobytes()
    _write_blob(path, blob, compress)


def write_idx_labels(path, labels, compress=False) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    blob = struct.pack(">2I", IDX_LABELS_MAGIC, labels.size) + labels.tobytes()
    _write_blob(path, blob, compress)


def _write_blob(path, blob: bytes, compress: bool) -> None:
    if compress:
        # mtime=0 keeps the archive bytes reproducible
        blob = gzip.compress(blob, mtime=0)
    with open(path, "wb") as fh:
        fh.write(blob)


# -- PGM ---------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a P2 or P5 greymap. Returns (integer pixels (h, w), maxval)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] not in (b"P2", b"P5"):
        raise FormatError(path, "unsupported image format (expected PGM P2/P5)", offset=0)
    kind = raw[:2]
    pos = 2
    header = []
    for _ in range(3):
        m = _TOKEN.match(raw, pos)
        if m is None:
            raise FormatError(path, "truncated PGM header", offset=pos)
        try:
            header.append(int(m.group(1)))
        except ValueError:
            raise FormatError(path, f"bad header token {m.group(1)!r}", offset=m.start(1)) from None
        pos = m.end()
    width, height, maxval = header
    if width <= 0 or height <= 0:
        raise FormatError(path, f"bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise FormatError(path, f"maxval {maxval} outside 1..255")
    count = width * height
    if kind == b"P5":
        pos += 1  # single whitespace byte after maxval
        if len(raw) < pos + count:
            raise FormatError(path, f"truncated raster: need {count} bytes", offset=len(raw))
        pixels = np.frombuffer(raw, dtype=np.uint8, count=count, offset=pos).astype(np.int64)
    else:
        tokens = raw[pos:].split()
        if len(tokens) < count:
            raise FormatError(path, f"truncated raster: need {count} values, "
                              f"have {len(tokens)}", offset=len(raw))
        try:
            pixels = np.array([int(t) for t in tokens[:count]], dtype=np.int64)
        except ValueError:
            raise FormatError(path, "non-integer pixel value in P2 raster") from None
    if pixels.max(initial=0) > maxval:
        raise FormatError(path, "pixel value exceeds maxval")
    return pixels.reshape(height, width), maxval


def write_pgm(path, image) -> None:
    """Write a [0, 1] image as binary P5, clamping then scaling to 0..255."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    data = np.rint(img * 255.0).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


# -- CSV snapshot ---------------------------------------------------------------

def write_snapshot(path, images, labels, classes) -> None:
    """Header ``label,h,w,p_0,...``; one row per sample, label as class name."""
    images = np.asarray(images, dtype=np.float64)
    n, h, w = images.shape
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["label", "h", "w"] + [f"p_{i}" for i in range(h * w)])
        for img, lab in zip(images, labels):
            out.writerow([classes[lab], h, w] + [repr(float(x)) for x in img.ravel()])


def read_snapshot(path) -> tuple[np.ndarray, list[str]]:
    """Return (images (n, h, w), per-row class names)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:3] != ["label", "h", "w"]:
        raise FormatError(path, "missing 'label,h,w,...' header")
    body = rows[1:]
    if not body:
        raise FormatError(path, "snapshot has no samples")
    h, w = int(body[0][1]), int(body[0][2])
    if len(rows[0]) != 3 + h * w:
        raise FormatError(path, f"header has {len(rows[0]) - 3} pixel columns, expected {h * w}")
    images = np.empty((len(body), h, w))
    names = []
    for i, row in enumerate(body):
        if len(row) != 3 + h * w or (int(row[1]), int(row[2])) != (h, w):
            raise FormatError(path, f"row {i + 1} has inconsistent shape")
        names.append(row[0])
        images[i] = np.array([float(x) for x in row[3:]]).reshape(h, w)
    return images, names


def list_sorted(directory) -> list[Path]:
    return sorted(Path(directory).iterdir(), key=lambda p: os.fsencode(p.name))
