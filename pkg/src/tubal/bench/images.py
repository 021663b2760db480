"""Plain PPM (P3/P6) images as ``height x width x 3`` tensors in ``[0, 1]``."""
from __future__ import annotations

import re

import numpy as np

from ..errors import ImageFormatError
from ..seeding import derive_rng
from ..t_algebra import tprod

_TOKEN = re.compile(rb"#[^\n]*\n?|(\S+)")


def _header_tokens(blob: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        match = _TOKEN.search(blob, pos)
        if match is None:
            raise ImageFormatError("truncated PPM header")
        pos = match.end()
        if match.group(1) is not None:
            tokens.append(match.group(1))
    return tokens, pos


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    tokens, pos = _header_tokens(blob, 4)
    magic = tokens[0]
    if magic not in (b"P3", b"P6"):
        raise ImageFormatError(f"{path}: unsupported magic {magic!r} (need P3 or P6)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ImageFormatError(f"{path}: malformed header") from exc
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ImageFormatError(f"{path}: bad dimensions or maxval")
    count = width * height * 3
    if magic == b"P3":
        try:
            values = np.array(blob[pos:].split(), dtype=np.int64)
        except ValueError as exc:
            raise ImageFormatError(f"{path}: non-numeric pixel data") from exc
        if values.size != count:
            raise ImageFormatError(f"{path}: expected {count} samples, found {values.size}")
    else:
        data = blob[pos + 1:] if blob[pos:pos + 1].isspace() else blob[pos:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(data) < count * dtype.itemsize:
            raise ImageFormatError(f"{path}: truncated pixel data")
        values = np.frombuffer(data[: count * dtype.itemsize], dtype=dtype).astype(np.int64)
    if values.max(initial=0) > maxval:
        raise ImageFormatError(f"{path}: sample exceeds maxval")
    return values.reshape(height, width, 3) / maxval


def write_ppm(path, image: np.ndarray, maxval: int = 255) -> None:
    """Write a binary P6 image, clipping values to ``[0, 1]``."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ImageFormatError(f"need a height x width x 3 array, got {image.shape}")
    height, width, _ = image.shape
    q = np.rint(np.clip(image, 0.0, 1.0) * maxval).astype(np.int64)
    dtype = ">u2" if maxval > 255 else "u1"
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n{maxval}\n".encode("ascii"))
        fh.write(q.astype(dtype).tobytes())


def synthetic_logo(height: int = 30, width: int = 53, rank: int = 5, seed: int = 2024, tint: float = 0.2) -> np.ndarray:
    """Blocky colour image of tubal rank ``rank`` with values in ``[0, 1]``.

    Dark bars on a light background, built as ``A * B`` where the first
    lateral slice of ``A`` and first horizontal slice of ``B`` are constant.
    Each bar is grey times a per-channel tint ``1 + tint * u``, ``u`` uniform
    in ``[-1, 1]``, so channels stay correlated as in natural images.  The
    constant tensor lies in the span of the first component, so the affine
    rescale to ``[0, 1]`` keeps the tubal rank.
    """
    rng = derive_rng(seed)
    A = np.zeros((height, rank, 3))
    B = np.zeros((rank, width, 3))
    A[:, 0, 0] = 1.0
    B[0, :, 0] = 1.0
    for j in range(1, rank):
        top = rng.integers(0, height - 8)
        A[top:top + rng.integers(5, 12), j, :] = rng.uniform(0.3, 1.0) * (1 + tint * rng.uniform(-1, 1, 3))
        left = rng.integers(0, width - 10)
        B[j, left:left + rng.integers(6, 20), :] = -rng.uniform(0.3, 1.0) * (1 + tint * rng.uniform(-1, 1, 3))
    X = tprod(A, B)
    return (X - X.min()) / (X.max() - X.min())
