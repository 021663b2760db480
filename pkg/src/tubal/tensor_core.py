"""Dense third-order tensors and the structural operators of the t-algebra.

A tensor is a plain ``float64`` :class:`numpy.ndarray` of shape
``(n1, n2, n3)``; frontal slice ``k`` is ``X[:, :, k]``.  The canonical linear
layout (used by :func:`vec`, by measurement matrices and by the T3F file
format) is slice-major with column-major order inside each slice, which is
exactly numpy's Fortran order for this shape.

The mode-3 DFT uses ``omega = exp(-2*pi*i/n3)`` with no forward scaling and
``1/n3`` on the inverse, so ``||X||_F == ||fft(X)||_F / sqrt(n3)``.
"""
from __future__ import annotations

import struct
from os import PathLike
from typing import Union

import numpy as np

from .errors import DimMismatch, InvalidConfig, SymmetryViolation

Tensor3 = np.ndarray
FourierTensor3 = np.ndarray

T3F_MAGIC = b"T3F1"
SYMMETRY_TOL = 1e-9


def as_tensor3(X, name: str = "X") -> Tensor3:
    """Validate ``X`` as a real third-order tensor and return it as float64.

    2-D input is promoted to a single-slice tensor.
    """
    arr = np.asarray(X)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DimMismatch(f"{name} must be third-order, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise DimMismatch(f"{name} has an empty dimension: {arr.shape}")
    if np.iscomplexobj(arr):
        raise DimMismatch(f"{name} must be real")
    return arr.astype(np.float64, copy=False)


def check_dims(dims) -> tuple[int, int, int]:
    try:
        n1, n2, n3 = (int(d) for d in dims)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"dims must be three integers, got {dims!r}") from exc
    if min(n1, n2, n3) < 1:
        raise InvalidConfig(f"dims must be positive, got {dims!r}")
    return n1, n2, n3


def vec(X: Tensor3) -> np.ndarray:
    """Stack the entries of ``X`` column by column, slice by slice."""
    return np.asarray(X).ravel(order="F")


def unvec(x: np.ndarray, dims) -> Tensor3:
    n1, n2, n3 = check_dims(dims)
    x = np.asarray(x, dtype=np.float64)
    if x.size != n1 * n2 * n3:
        raise DimMismatch(f"vector of length {x.size} does not fit dims {dims}")
    return x.reshape((n1, n2, n3), order="F")


def dft_mode3(X: Tensor3) -> FourierTensor3:
    return np.fft.fft(as_tensor3(X), axis=2)


def idft_mode3(Xf: FourierTensor3, tol: float = SYMMETRY_TOL) -> Tensor3:
    """Inverse mode-3 DFT, returning a real tensor.

    Raises :class:`SymmetryViolation` when the imaginary residue of the
    inverse exceeds ``tol`` relative to its norm, i.e. when ``Xf`` is not
    conjugate symmetric along the third mode.
    """
    Xf = np.asarray(Xf)
    if Xf.ndim != 3:
        raise DimMismatch(f"Fourier tensor must be third-order, got {Xf.shape}")
    out = np.fft.ifft(Xf, axis=2)
    if np.iscomplexobj(out):
        scale = np.linalg.norm(out)
        resid = np.linalg.norm(out.imag)
        if resid > tol * scale:
            raise SymmetryViolation(
                f"imaginary residue {resid:.3e} exceeds {tol:g} x {scale:.3e}"
            )
        out = out.real
    return np.ascontiguousarray(out, dtype=np.float64)


def symmetry_residual(Xf: FourierTensor3) -> float:
    """Relative conjugate-symmetry defect ``max_k ||Xf_k - conj(Xf_{-k})||``."""
    Xf = np.asarray(Xf)
    n3 = Xf.shape[2]
    mirror = np.conj(Xf[:, :, (-np.arange(n3)) % n3])
    scale = np.linalg.norm(Xf)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(Xf - mirror) / scale)


def unfold(X: Tensor3) -> np.ndarray:
    """Vertical stack of the frontal slices, shape ``(n1*n3, n2)``."""
    X = as_tensor3(X)
    n1, n2, n3 = X.shape
    return X.transpose(2, 0, 1).reshape(n1 * n3, n2)


def fold(M: np.ndarray, dims) -> Tensor3:
    n1, n2, n3 = check_dims(dims)
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (n1 * n3, n2):
        raise DimMismatch(f"cannot fold {M.shape} into {dims}")
    return M.reshape(n3, n1, n2).transpose(1, 2, 0).copy()


def bcirc(X: Tensor3) -> np.ndarray:
    """Block-circulant matrix whose first block column is ``X^(1), ..., X^(n3)``."""
    X = as_tensor3(X)
    n1, n2, n3 = X.shape
    out = np.empty((n1 * n3, n2 * n3))
    for i in range(n3):
        for j in range(n3):
            out[i * n1:(i + 1) * n1, j * n2:(j + 1) * n2] = X[:, :, (i - j) % n3]
    return out


def transpose_t(X: Tensor3) -> Tensor3:
    """Tensor transpose: transpose every slice, reverse slices 2..n3."""
    X = as_tensor3(X)
    n3 = X.shape[2]
    order = (-np.arange(n3)) % n3
    return X.transpose(1, 0, 2)[:, :, order].copy()


def identity_tensor(n: int, n3: int) -> Tensor3:
    if n < 1 or n3 < 1:
        raise InvalidConfig(f"identity_tensor needs n, n3 >= 1, got {n}, {n3}")
    out = np.zeros((n, n, n3))
    out[:, :, 0] = np.eye(n)
    return out


def frobenius_norm(X) -> float:
    return float(np.linalg.norm(np.asarray(X).ravel()))


PathType = Union[str, "PathLike[str]"]


def write_t3f(path: PathType, X: Tensor3) -> None:
    """Write ``X`` as magic ``T3F1``, three u64 LE dims, then f64 LE data."""
    X = as_tensor3(X)
    header = T3F_MAGIC + struct.pack("<3Q", *X.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(vec(X).astype("<f8").tobytes())


def read_t3f(path: PathType) -> Tensor3:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != T3F_MAGIC or len(blob) < 28:
        raise InvalidConfig(f"{path}: not a T3F file")
    dims = struct.unpack("<3Q", blob[4:28])
    count = dims[0] * dims[1] * dims[2]
    payload = blob[28:]
    if len(payload) != 8 * count:
        raise InvalidConfig(
            f"{path}: expected {count} values, found {len(payload) // 8}"
        )
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return unvec(data, dims).copy()
