"""t-product algebra: t-product, t-SVD, tubal rank, tensor nuclear norm, t-SVT.

Everything is computed slice-wise in the mode-3 Fourier domain.  For a real
tensor only slices ``0 .. n3 // 2`` are independent; the rest are complex
conjugates, so factorizations are computed on that half and mirrored.  Slice
0 (and slice ``n3 / 2`` for even ``n3``) is real and is factorized in real
arithmetic, which keeps every refolded factor exactly real.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, InvalidConfig, NumericalFailure
from .tensor_core import (
    Tensor3,
    as_tensor3,
    bcirc,
    dft_mode3,
    fold,
    idft_mode3,
    transpose_t,
    unfold,
)

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class TSvdFactors:
    """Factors of ``X = U * S * V^T`` keeping ``r`` singular tubes."""

    U: Tensor3
    S: Tensor3
    V: Tensor3
    r: int

    def reconstruct(self) -> Tensor3:
        return tprod(tprod(self.U, self.S), transpose_t(self.V))


@dataclass(frozen=True)
class SingularTubes:
    """Fourier-domain singular values, ``tubes[i, k]`` = sigma_i of slice k.

    Rows are sorted nonincreasing within every slice, so row ``i`` is the
    ``i``-th singular tube.
    """

    tubes: np.ndarray

    def rank(self, tol: float | None = None) -> int:
        return _count_tubes(self.tubes, tol)

    @property
    def first_slice_diagonal(self) -> np.ndarray:
        """Diagonal of the first frontal slice of ``S`` (mean over slices)."""
        return self.tubes.mean(axis=1)


def _real_slices(n3: int) -> tuple[int, ...]:
    return (0, n3 // 2) if n3 % 2 == 0 and n3 > 1 else (0,)


def _half(n3: int) -> int:
    return n3 // 2 + 1


def _mirror(half: np.ndarray, n3: int) -> np.ndarray:
    """Fill a full Fourier stack (slices on axis 0) from its first half."""
    full = np.empty((n3,) + half.shape[1:], dtype=np.complex128)
    h = half.shape[0]
    full[:h] = half
    for k in range(h, n3):
        full[k] = np.conj(half[n3 - k])
    return full


def _svd_half(Xf: np.ndarray):
    """SVD of the independent Fourier slices.

    Returns ``(U, s, Vh)`` stacked over the slice axis 0 with
    ``h = n3 // 2 + 1`` entries, economy sized.
    """
    n3 = Xf.shape[2]
    h = _half(n3)
    stack = np.ascontiguousarray(Xf[:, :, :h].transpose(2, 0, 1))
    try:
        U, s, Vh = np.linalg.svd(stack, full_matrices=False)
        for k in _real_slices(n3):
            u, sk, vh = np.linalg.svd(stack[k].real, full_matrices=False)
            U[k], s[k], Vh[k] = u, sk, vh
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"slice SVD did not converge: {exc}") from exc
    return U, s, Vh


def _fourier_singular_values(X: Tensor3) -> np.ndarray:
    """Singular values of every Fourier slice, shape ``(min(n1, n2), n3)``."""
    Xf = dft_mode3(X)
    n3 = Xf.shape[2]
    stack = np.ascontiguousarray(Xf[:, :, : _half(n3)].transpose(2, 0, 1))
    try:
        s = np.linalg.svd(stack, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"slice SVD did not converge: {exc}") from exc
    full = np.empty((n3, s.shape[1]))
    full[: s.shape[0]] = s
    for k in range(s.shape[0], n3):
        full[k] = s[n3 - k]
    return full.T


def _count_tubes(sv: np.ndarray, tol: float | None) -> int:
    if sv.size == 0:
        return 0
    top = float(sv.max())
    if tol is None:
        tol = RANK_RTOL * top
    if tol < 0:
        raise InvalidConfig("rank tolerance must be nonnegative")
    return int(np.count_nonzero(sv.max(axis=1) > tol))


def tprod(A: Tensor3, B: Tensor3, method: str = "fourier") -> Tensor3:
    """t-product ``A * B`` of ``n1 x n2 x n3`` and ``n2 x n4 x n3`` tensors.

    ``method="bcirc"`` evaluates ``fold(bcirc(A) @ unfold(B))`` literally and
    is kept as a reference for the default Fourier path.
    """
    A = as_tensor3(A, "A")
    B = as_tensor3(B, "B")
    if A.shape[1] != B.shape[0] or A.shape[2] != B.shape[2]:
        raise DimMismatch(f"cannot t-multiply {A.shape} by {B.shape}")
    if method == "bcirc":
        return fold(bcirc(A) @ unfold(B), (A.shape[0], B.shape[1], A.shape[2]))
    if method != "fourier":
        raise InvalidConfig(f"unknown t-product method {method!r}")
    Cf = np.einsum("ijk,jlk->ilk", dft_mode3(A), dft_mode3(B))
    return idft_mode3(Cf)


def tsvd(X: Tensor3, mode: str = "skinny", tol: float | None = None) -> TSvdFactors:
    """t-SVD computed from the matrix SVD of every Fourier slice.

    ``mode="skinny"`` keeps ``tubal_rank(X, tol)`` tubes, ``mode="full"``
    keeps ``min(n1, n2)``.
    """
    X = as_tensor3(X)
    n1, n2, n3 = X.shape
    U, s, Vh = _svd_half(dft_mode3(X))
    sv = _mirror(s.astype(np.complex128), n3).real.T
    if mode == "skinny":
        r = _count_tubes(sv, tol)
    elif mode == "full":
        r = min(n1, n2)
    else:
        raise InvalidConfig(f"unknown t-SVD mode {mode!r}")

    Uf = _mirror(U[:, :, :r], n3)
    Vf = _mirror(np.conj(np.swapaxes(Vh[:, :r, :], 1, 2)), n3)
    U_t = idft_mode3(Uf.transpose(1, 2, 0))
    V_t = idft_mode3(Vf.transpose(1, 2, 0))
    S_t = np.zeros((r, r, n3))
    if r:
        tubes = np.fft.ifft(sv[:r], axis=1).real
        idx = np.arange(r)
        S_t[idx, idx, :] = tubes
    return TSvdFactors(U=U_t, S=S_t, V=V_t, r=r)


def singular_tubes(X: Tensor3) -> SingularTubes:
    return SingularTubes(tubes=_fourier_singular_values(as_tensor3(X)))


def tubal_rank(X: Tensor3, tol: float | None = None) -> int:
    """Number of singular tubes whose largest Fourier singular value exceeds ``tol``.

    The default tolerance is ``1e-10`` times the largest Fourier singular value.
    """
    return _count_tubes(_fourier_singular_values(as_tensor3(X)), tol)


def tnn(X: Tensor3, method: str = "fourier") -> float:
    """Tensor nuclear norm.

    ``"fourier"`` sums the nuclear norms of the Fourier slices and divides by
    ``n3``; ``"definition"`` sums the first frontal slice diagonal of the
    skinny t-SVD core.
    """
    X = as_tensor3(X)
    if method == "fourier":
        return float(_fourier_singular_values(X).sum() / X.shape[2])
    if method == "definition":
        S = tsvd(X, mode="skinny").S
        return float(np.trace(S[:, :, 0]))
    raise InvalidConfig(f"unknown TNN method {method!r}")


def tsvt(Y: Tensor3, tau: float) -> Tensor3:
    """Proximal operator of ``tau * ||.||_TNN``.

    Because ``||X||_F^2`` and the TNN both carry a ``1/n3`` factor in the
    Fourier domain, the problem splits into independent matrix SVT problems
    with the same threshold ``tau`` on every Fourier slice.
    """
    return tsvt_with_norm(Y, tau)[0]


def tsvt_with_norm(Y: Tensor3, tau: float) -> tuple[Tensor3, float]:
    """:func:`tsvt` plus the tensor nuclear norm of its output, at no extra cost."""
    if not tau > 0:
        raise InvalidConfig(f"tau must be positive, got {tau}")
    Y = as_tensor3(Y, "Y")
    n3 = Y.shape[2]
    U, s, Vh = _svd_half(dft_mode3(Y))
    shrunk = np.maximum(s - tau, 0.0)
    half = np.einsum("kir,kr,krj->kij", U, shrunk, Vh)
    # slices 1 .. ceil(n3/2)-1 appear twice in the full spectrum
    weights = np.full(shrunk.shape[0], 2.0)
    weights[list(_real_slices(n3))] = 1.0
    norm = float(weights @ shrunk.sum(axis=1)) / n3
    return idft_mode3(_mirror(half, n3).transpose(1, 2, 0)), norm


def truncate_tubal_rank(X: Tensor3, r: int) -> Tensor3:
    """Best tubal-rank-``r`` approximation (keep ``r`` singular values per slice)."""
    X = as_tensor3(X)
    if r < 0:
        raise InvalidConfig("rank must be nonnegative")
    n3 = X.shape[2]
    U, s, Vh = _svd_half(dft_mode3(X))
    half = np.einsum("kir,kr,krj->kij", U[:, :, :r], s[:, :r], Vh[:, :r, :])
    return idft_mode3(_mirror(half, n3).transpose(1, 2, 0))
