"""Seeded sub-Gaussian measurement ensembles ``y = M vec(X)``.

All three distributions have zero mean and variance ``1/m`` per entry, so
``E ||M vec(X)||^2 = ||X||_F^2``:

* ``gaussian``  -- ``N(0, 1/m)``
* ``bernoulli`` -- ``+-1/sqrt(m)`` with probability 1/2 each
* ``uniform``   -- uniform on ``[-sqrt(3/m), sqrt(3/m)]``

Matrices are regenerated from ``(dims, m, distribution, seed)`` and never
persisted.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import svds

from .errors import DimMismatch, InvalidConfig, NormNotUnit
from .seeding import derive_rng
from .tensor_core import Tensor3, as_tensor3, check_dims, frobenius_norm, unvec, vec

DISTRIBUTIONS = ("gaussian", "bernoulli", "uniform")


def draw_entries(rng: np.random.Generator, shape, distribution: str, m: int) -> np.ndarray:
    if distribution == "gaussian":
        return rng.standard_normal(shape) / np.sqrt(m)
    if distribution == "bernoulli":
        signs = rng.integers(0, 2, size=shape, dtype=np.int8) * 2 - 1
        return signs / np.sqrt(m)
    if distribution == "uniform":
        bound = np.sqrt(3.0 / m)
        return rng.uniform(-bound, bound, size=shape)
    raise InvalidConfig(
        f"unknown distribution {distribution!r}; expected one of {DISTRIBUTIONS}"
    )


@dataclass(frozen=True)
class MeasurementEnsemble:
    dims: tuple[int, int, int]
    m: int
    distribution: str
    seed: int
    matrix: np.ndarray = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        n1, n2, n3 = self.dims
        return n1 * n2 * n3

    def spec(self) -> dict:
        """Config record from which the ensemble can be regenerated."""
        return {
            "dims": list(self.dims),
            "m": self.m,
            "distribution": self.distribution,
            "seed": self.seed,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "MeasurementEnsemble":
        return make_ensemble(spec["dims"], spec["m"], spec["distribution"], spec["seed"])

    @classmethod
    def from_matrix(cls, dims, M: np.ndarray) -> "MeasurementEnsemble":
        """Wrap an explicit ``m x n1*n2*n3`` matrix (distribution ``custom``)."""
        dims = check_dims(dims)
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2 or M.shape[1] != dims[0] * dims[1] * dims[2]:
            raise DimMismatch(f"matrix {M.shape} does not act on tensors of dims {dims}")
        return cls(dims=dims, m=M.shape[0], distribution="custom", seed=0, matrix=M)


def make_ensemble(dims, m: int, distribution: str = "gaussian", seed: int = 0) -> MeasurementEnsemble:
    dims = check_dims(dims)
    if int(m) < 1:
        raise InvalidConfig(f"m must be >= 1, got {m}")
    m = int(m)
    n = dims[0] * dims[1] * dims[2]
    M = draw_entries(derive_rng(seed), (m, n), distribution, m)
    return MeasurementEnsemble(dims=dims, m=m, distribution=distribution, seed=int(seed), matrix=M)


def make_orthogonal_ensemble(dims, seed: int = 0) -> MeasurementEnsemble:
    """Square orthogonal ``M`` (an exact isometry), mainly for checks."""
    dims = check_dims(dims)
    n = dims[0] * dims[1] * dims[2]
    Q, R = np.linalg.qr(derive_rng(seed).standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    return MeasurementEnsemble.from_matrix(dims, Q)


def _check_tensor(E: MeasurementEnsemble, X) -> Tensor3:
    X = as_tensor3(X)
    if X.shape != tuple(E.dims):
        raise DimMismatch(f"tensor dims {X.shape} do not match ensemble dims {E.dims}")
    return X


def apply(E: MeasurementEnsemble, X: Tensor3) -> np.ndarray:
    return E.matrix @ vec(_check_tensor(E, X))


def adjoint(E: MeasurementEnsemble, y) -> Tensor3:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (E.m,):
        raise DimMismatch(f"expected a vector of length {E.m}, got shape {y.shape}")
    return np.ascontiguousarray(unvec(E.matrix.T @ y, E.dims))


def operator_norm_sq(
    E: MeasurementEnsemble,
    iters: int = 100,
    seed: int = 0,
    rtol: float = 0.0,
    block: int = 4,
    method: str = "power",
) -> float:
    """Estimate of ``sigma_max(M)^2``.

    ``method="lanczos"`` calls ARPACK through :func:`scipy.sparse.linalg.svds`
    (``iters`` and ``block`` are ignored); it is much faster on wide random
    matrices whose top singular values are clustered.  The default is block
    power iteration:

    Iterates a ``block``-column subspace on the smaller of ``M M^T`` and
    ``M^T M`` with a Rayleigh-Ritz step, so convergence is governed by the
    ratio of the ``block + 1``-th to the largest eigenvalue rather than the
    gap to the second one.  The Ritz value never exceeds the true value.
    Stops early once successive estimates agree to ``rtol``.
    """
    if iters < 1:
        raise InvalidConfig("iters must be >= 1")
    M = E.matrix
    if method == "lanczos":
        # rescale so ARPACK never sees a zero or overflowing operator
        scale = float(np.max(np.abs(M), initial=0.0))
        if scale == 0.0:
            return 0.0
        if min(M.shape) < 3:
            return float((scale * np.linalg.norm(M / scale, 2)) ** 2)
        v0 = derive_rng(seed).standard_normal(min(M.shape))
        top = svds(M / scale, k=1, tol=rtol, v0=v0, return_singular_vectors=False)
        return float((scale * top[0]) ** 2)
    if method != "power":
        raise InvalidConfig(f"unknown method {method!r}")
    if M.shape[0] <= M.shape[1]:
        size = M.shape[0]

        def gram(Q):
            return M @ (M.T @ Q)
    else:
        size = M.shape[1]

        def gram(Q):
            return M.T @ (M @ Q)

    k = max(1, min(block, size))
    Q, _ = np.linalg.qr(derive_rng(seed).standard_normal((size, k)))
    est = 0.0
    for _ in range(iters):
        Q, _ = np.linalg.qr(gram(Q))
        new = float(np.linalg.eigvalsh(Q.T @ gram(Q))[-1])
        if rtol and abs(new - est) <= rtol * max(new, 1e-300):
            return new
        est = new
    return est


def noisy_measure(E: MeasurementEnsemble, X: Tensor3, noise_sigma: float = 0.01, seed: int = 0) -> np.ndarray:
    """``apply(E, X)`` plus i.i.d. ``N(0, noise_sigma^2)`` noise."""
    if noise_sigma < 0:
        raise InvalidConfig("noise_sigma must be nonnegative")
    y = apply(E, X)
    if noise_sigma == 0:
        return y
    return y + noise_sigma * derive_rng(seed).standard_normal(E.m)


def expected_energy_check(
    X: Tensor3,
    distribution: str = "gaussian",
    trials: int = 10_000,
    seed: int = 0,
    m: int = 10,
    batch: int = 1000,
) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of ``||M vec(X)||^2`` over fresh ensembles.

    ``X`` must have unit Frobenius norm, so the mean should be ``1``.
    """
    X = as_tensor3(X)
    if abs(frobenius_norm(X) - 1.0) > 1e-8:
        raise NormNotUnit(f"||X||_F = {frobenius_norm(X)!r}, expected 1")
    if trials < 2:
        raise InvalidConfig("trials must be >= 2")
    x = vec(X)
    rng = derive_rng(seed)
    energies = np.empty(trials)
    for start in range(0, trials, batch):
        b = min(batch, trials - start)
        M = draw_entries(rng, (b, m, x.size), distribution, m)
        energies[start:start + b] = np.sum((M @ x) ** 2, axis=1)
    return float(energies.mean()), float(energies.std(ddof=1) / np.sqrt(trials))


@dataclass(frozen=True)
class DiagonalizedMeasurement:
    """Implicit ``D_X = (1/sqrt(m)) blockdiag(x^T, ..., x^T)`` of shape ``m x n*m``.

    With ``zeta`` an ``n*m`` vector of unit-variance entries, ``D_X zeta`` has
    the same law as ``M vec(X)`` for an ensemble with variance ``1/m``.
    """

    x: np.ndarray
    m: int

    @classmethod
    def from_tensor(cls, X: Tensor3, m: int) -> "DiagonalizedMeasurement":
        return cls(x=vec(as_tensor3(X)).copy(), m=int(m))

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.x.size * self.m

    def apply(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=np.float64)
        if zeta.shape != (self.shape[1],):
            raise DimMismatch(f"zeta must have length {self.shape[1]}")
        return zeta.reshape(self.m, self.x.size) @ self.x / np.sqrt(self.m)

    def dense(self) -> np.ndarray:
        return np.kron(np.eye(self.m), self.x[None, :]) / np.sqrt(self.m)

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.x))

    def operator_norm(self) -> float:
        return float(np.linalg.norm(self.x) / np.sqrt(self.m))

    def scaled_gram(self) -> np.ndarray:
        """``m * D_X D_X^T``, which equals ``||x||^2 I_m``."""
        return float(self.x @ self.x) * np.eye(self.m)

    def schatten4_pow4(self) -> float:
        """``||D_X||_{S4}^4 = Tr((D_X D_X^T)^2) = ||x||^4 / m``."""
        return float((self.x @ self.x) ** 2 / self.m)
