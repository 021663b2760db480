"""Empirical tensor-RIP constants and the measurement-budget calculators.

The empirical constant ``delta_hat`` is a maximum over a finite sample of the
unit low-tubal-rank set, hence only a lower bound on the true constant.
All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .errors import InvalidConfig, InvalidRank
from .measure import MeasurementEnsemble, make_ensemble
from .seeding import derive_rng, derive_seed
from .t_algebra import tprod
from .tensor_core import check_dims, vec


@dataclass(frozen=True)
class RipEstimate:
    delta_hat: float
    r: int
    samples: int
    seed: int
    per_sample_max_dev: float


@dataclass(frozen=True)
class BudgetReport:
    dims: tuple[int, int, int]
    r: int
    delta: float
    epsilon: float
    C: float
    m_bound: int
    covering_log: float
    gamma2_bound: float
    dof: int

    def as_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = "x".join(str(n) for n in self.dims)
        return d


def _check_rank(dims, r: int) -> tuple[int, int, int]:
    n1, n2, n3 = check_dims(dims)
    if not 1 <= int(r) <= min(n1, n2):
        raise InvalidRank(f"rank {r} outside [1, {min(n1, n2)}] for dims {dims}")
    return n1, n2, n3


def _sample_from(rng: np.random.Generator, dims, r: int) -> np.ndarray:
    n1, n2, n3 = dims
    X = tprod(rng.standard_normal((n1, r, n3)), rng.standard_normal((r, n2, n3)))
    return X / np.linalg.norm(X)


def sample_unit_low_tubal_rank(dims, r: int, seed: int = 0) -> np.ndarray:
    """Unit-Frobenius tensor ``A * B`` with standard Gaussian factors of inner size ``r``."""
    dims = _check_rank(dims, r)
    return _sample_from(derive_rng(seed), dims, int(r))


def model_size(dims, r: int) -> int:
    """``r (n1 + n2 + 1) n3``, the measurement count the bounds scale with."""
    n1, n2, n3 = check_dims(dims)
    return int(r) * (n1 + n2 + 1) * n3


def _deviations(E: MeasurementEnsemble, r: int, samples: int, seed: int) -> np.ndarray:
    # sample i depends only on (seed, i): deviations for k samples are a prefix of those for 2k
    # one matvec per sample: a batched product would round differently per batch size
    dev = np.empty(samples)
    for i in range(samples):
        y = E.matrix @ vec(sample_unit_low_tubal_rank(E.dims, r, derive_seed(seed, i)))
        dev[i] = abs(float(y @ y) - 1.0)
    return dev


def estimate_delta(E: MeasurementEnsemble, r: int, samples: int = 100, seed: int = 0) -> RipEstimate:
    _check_rank(E.dims, r)
    if samples < 1:
        raise InvalidConfig("samples must be >= 1")
    dev = _deviations(E, int(r), int(samples), seed)
    top = float(dev.max())
    return RipEstimate(delta_hat=top, r=int(r), samples=int(samples), seed=int(seed), per_sample_max_dev=top)


def dof(dims, r: int) -> int:
    n1, n2, n3 = _check_rank(dims, r)
    return int(r) * (n1 + n2 - int(r)) * n3


def covering_log_bound(dims, r: int, eps_net: float) -> float:
    """Log of the covering-number bound ``(9 / eps)^(r (n1 + n2 + 1) n3)``."""
    if not 0 < eps_net <= 1:
        raise InvalidConfig(f"eps_net must lie in (0, 1], got {eps_net}")
    _check_rank(dims, r)
    return model_size(dims, r) * math.log(9.0 / eps_net)


def gamma2_upper_bound(dims, r: int, m: int, c_prime: float = 1.0) -> float:
    """``c' sqrt(r (n1 + n2 + 1) n3 / m)``; ``c'`` is a reporting convention."""
    if m < 1 or not c_prime > 0:
        raise InvalidConfig("need m >= 1 and c_prime > 0")
    _check_rank(dims, r)
    return c_prime * math.sqrt(model_size(dims, r) / m)


def dudley_gamma2_bound(dims, r: int, m: int) -> float:
    """Dudley integral of the covering bound, evaluated by quadrature.

    ``integral_0^{1/sqrt(m)} sqrt(log N(nu)) dnu`` with
    ``N(nu) = (9 / (sqrt(m) nu))^d``, the operator-norm cover of the lifted
    set derived from the Frobenius cover.  Equals
    ``c_dudley * sqrt(d / m)``, see :data:`DUDLEY_CONSTANT`.
    """
    if m < 1:
        raise InvalidConfig("m must be >= 1")
    _check_rank(dims, r)
    d = model_size(dims, r)
    sm = math.sqrt(m)

    def integrand(nu: float) -> float:
        return math.sqrt(d * math.log(9.0 / (sm * nu)))

    val, _ = integrate.quad(integrand, 0.0, 1.0 / sm, limit=200)
    return val


def _dudley_constant() -> float:
    val, _ = integrate.quad(lambda u: math.sqrt(math.log(9.0 / u)), 0.0, 1.0, limit=200)
    return val


DUDLEY_CONSTANT = _dudley_constant()


def theorem1_budget(dims, r: int, delta: float, epsilon: float, C: float = 1.0, eps_net: float = 1.0) -> BudgetReport:
    """Sufficient measurement count ``ceil(C delta^-2 max(r (n1 + n2 + 1) n3, log(1/eps)))``.

    ``delta = 1`` is accepted so the bound can be read off at the model size.
    """
    if not (0 < delta <= 1 and 0 < epsilon < 1 and C > 0):
        raise InvalidConfig("need 0 < delta <= 1, 0 < epsilon < 1, C > 0")
    dims = _check_rank(dims, r)
    d = model_size(dims, r)
    m_bound = math.ceil(C * max(d, math.log(1.0 / epsilon)) / delta**2)
    return BudgetReport(
        dims=dims,
        r=int(r),
        delta=float(delta),
        epsilon=float(epsilon),
        C=float(C),
        m_bound=int(m_bound),
        covering_log=covering_log_bound(dims, r, eps_net),
        gamma2_bound=gamma2_upper_bound(dims, r, m_bound),
        dof=dof(dims, r),
    )


def recovery_delta_threshold(t: float, n3: int) -> float:
    """RIP level ``sqrt((t - 1) / (n3^2 + t - 1))`` at rank ``t r`` sufficient for robust recovery."""
    if not t > 1 or n3 < 1:
        raise InvalidConfig("need t > 1 and n3 >= 1")
    return math.sqrt((t - 1) / (n3**2 + t - 1))


@dataclass(frozen=True)
class DeltaCurveRow:
    m: int
    r: int
    dims: tuple[int, int, int]
    distribution: str
    median: float
    q10: float
    q90: float
    repetitions: int
    samples: int
    seed: int


def delta_samples(dims, r: int, m: int, distribution: str, samples: int, repetitions: int, seed: int, tag: int = 0) -> np.ndarray:
    """``delta_hat`` for ``repetitions`` independent ensembles of size ``m``."""
    out = np.empty(repetitions)
    for rep in range(repetitions):
        E = make_ensemble(dims, m, distribution, derive_seed(seed, tag, rep, 0))
        out[rep] = estimate_delta(E, r, samples, derive_seed(seed, tag, rep, 1)).delta_hat
    return out


def delta_vs_m_curve(dims, r: int, distribution: str, m_grid, samples: int = 100, repetitions: int = 20, seed: int = 0) -> list[DeltaCurveRow]:
    m_grid = [int(m) for m in m_grid]
    if not m_grid or any(b <= a for a, b in zip(m_grid, m_grid[1:])) or m_grid[0] < 1:
        raise InvalidConfig("m_grid must be a nonempty strictly ascending list of positive ints")
    if repetitions < 1 or samples < 1:
        raise InvalidConfig("repetitions and samples must be >= 1")
    dims = _check_rank(dims, r)
    rows = []
    for m in m_grid:
        vals = delta_samples(dims, r, m, distribution, samples, repetitions, seed, tag=m)
        q10, med, q90 = np.quantile(vals, [0.1, 0.5, 0.9])
        rows.append(DeltaCurveRow(m=m, r=int(r), dims=dims, distribution=distribution,
                                  median=float(med), q10=float(q10), q90=float(q90),
                                  repetitions=repetitions, samples=samples, seed=int(seed)))
    return rows


def calibrate_constant(dims, r: int, delta: float, epsilon: float, m_grid, distribution: str = "gaussian",
                       samples: int = 100, repetitions: int = 20, seed: int = 0) -> tuple[int, float] | None:
    """Smallest ``m`` on ``m_grid`` with ``delta_hat <= delta`` in at least ``1 - epsilon``
    of the repetitions, and the constant ``C`` that ``theorem1_budget`` would need to
    return it.  ``None`` if no grid point qualifies.

    Because ``delta_hat`` underestimates the true constant, so does the returned ``C``.
    """
    if not (0 < delta <= 1 and 0 < epsilon < 1):
        raise InvalidConfig("need 0 < delta <= 1 and 0 < epsilon < 1")
    dims = _check_rank(dims, r)
    scale = max(model_size(dims, r), math.log(1.0 / epsilon))
    for m in sorted(int(v) for v in m_grid):
        vals = delta_samples(dims, r, m, distribution, samples, repetitions, seed, tag=m)
        if np.mean(vals <= delta) >= 1 - epsilon:
            return m, m * delta**2 / scale
    return None
