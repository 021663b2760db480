"""Regularized tensor nuclear norm minimization.

Minimizes ``F(X) = ||X||_TNN + (1 / (2 lam)) ||y - M vec(X)||^2`` with an
accelerated proximal-gradient (FISTA) iteration: a gradient step on the
quadratic term with step ``1/L``, ``L = 1.01 ||M||^2 / lam``, followed by
:func:`tsvt` with threshold equal to the step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimMismatch, InvalidConfig, NonFinite, ZeroReference
from .measure import MeasurementEnsemble, adjoint, apply, operator_norm_sq
from .t_algebra import tnn, tsvt_with_norm
from .tensor_core import Tensor3, as_tensor3, frobenius_norm

LIPSCHITZ_PAD = 1.01


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``restart`` resets the momentum whenever the objective increases, which
    keeps the accelerated iteration from oscillating on well-conditioned
    problems.  ``continuation`` runs that many warm-started stages with ``lam``
    decreasing geometrically from ``lam * continuation_factor**(stages-1)``
    down to ``lam``; ``0`` or ``1`` solves at ``lam`` directly.
    """

    lam: float = 1.0
    max_iters: int = 500
    tol: float = 1e-7
    step_scale: float = 1.0
    acceleration: bool = True
    restart: bool = True
    continuation: int = 0
    continuation_factor: float = 10.0

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise InvalidConfig(f"lam must be positive and finite, got {self.lam}")
        if not 0 < self.tol < 1:
            raise InvalidConfig(f"tol must lie in (0, 1), got {self.tol}")
        if not 0 < self.step_scale <= 1:
            raise InvalidConfig(f"step_scale must lie in (0, 1], got {self.step_scale}")
        if self.max_iters < 1:
            raise InvalidConfig("max_iters must be >= 1")
        if self.continuation < 0 or self.continuation_factor <= 1:
            raise InvalidConfig("continuation must be >= 0 and continuation_factor > 1")


@dataclass
class SolveResult:
    X_hat: Tensor3
    iterations: int
    objective_trace: list[float] = field(default_factory=list)
    rel_change_final: float = math.inf
    converged: bool = False
    step: float = 0.0


def rel_error(X_hat: Tensor3, X: Tensor3) -> float:
    ref = frobenius_norm(X)
    if ref == 0:
        raise ZeroReference("reference tensor has zero norm")
    X_hat, X = np.asarray(X_hat), np.asarray(X)
    if X_hat.shape != X.shape:
        raise DimMismatch(f"shapes differ: {X_hat.shape} vs {X.shape}")
    return frobenius_norm(X_hat - X) / ref


def _check_y(E: MeasurementEnsemble, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (E.m,):
        raise DimMismatch(f"y must have length {E.m}, got shape {y.shape}")
    return y


def objective(E: MeasurementEnsemble, y, X: Tensor3, lam: float) -> float:
    y = _check_y(E, y)
    res = y - apply(E, X)
    return tnn(X) + float(res @ res) / (2.0 * lam)


def smooth_gradient(E: MeasurementEnsemble, y, X: Tensor3, lam: float) -> Tensor3:
    """Gradient of ``(1 / (2 lam)) ||y - M vec(X)||^2``."""
    return adjoint(E, apply(E, X) - y) / lam


def _fista(E, y, lam, step, X0, cfg: SolverConfig, max_iters: int):
    X = X0
    Z = X0
    t = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        res = y - apply(E, X)
        f_prev = tnn(X) + float(res @ res) / (2.0 * lam)
    trace = []
    best = (f_prev, X)
    rel = math.inf
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            V = Z - step * adjoint(E, apply(E, Z) - y) / lam
        if not np.all(np.isfinite(V)):
            raise NonFinite(f"gradient step became non-finite at iteration {it}; reduce step_scale")
        X_new, norm = tsvt_with_norm(V, step)
        with np.errstate(over="ignore", invalid="ignore"):
            res = y - apply(E, X_new)
            f = norm + float(res @ res) / (2.0 * lam)
        if not math.isfinite(f):
            raise NonFinite(f"objective became {f} at iteration {it}; reduce step_scale")
        trace.append(f)
        if f < best[0]:
            best = (f, X_new)
        rel = frobenius_norm(X_new - X) / max(1.0, frobenius_norm(X))
        if cfg.acceleration:
            if cfg.restart and f > f_prev:
                t = 1.0
                Z = X_new
            else:
                t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
                Z = X_new + ((t - 1.0) / t_new) * (X_new - X)
                t = t_new
        else:
            Z = X_new
        X = X_new
        f_prev = f
        if rel < cfg.tol:
            converged = True
            break
    return X, best, trace, it, rel, converged


def solve_rtnnm(E: MeasurementEnsemble, y, cfg: SolverConfig | None = None, X0: Tensor3 | None = None) -> SolveResult:
    """Minimize ``||X||_TNN + (1 / (2 cfg.lam)) ||y - M vec(X)||^2``.

    Starts from ``X0`` (zero by default) and returns the iterate with the
    lowest objective.  ``max_iters`` bounds every continuation stage.
    """
    cfg = cfg or SolverConfig()
    y = _check_y(E, y)
    X = np.zeros(E.dims) if X0 is None else as_tensor3(X0).copy()
    if X.shape != tuple(E.dims):
        raise DimMismatch(f"X0 dims {X.shape} do not match {E.dims}")
    with np.errstate(over="ignore"):
        norm_sq = operator_norm_sq(E, rtol=1e-10, method="lanczos")
    if not math.isfinite(norm_sq):
        raise NonFinite("operator norm of the measurement matrix overflows")
    if norm_sq == 0:
        return SolveResult(X_hat=X * 0, iterations=0, converged=True)

    stages = max(cfg.continuation, 1)
    lams = [cfg.lam * cfg.continuation_factor ** (stages - 1 - s) for s in range(stages)]
    trace: list[float] = []
    total = 0
    for lam in lams:
        step = cfg.step_scale * lam / (LIPSCHITZ_PAD * norm_sq)
        X, best, stage_trace, its, rel, converged = _fista(E, y, lam, step, X, cfg, cfg.max_iters)
        total += its
        trace.extend(stage_trace)
    return SolveResult(X_hat=best[1], iterations=total, objective_trace=trace,
                       rel_change_final=rel, converged=converged, step=step)


def fixed_point_residual(E: MeasurementEnsemble, y, X: Tensor3, lam: float, step: float) -> float:
    """``||X - tsvt(X - step grad g(X), step)||_F / max(1, ||X||_F)``."""
    y = _check_y(E, y)
    P, _ = tsvt_with_norm(X - step * smooth_gradient(E, y, X, lam), step)
    return frobenius_norm(P - X) / max(1.0, frobenius_norm(X))


def with_lambda(cfg: SolverConfig, lam: float) -> SolverConfig:
    return replace(cfg, lam=lam)
