"""Experiment configuration files (TOML).

Top-level keys mirror :class:`ExperimentConfig`; solver settings live in a
``[solver]`` table.  Example::

    kind = "phase"
    dims = [10, 10, 5]
    ranks = [1]
    distribution = "gaussian"
    sampling_rates = [0.1, 0.2, 0.3]
    trials = 20
    master_seed = 7

    [solver]
    max_iters = 2000
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import tomli
import tomli_w

from ..errors import InvalidConfig
from ..measure import DISTRIBUTIONS
from ..solver import SolverConfig

KINDS = ("phase", "table", "image", "rip", "budget")


def default_sampling_rates() -> list[float]:
    return [round(0.02 * k, 2) for k in range(1, 51)]


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment.

    ``lambda_scale`` sets the regularization weight to
    ``lambda_scale * noise_sigma * sqrt(m)``; with zero noise (or
    ``lambda_scale = 0``) the fixed ``solver.lam`` is used instead.
    ``truth_norm`` is the Frobenius norm of the synthetic ground truth used by
    ``phase`` and ``table`` runs.
    """

    kind: str
    dims: tuple[int, int, int] = (10, 10, 5)
    ranks: tuple[int, ...] = (1,)
    distribution: str = "gaussian"
    sampling_rates: tuple[float, ...] = field(default_factory=lambda: tuple(default_sampling_rates()))
    sizes: tuple[int, ...] = (10,)
    rank_fractions: tuple[float, ...] = (0.1, 0.2, 0.3)
    rho_list: tuple[float, ...] = (1.0, 1.5, 2.0)
    m_grid: tuple[int, ...] = (105, 420, 1680)
    m_list: tuple[int, ...] = (1260, 1638, 1890, 2520)
    trials: int = 50
    noise_sigma: float = 0.01
    truth_norm: float = 1000.0
    lambda_scale: float = 0.3
    samples: int = 100
    repetitions: int = 20
    image_path: str = ""
    truncate_rank: int = 5
    delta: float = 1.0
    epsilon: float = 0.01
    C: float = 1.0
    eps_net: float = 1.0
    c_prime: float = 1.0
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(max_iters=2000, tol=1e-8, continuation=6))
    master_seed: int = 0
    output_path: str = "results"
    workers: int = 1

    def __post_init__(self):
        validate(self)


def validate(cfg: ExperimentConfig) -> None:
    if cfg.kind not in KINDS:
        raise InvalidConfig(f"kind must be one of {KINDS}, got {cfg.kind!r}")
    if len(cfg.dims) != 3 or min(cfg.dims) < 1:
        raise InvalidConfig(f"dims must be three positive integers, got {cfg.dims}")
    if cfg.distribution not in DISTRIBUTIONS:
        raise InvalidConfig(f"distribution must be one of {DISTRIBUTIONS}")
    if cfg.trials < 1 or cfg.samples < 1 or cfg.repetitions < 1 or cfg.workers < 1:
        raise InvalidConfig("trials, samples, repetitions and workers must be >= 1")
    if cfg.noise_sigma < 0 or cfg.lambda_scale < 0 or not cfg.truth_norm > 0:
        raise InvalidConfig("noise_sigma, lambda_scale >= 0 and truth_norm > 0 required")
    required = {
        "phase": ("ranks", "sampling_rates"),
        "table": ("sizes", "rank_fractions", "rho_list"),
        "image": ("m_list",),
        "rip": ("ranks", "m_grid"),
        "budget": ("ranks",),
    }[cfg.kind]
    for name in required:
        if not getattr(cfg, name):
            raise InvalidConfig(f"{name} must be nonempty for kind {cfg.kind!r}")
    if cfg.kind in ("phase", "rip", "budget"):
        n1, n2, _ = cfg.dims
        bad = [r for r in cfg.ranks if not 1 <= r <= min(n1, n2)]
        if bad:
            raise InvalidConfig(f"ranks {bad} out of range for dims {cfg.dims}")
    if cfg.kind == "phase" and any(not 0 < s <= 1 for s in cfg.sampling_rates):
        raise InvalidConfig("sampling rates must lie in (0, 1]")
    if cfg.kind == "rip" and list(cfg.m_grid) != sorted(set(cfg.m_grid)):
        raise InvalidConfig("m_grid must be strictly ascending")


_SOLVER_FIELDS = {f.name for f in fields(SolverConfig)}
_TUPLE_FIELDS = {f.name for f in fields(ExperimentConfig) if str(f.type).startswith("tuple")}


def from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    solver_raw = raw.pop("solver", {})
    if not isinstance(solver_raw, dict):
        raise InvalidConfig("[solver] must be a table")
    unknown = set(solver_raw) - _SOLVER_FIELDS
    if unknown:
        raise InvalidConfig(f"unknown solver keys: {sorted(unknown)}")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    if "kind" not in raw:
        raise InvalidConfig("config needs a 'kind'")
    for name in _TUPLE_FIELDS & set(raw):
        if not isinstance(raw[name], (list, tuple)):
            raise InvalidConfig(f"{name} must be a list")
        raw[name] = tuple(raw[name])
    base = ExperimentConfig(kind=raw["kind"]).solver
    try:
        solver = replace(base, **solver_raw)
        return ExperimentConfig(**raw, solver=solver)
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from exc


def to_dict(cfg: ExperimentConfig) -> dict:
    out = asdict(cfg)
    for name in _TUPLE_FIELDS:
        out[name] = list(out[name])
    return out


def parse(text: str) -> ExperimentConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise InvalidConfig(f"malformed config: {exc}") from exc
    return from_dict(raw)


def emit(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    return parse(text)
