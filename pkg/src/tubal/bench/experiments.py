"""Experiment runners behind the CLI.

Each runner writes its CSV outputs into ``out_dir`` and returns the path of
the main CSV.  CSV files start with a single ``# generated ...`` line; the
rest of the file is a deterministic function of the config.  Per-trial wall
times go to ``timings.csv``, the only output that is not reproducible.

Seeds: trial ``t`` of rank ``r`` at dims ``(n1, n2, n3)`` uses the stream
``derive_seed(master_seed, n1, n2, n3, r, t)``; its children 0, 1 and 2 drive
the ground truth, the ensemble and the noise.  They do not depend on ``m``,
so the runs for different sampling rates share ground truth, noise prefix
and the leading rows of the measurement matrix.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__
from ..measure import make_ensemble, noisy_measure
from ..rip import (
    delta_vs_m_curve,
    dudley_gamma2_bound,
    gamma2_upper_bound,
    model_size,
    sample_unit_low_tubal_rank,
    theorem1_budget,
)
from ..seeding import derive_seed
from ..solver import SolverConfig, rel_error, solve_rtnnm
from ..t_algebra import truncate_tubal_rank, tubal_rank
from ..tensor_core import write_t3f
from .config import ExperimentConfig, emit
from .images import read_ppm, synthetic_logo, write_ppm

SUCCESS_THRESHOLD = 1e-3
STAMP_PREFIX = "# generated"


@dataclass(frozen=True)
class TrialRecord:
    experiment: str
    dims: tuple[int, int, int]
    r: int
    m: int
    trial: int
    seed: int
    rel_error: float
    success: bool
    wall_time: float


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def choose_lambda(cfg: ExperimentConfig, m: int) -> float:
    if cfg.lambda_scale > 0 and cfg.noise_sigma > 0:
        return cfg.lambda_scale * cfg.noise_sigma * math.sqrt(m)
    return cfg.solver.lam


def solver_for(cfg: ExperimentConfig, m: int) -> SolverConfig:
    return replace(cfg.solver, lam=choose_lambda(cfg, m))


# --- trials -----------------------------------------------------------------

def run_trial(cfg: ExperimentConfig, dims, r: int, m: int, trial: int) -> TrialRecord:
    """One (ground truth, ensemble, noise) recovery at measurement count ``m``."""
    start = time.perf_counter()
    seed = derive_seed(cfg.master_seed, *dims, r, trial)
    X = cfg.truth_norm * sample_unit_low_tubal_rank(dims, r, derive_seed(seed, 0))
    E = make_ensemble(dims, m, cfg.distribution, derive_seed(seed, 1))
    y = noisy_measure(E, X, cfg.noise_sigma, derive_seed(seed, 2))
    err = rel_error(solve_rtnnm(E, y, solver_for(cfg, m)).X_hat, X)
    return TrialRecord(
        experiment=cfg.kind, dims=tuple(dims), r=r, m=m, trial=trial, seed=seed,
        rel_error=err, success=err < SUCCESS_THRESHOLD,
        wall_time=time.perf_counter() - start,
    )


def _trial_task(args) -> TrialRecord:
    return run_trial(*args)


def run_trials(cfg: ExperimentConfig, tasks: list[tuple]) -> list[TrialRecord]:
    """Run ``(dims, r, m, trial)`` tasks, possibly in parallel, sorted deterministically."""
    payload = [(cfg, *t) for t in tasks]
    if cfg.workers > 1 and len(payload) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_trial_task, payload))
    else:
        records = [_trial_task(p) for p in payload]
    return sorted(records, key=lambda rec: (rec.dims, rec.r, rec.m, rec.trial))


# --- output -----------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, tuple):
        return "x".join(str(v) for v in value)
    return str(value)


def write_csv(path: Path, header: list[str], rows, stamp: bool = True) -> Path:
    buf = io.StringIO()
    if stamp:
        now = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        buf.write(f"{STAMP_PREFIX} {now} by tubal {__version__}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def read_csv(path) -> list[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def csv_digest(path) -> str:
    """SHA-256 of a CSV file with the timestamp line removed."""
    text = Path(path).read_text()
    body = "".join(ln for ln in text.splitlines(keepends=True) if not ln.startswith(STAMP_PREFIX))
    return hashlib.sha256(body.encode()).hexdigest()


def _write_trials(out: Path, records: list[TrialRecord]) -> None:
    header = ["experiment", "dims", "r", "m", "trial", "seed", "rel_error", "success"]
    write_csv(out / "trials.csv", header,
              ([getattr(rec, h) for h in header] for rec in records))
    write_csv(out / "timings.csv", ["dims", "r", "m", "trial", "wall_time"],
              ((rec.dims, rec.r, rec.m, rec.trial, rec.wall_time) for rec in records))


_PLOT_STUBS = {
    "phase": """\
df = pd.read_csv("phase.csv", comment="#")
for (dist, r), grp in df.groupby(["distribution", "r"]):
    plt.plot(grp.sampling_rate, grp.success_rate, marker="o", label=f"{dist} r={r}")
    plt.axvline(grp.theory_rate.iloc[0], linestyle="--", color="gray")
plt.xlabel("sampling rate m/(n1 n2 n3)")
plt.ylabel("success rate")
""",
    "table": """\
df = pd.read_csv("table_long.csv", comment="#")
for (n, r), grp in df.groupby(["n", "r"]):
    plt.semilogy(grp.rho, grp.mean_rel_error, marker="o", label=f"n={n} r={r}")
plt.xlabel("rho")
plt.ylabel("mean RelError")
""",
    "image": """\
df = pd.read_csv("image.csv", comment="#")
plt.semilogy(df.m, df.rel_error, marker="o")
plt.xlabel("m")
plt.ylabel("RelError")
""",
    "rip": """\
df = pd.read_csv("rip.csv", comment="#")
for r, grp in df.groupby("r"):
    plt.loglog(grp.m, grp.delta_hat_median, marker="o", label=f"r={r}")
    plt.fill_between(grp.m, grp.delta_hat_q10, grp.delta_hat_q90, alpha=0.2)
plt.xlabel("m")
plt.ylabel("delta_hat")
""",
}


def _write_extras(out: Path, cfg: ExperimentConfig) -> None:
    (out / "config.toml").write_text(emit(cfg))
    body = _PLOT_STUBS.get(cfg.kind)
    if body:
        script = (
            "# Plot stub generated by tubal; requires pandas and matplotlib.\n"
            "import matplotlib.pyplot as plt\nimport pandas as pd\n\n"
            + body + f'plt.legend()\nplt.savefig("{cfg.kind}.png", dpi=150)\n'
        )
        (out / f"plot_{cfg.kind}.py").write_text(script)


def _prepare(out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- experiments ------------------------------------------------------------

def run_phase(cfg: ExperimentConfig, out_dir) -> Path:
    """Success rate versus sampling rate for every rank in ``cfg.ranks``."""
    out = _prepare(out_dir)
    dims = tuple(cfg.dims)
    n = dims[0] * dims[1] * dims[2]
    cells = [(r, rate, max(1, round_half_up(rate * n))) for r in cfg.ranks for rate in cfg.sampling_rates]
    tasks = [(dims, r, m, t) for r, m in sorted({(r, m) for r, _, m in cells}) for t in range(cfg.trials)]
    by_cell: dict[tuple[int, int], list[TrialRecord]] = {}
    for rec in run_trials(cfg, tasks):
        by_cell.setdefault((rec.r, rec.m), []).append(rec)
    rows = []
    for r, rate, m in sorted(cells):
        recs = by_cell[(r, m)]
        theory = model_size(dims, r)
        rows.append((cfg.distribution, r, rate, m, float(np.mean([x.success for x in recs])),
                     float(np.mean([x.rel_error for x in recs])), theory, theory / n, len(recs)))
    header = ["distribution", "r", "sampling_rate", "m", "success_rate", "mean_rel_error",
              "theory_m", "theory_rate", "trials"]
    path = write_csv(out / "phase.csv", header, rows)
    _write_trials(out, [rec for recs in by_cell.values() for rec in recs])
    _write_extras(out, cfg)
    return path


def table_cells(cfg: ExperimentConfig) -> list[tuple[float, int, int, float, int]]:
    """``(rank_fraction, n, r, rho, m)`` for every cell of the error table."""
    n3 = cfg.dims[2]
    cells = []
    for frac in cfg.rank_fractions:
        for n in cfg.sizes:
            r = max(1, round_half_up(frac * n))
            for rho in cfg.rho_list:
                cells.append((frac, n, r, rho, round_half_up(rho * model_size((n, n, n3), r))))
    return cells


def run_table(cfg: ExperimentConfig, out_dir) -> Path:
    """Mean RelError over trials for ``m = rho r (2n + 1) n3`` measurements."""
    out = _prepare(out_dir)
    n3 = cfg.dims[2]
    cells = table_cells(cfg)
    tasks = sorted({((n, n, n3), r, m, t) for _, n, r, _, m in cells for t in range(cfg.trials)})
    by_cell: dict[tuple[int, int, int], list[TrialRecord]] = {}
    for rec in run_trials(cfg, tasks):
        by_cell.setdefault((rec.dims[0], rec.r, rec.m), []).append(rec)

    long_rows = []
    wide: dict[tuple[float, int, int], list] = {}
    for frac, n, r, rho, m in cells:
        errs = [rec.rel_error for rec in by_cell[(n, r, m)]]
        mean = float(np.mean(errs))
        long_rows.append((frac, n, r, rho, m, mean, float(np.std(errs)),
                          float(np.mean([e < SUCCESS_THRESHOLD for e in errs])), len(errs)))
        wide.setdefault((frac, n, r), []).extend([m, mean])
    write_csv(out / "table_long.csv",
              ["rank_fraction", "n", "r", "rho", "m", "mean_rel_error", "std_rel_error",
               "success_rate", "trials"], long_rows)
    header = ["rank_fraction", "n", "r"]
    for rho in cfg.rho_list:
        header += [f"m_rho{rho:g}", f"rel_error_rho{rho:g}"]
    path = write_csv(out / "table.csv", header, [list(k) + v for k, v in wide.items()])
    _write_trials(out, [rec for recs in by_cell.values() for rec in recs])
    _write_extras(out, cfg)
    return path


def load_image(cfg: ExperimentConfig, image_path=None) -> np.ndarray:
    path = image_path or cfg.image_path
    image = read_ppm(path) if path else synthetic_logo()
    if cfg.truncate_rank > 0:
        image = truncate_tubal_rank(image, cfg.truncate_rank)
    return image


def run_image(cfg: ExperimentConfig, out_dir, image_path=None) -> Path:
    """Recover an RGB image (channels as frontal slices) from ``m`` measurements each."""
    out = _prepare(out_dir)
    X = load_image(cfg, image_path)
    dims = X.shape
    r = tubal_rank(X)
    base = model_size(dims, r) if r else 0
    write_ppm(out / "truth.ppm", X)
    write_t3f(out / "truth.t3f", X)
    rows = []
    timings = []
    for m in cfg.m_list:
        start = time.perf_counter()
        seed = derive_seed(cfg.master_seed, m)
        E = make_ensemble(dims, m, cfg.distribution, derive_seed(seed, 1))
        y = noisy_measure(E, X, cfg.noise_sigma, derive_seed(seed, 2))
        res = solve_rtnnm(E, y, solver_for(cfg, m))
        err = rel_error(res.X_hat, X)
        write_ppm(out / f"recovered_m{m}.ppm", res.X_hat)
        write_t3f(out / f"recovered_m{m}.t3f", res.X_hat)
        rows.append((m, m / base if base else 0.0, r, err, res.iterations, seed))
        timings.append((dims, r, m, 0, time.perf_counter() - start))
    path = write_csv(out / "image.csv", ["m", "m_over_model_size", "tubal_rank", "rel_error",
                                         "iterations", "seed"], rows)
    write_csv(out / "timings.csv", ["dims", "r", "m", "trial", "wall_time"], timings)
    _write_extras(out, cfg)
    return path


def run_rip(cfg: ExperimentConfig, out_dir) -> Path:
    """Empirical ``delta_hat`` quantiles over ``cfg.m_grid`` for each rank."""
    out = _prepare(out_dir)
    rows = []
    for r in cfg.ranks:
        curve = delta_vs_m_curve(cfg.dims, r, cfg.distribution, cfg.m_grid, cfg.samples,
                                 cfg.repetitions, derive_seed(cfg.master_seed, r))
        for row in curve:
            rows.append((row.m, row.r, row.dims, row.distribution, row.median, row.q10, row.q90,
                         row.repetitions, row.samples, row.seed))
    header = ["m", "r", "dims", "distribution", "delta_hat_median", "delta_hat_q10",
              "delta_hat_q90", "repetitions", "samples", "seed"]
    path = write_csv(out / "rip.csv", header, rows)
    _write_extras(out, cfg)
    return path


def run_budget(cfg: ExperimentConfig, out_dir) -> Path:
    """Measurement bound, covering number, gamma_2 bounds and degrees of freedom per rank."""
    out = _prepare(out_dir)
    rows = []
    lines = [
        "Measurement budget report",
        f"dims = {tuple(cfg.dims)}, delta = {cfg.delta}, epsilon = {cfg.epsilon}, "
        f"C = {cfg.C}, eps_net = {cfg.eps_net}, c_prime = {cfg.c_prime}",
        "",
    ]
    for r in cfg.ranks:
        rep = theorem1_budget(cfg.dims, r, cfg.delta, cfg.epsilon, cfg.C, cfg.eps_net)
        g2 = gamma2_upper_bound(cfg.dims, r, rep.m_bound, cfg.c_prime)
        dud = dudley_gamma2_bound(cfg.dims, r, rep.m_bound)
        size = model_size(cfg.dims, r)
        rows.append((rep.dims, r, rep.delta, rep.epsilon, rep.C, size, rep.m_bound, rep.dof,
                     rep.covering_log, g2, dud))
        lines.append(
            f"r = {r}: r(n1+n2+1)n3 = {size}, m_bound = {rep.m_bound}, dof = {rep.dof}, "
            f"log covering = {rep.covering_log:.6g}, gamma2 bound = {g2:.6g} "
            f"(Dudley quadrature {dud:.6g})"
        )
    header = ["dims", "r", "delta", "epsilon", "C", "model_size", "m_bound", "dof",
              "covering_log", "gamma2_bound", "gamma2_dudley"]
    path = write_csv(out / "budget.csv", header, rows)
    (out / "budget.txt").write_text("\n".join(lines) + "\n")
    _write_extras(out, cfg)
    return path


RUNNERS = {
    "phase": run_phase,
    "table": run_table,
    "image": run_image,
    "rip": run_rip,
    "budget": run_budget,
}


def run(cfg: ExperimentConfig, out_dir) -> Path:
    return RUNNERS[cfg.kind](cfg, out_dir)

